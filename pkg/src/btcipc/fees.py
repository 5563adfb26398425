"""Fee-rate estimation, coin selection, and UTXO consolidation.

The fee oracle mirrors the smart-fee RPC contract: it quotes sat/vKB for a
confirmation target and mode, and the estimator converts to sat/vB. Two
implementations exist, a constant rate for benchmarks and a per-block
schedule loaded from CSV.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import InsufficientFunds, OracleUnavailable
from .tx import FundingUtxo, SignerSpec, Transaction, build_consolidation


class FeeMode(Enum):
    ECONOMICAL = "economical"
    CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class FeeQuote:
    fee_rate: int  # sat per vbyte
    target_blocks: int
    mode: FeeMode
    degraded: bool = False  # True when the oracle was unreachable


class ConstantFeeOracle:
    """Fixed-rate oracle, configured in sat/vB (the benchmark default)."""

    def __init__(self, sat_per_vb: int = 200):
        self.sat_per_vb = sat_per_vb

    def estimate_smart_fee(self, target_blocks: int, mode: FeeMode) -> int:
        return self.sat_per_vb * 1000  # contract quotes sat/vKB


class ScheduledFeeOracle:
    """Per-block fee schedule; the quote follows the highest entry at or
    below the current height."""

    def __init__(self, schedule: list[tuple[int, int]], height: int = 0):
        self.schedule = sorted(schedule)
        self.height = height

    @classmethod
    def from_csv(cls, path: str | Path) -> "ScheduledFeeOracle":
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#") or row[0] == "block_height":
                    continue
                rows.append((int(row[0]), int(row[1])))
        return cls(rows)

    def estimate_smart_fee(self, target_blocks: int, mode: FeeMode) -> int:
        applicable = [rate for h, rate in self.schedule if h <= self.height]
        if not applicable:
            raise OracleUnavailable("no schedule entry at or below current height")
        return applicable[-1] * 1000


def estimate_fee_rate(oracle, target_blocks: int = 6,
                      mode: FeeMode = FeeMode.ECONOMICAL,
                      floor_rate: int = 1) -> FeeQuote:
    """Positive sat/vB quote; falls back to the floor rate, flagged as
    degraded, when the oracle is unreachable."""
    try:
        per_vkb = oracle.estimate_smart_fee(target_blocks, mode)
    except OracleUnavailable:
        return FeeQuote(floor_rate, target_blocks, mode, degraded=True)
    return FeeQuote(max(per_vkb // 1000, 1), target_blocks, mode)


@dataclass(frozen=True)
class Utxo:
    outpoint: tuple[bytes, int]
    value: int
    owner: str = ""  # address descriptor
    confirmation_height: int = 0

    def as_funding(self) -> FundingUtxo:
        return FundingUtxo(self.outpoint[0], self.outpoint[1], self.value)


def select_coins(utxos: list[Utxo], target: int) -> list[Utxo]:
    """Greedy selection in decreasing order of value (ties broken by
    outpoint bytes); returns the minimal prefix whose sum covers target."""
    ordered = sorted(utxos, key=lambda u: (-u.value, u.outpoint))
    selected = []
    total = 0
    for utxo in ordered:
        selected.append(utxo)
        total += utxo.value
        if total >= target:
            return selected
    raise InsufficientFunds(f"UTXOs sum to {total} sat, below target {target}")


def consolidate(utxos: list[Utxo], signers: SignerSpec, leaf_script,
                new_owner_script: bytes, fee_rate: int) -> Transaction:
    """Sweep every UTXO a subnet owns into one output locked by the new
    configuration multisig, so retired validators keep no spend rights."""
    return build_consolidation([u.as_funding() for u in utxos], signers,
                               leaf_script, new_owner_script, fee_rate)
