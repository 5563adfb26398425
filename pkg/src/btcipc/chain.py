"""Deterministic simulated Bitcoin chain.

A stand-in for Bitcoin Core: blocks are mined on demand, transactions pass
UTXO discipline and the 100,000 vB standardness cap, and finalization is
depth-k confirmation (k = 1 by default). Wire formats match the real chain
so replacing this with an RPC adapter would not change any caller.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DoubleSpend, InvalidTransaction, OversizedTx
from .tx import (
    MAX_STANDARD_TX_VBYTES,
    Transaction,
    TxOutput,
    p2wpkh_script,
)


@dataclass(frozen=True)
class Block:
    height: int
    transactions: tuple[Transaction, ...]


class SimChain:
    """Append-only block list, mempool, and live UTXO set."""

    def __init__(self, max_tx_vbytes: int = MAX_STANDARD_TX_VBYTES,
                 finalization_depth: int = 1):
        self.max_tx_vbytes = max_tx_vbytes
        self.finalization_depth = finalization_depth
        self.blocks: list[Block] = []
        self.mempool: list[Transaction] = []
        self.utxo_set: dict[tuple[bytes, int], TxOutput] = {}
        self._mempool_spends: set[tuple[bytes, int]] = set()
        self._mempool_outputs: dict[tuple[bytes, int], TxOutput] = {}
        self._tx_index: dict[bytes, Transaction] = {}
        self._coinbase_counter = 0

    @property
    def height(self) -> int:
        return len(self.blocks)

    def finalized_height(self) -> int:
        """Number of finalized blocks: a block counts once it has at least
        finalization_depth confirmations (the tip has one)."""
        return max(self.height - self.finalization_depth + 1, 0)

    def get_tx(self, txid: bytes) -> Transaction | None:
        return self._tx_index.get(txid)

    def submit(self, tx: Transaction) -> bytes:
        """Validate against the UTXO set and queue for the next block."""
        if tx.vbytes > self.max_tx_vbytes:
            raise OversizedTx(f"{tx.vbytes} vB exceeds the {self.max_tx_vbytes} vB cap")
        if not tx.inputs:
            raise InvalidTransaction("non-coinbase transaction needs inputs")
        seen: set[tuple[bytes, int]] = set()
        total_in = 0
        for txin in tx.inputs:
            op = txin.outpoint
            if op in seen:
                raise DoubleSpend("transaction spends the same outpoint twice")
            seen.add(op)
            # Mempool-chained spends (commit then reveal) are allowed.
            prevout = self.utxo_set.get(op) or self._mempool_outputs.get(op)
            if prevout is None:
                raise DoubleSpend(f"outpoint {op[0].hex()[:16]}:{op[1]} is not unspent")
            if op in self._mempool_spends:
                raise DoubleSpend("outpoint already spent by a mempool transaction")
            total_in += prevout.value
        if tx.output_value() > total_in:
            raise InvalidTransaction("outputs exceed input value")
        self.mempool.append(tx)
        self._mempool_spends.update(seen)
        txid = tx.txid
        for vout, txout in enumerate(tx.outputs):
            self._mempool_outputs[(txid, vout)] = txout
        return txid

    def submit_all(self, txs) -> list[bytes]:
        return [self.submit(tx) for tx in txs]

    def mine_block(self) -> Block:
        block = Block(self.height, tuple(self.mempool))
        self.mempool = []
        self._mempool_spends = set()
        self._mempool_outputs = {}
        for tx in block.transactions:
            txid = tx.txid
            self._tx_index[txid] = tx
            for txin in tx.inputs:
                self.utxo_set.pop(txin.outpoint, None)
            for vout, txout in enumerate(tx.outputs):
                self.utxo_set[(txid, vout)] = txout
        self.blocks.append(block)
        return block

    def mine_blocks(self, n: int) -> None:
        for _ in range(n):
            self.mine_block()

    def fund(self, value: int, script_pubkey: bytes | None = None) -> tuple[bytes, int]:
        """Faucet: mine a coinbase-style transaction paying *value* to the
        given script (default: an all-zero P2WPKH) and return its outpoint."""
        if script_pubkey is None:
            script_pubkey = p2wpkh_script(bytes(20))
        # Unique txid per grant via the locktime nonce; no inputs to validate.
        tx = Transaction(inputs=(), outputs=(TxOutput(value, script_pubkey),),
                         locktime=self._coinbase_counter)
        self._coinbase_counter += 1
        # Mine the grant alone so pending mempool transactions stay pending.
        saved = (self.mempool, self._mempool_spends, self._mempool_outputs)
        self.mempool, self._mempool_spends, self._mempool_outputs = [tx], set(), {}
        self.mine_block()
        self.mempool, self._mempool_spends, self._mempool_outputs = saved
        return (tx.txid, 0)

    def unspent_value(self, outpoint: tuple[bytes, int]) -> int:
        return self.utxo_set[outpoint].value
