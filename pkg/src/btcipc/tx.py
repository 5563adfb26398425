"""Bitcoin transaction construction and BIP 141 weight accounting.

All builders are pure: given explicit funding outpoints, payloads and a fee
rate they return fully serialized transactions with correctly sized witness
placeholders (72-byte DER for wallet key spends, 64-byte Schnorr per multisig
signer), so vbyte and fee figures are exact without real key material.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .address import control_block, tap_commitment
from .codec import (
    CheckpointPayload,
    SubnetParams,
    TransferBatch,
    ValidatorData,
    encode_checkpoint_payload,
    encode_deposit_payload,
    encode_subnet_params,
    encode_transfer_batch,
    encode_validator_data,
    DepositPayload,
)
from .errors import (
    BatchTooLarge,
    CollateralTooLow,
    InsufficientAmount,
    InsufficientFunds,
    InsufficientSubnetFunds,
    TooManyWithdrawals,
)
from .script import Script, build_data_script, build_op_return_script

MAX_STANDARD_TX_VBYTES = 100_000
DUST_P2TR = 330  # Core dust threshold for a 43-byte taproot output at 3 sat/vB
MAX_WITHDRAWALS_PER_BUNDLE = 255

ECDSA_SIG_PLACEHOLDER = bytes(72)  # DER signature incl. sighash byte
PUBKEY_PLACEHOLDER = bytes(33)
SCHNORR_SIG_PLACEHOLDER = bytes(64)  # default sighash, no trailing byte


def compact_size(n: int) -> bytes:
    if n < 0xFD:
        return bytes([n])
    if n <= 0xFFFF:
        return b"\xfd" + n.to_bytes(2, "little")
    if n <= 0xFFFFFFFF:
        return b"\xfe" + n.to_bytes(4, "little")
    return b"\xff" + n.to_bytes(8, "little")


def p2wpkh_script(pubkey_hash: bytes) -> bytes:
    assert len(pubkey_hash) == 20
    return b"\x00\x14" + pubkey_hash


def p2tr_script(program: bytes) -> bytes:
    assert len(program) == 32
    return b"\x51\x20" + program


def op_return_script(payload: bytes) -> bytes:
    return build_op_return_script(payload).serialize()


def subnet_lock_script(subnet_address: bytes) -> bytes:
    """Taproot output that locks value to a target subnet, keyed by its
    20-byte address."""
    program = hashlib.sha256(b"btcipc/subnet-lock" + subnet_address).digest()
    return p2tr_script(program)


@dataclass(frozen=True)
class TxOutput:
    value: int
    script_pubkey: bytes

    def serialize(self) -> bytes:
        return (self.value.to_bytes(8, "little")
                + compact_size(len(self.script_pubkey)) + self.script_pubkey)


@dataclass(frozen=True)
class TxInput:
    txid: bytes
    vout: int
    witness: tuple[bytes, ...] = ()
    sequence: int = 0xFFFFFFFF

    @property
    def outpoint(self) -> tuple[bytes, int]:
        return (self.txid, self.vout)

    def serialize_base(self) -> bytes:
        return (self.txid + self.vout.to_bytes(4, "little")
                + b"\x00"  # empty scriptSig under segwit
                + self.sequence.to_bytes(4, "little"))

    def serialize_witness(self) -> bytes:
        out = compact_size(len(self.witness))
        for item in self.witness:
            out += compact_size(len(item)) + item
        return out


@dataclass(frozen=True)
class Transaction:
    inputs: tuple[TxInput, ...]
    outputs: tuple[TxOutput, ...]
    version: int = 2
    locktime: int = 0

    @property
    def has_witness(self) -> bool:
        return any(i.witness for i in self.inputs)

    def serialize(self, include_witness: bool = True) -> bytes:
        out = bytearray(self.version.to_bytes(4, "little"))
        witness = include_witness and self.has_witness
        if witness:
            out += b"\x00\x01"  # segwit marker and flag
        out += compact_size(len(self.inputs))
        for txin in self.inputs:
            out += txin.serialize_base()
        out += compact_size(len(self.outputs))
        for txout in self.outputs:
            out += txout.serialize()
        if witness:
            for txin in self.inputs:
                out += txin.serialize_witness()
        out += self.locktime.to_bytes(4, "little")
        return bytes(out)

    @property
    def base_size(self) -> int:
        return len(self.serialize(include_witness=False))

    @property
    def total_size(self) -> int:
        return len(self.serialize())

    @property
    def weight(self) -> int:
        return self.base_size * 3 + self.total_size

    @property
    def vbytes(self) -> int:
        return -(-self.weight // 4)

    @property
    def txid(self) -> bytes:
        return hashlib.sha256(
            hashlib.sha256(self.serialize(include_witness=False)).digest()
        ).digest()

    def input_value(self, lookup) -> int:
        return sum(lookup(i.outpoint).value for i in self.inputs)

    def output_value(self) -> int:
        return sum(o.value for o in self.outputs)


def compute_weight(tx: Transaction) -> tuple[int, int]:
    return tx.weight, tx.vbytes


def _ceil_fee(vbytes: int, fee_rate: int) -> int:
    # Integral sat/vB rates throughout, so ceil(vbytes * rate) is exact.
    return vbytes * fee_rate


@dataclass(frozen=True)
class FundingUtxo:
    """A wallet-owned P2WPKH output used to fund user-side transactions."""
    txid: bytes
    vout: int
    value: int

    @property
    def outpoint(self) -> tuple[bytes, int]:
        return (self.txid, self.vout)


def wallet_input(utxo: FundingUtxo) -> TxInput:
    return TxInput(utxo.txid, utxo.vout,
                   witness=(ECDSA_SIG_PLACEHOLDER, PUBKEY_PLACEHOLDER))


@dataclass(frozen=True)
class SignerSpec:
    """Witness shape of a subnet multisig spend: n keys, k-of-n leaf script,
    and how many signature placeholders are attached."""
    pubkeys: tuple[bytes, ...]
    threshold: int
    signer_count: int

    @classmethod
    def equal_weight(cls, n_validators: int) -> "SignerSpec":
        keys = tuple(
            hashlib.sha256(b"btcipc/validator-key" + i.to_bytes(4, "big")).digest()
            for i in range(n_validators)
        )
        quorum = -(-2 * n_validators // 3)
        return cls(keys, quorum, quorum)


def multisig_spend_witness(spec: SignerSpec, leaf_script: Script) -> tuple[bytes, ...]:
    """Script-path witness: one stack item per key (empty for non-signers,
    reverse key order), then the leaf script and control block."""
    n = len(spec.pubkeys)
    if n == 1:
        sigs = [SCHNORR_SIG_PLACEHOLDER]
    else:
        sigs = [SCHNORR_SIG_PLACEHOLDER] * spec.signer_count + [b""] * (n - spec.signer_count)
    return tuple(sigs) + (leaf_script.serialize(), control_block())


def reveal_witness(data_script: Script) -> tuple[bytes, ...]:
    """Witness of a script-path reveal: the data script and its control
    block, no signatures."""
    return (data_script.serialize(), control_block())


@dataclass(frozen=True)
class CommitRevealPair:
    commit_tx: Transaction
    reveal_tx: Transaction
    data: bytes


def write_data(funding: list[FundingUtxo], extra_outputs: list[TxOutput],
               data: bytes, fee_rate: int, change_script: bytes,
               omit_zero_change: bool = False) -> CommitRevealPair:
    """Commit-reveal pair embedding *data* in the reveal witness.

    The commit transaction spends the funding UTXOs and creates the extra
    outputs plus a taproot output committing to the data script; the reveal
    spends that output, exposes the script in its witness, and returns the
    remainder minus its own fee as change.
    """
    script = build_data_script(data)
    commit_spk = p2tr_script(tap_commitment(script.serialize()))

    total_in = sum(u.value for u in funding)
    extra_value = sum(o.value for o in extra_outputs)

    def build_commit(temp_value: int) -> Transaction:
        return Transaction(
            inputs=tuple(wallet_input(u) for u in funding),
            outputs=tuple(extra_outputs) + (TxOutput(temp_value, commit_spk),),
        )

    def build_reveal(temp_txid: bytes, temp_vout: int, change: int | None) -> Transaction:
        outputs = () if change is None else (TxOutput(change, change_script),)
        return Transaction(
            inputs=(TxInput(temp_txid, temp_vout, witness=reveal_witness(script)),),
            outputs=outputs,
        )

    # Sizes are value-independent (8-byte amounts), so one pass suffices.
    commit_fee = _ceil_fee(build_commit(0).vbytes, fee_rate)
    temp_value = total_in - extra_value - commit_fee
    reveal_fee = _ceil_fee(build_reveal(bytes(32), 0, 0).vbytes, fee_rate)
    if temp_value < reveal_fee:
        raise InsufficientFunds(
            f"funding {total_in} sat cannot cover outputs and fees")

    commit_tx = build_commit(temp_value)
    temp_vout = len(extra_outputs)
    change = temp_value - reveal_fee
    if change == 0 and omit_zero_change:
        reveal_tx = build_reveal(commit_tx.txid, temp_vout, None)
    else:
        reveal_tx = build_reveal(commit_tx.txid, temp_vout, change)
    return CommitRevealPair(commit_tx, reveal_tx, data)


def build_create_subnet(params: SubnetParams, whitelist_multisig_program: bytes,
                        funding: list[FundingUtxo], fee_rate: int,
                        change_script: bytes) -> CommitRevealPair:
    """Create-subnet pair: embeds the encoded parameters and adds a dust
    output locked by the whitelist multisig."""
    dust = TxOutput(DUST_P2TR, p2tr_script(whitelist_multisig_program))
    return write_data(funding, [dust], encode_subnet_params(params),
                      fee_rate, change_script)


def build_join_subnet(v: ValidatorData, min_collateral: int,
                      target_multisig_program: bytes,
                      funding: list[FundingUtxo], fee_rate: int,
                      change_script: bytes) -> CommitRevealPair:
    """Join pair: locks the collateral under the target multisig (the
    whitelist multisig before activation, the current configuration multisig
    after) and embeds the validator data."""
    if v.collateral < min_collateral:
        raise CollateralTooLow(
            f"collateral {v.collateral} below minimum {min_collateral}")
    collateral_out = TxOutput(v.collateral, p2tr_script(target_multisig_program))
    return write_data(funding, [collateral_out], encode_validator_data(v),
                      fee_rate, change_script, omit_zero_change=True)


def build_deposit(amount: int, payload: DepositPayload,
                  subnet_multisig_program: bytes, funding: list[FundingUtxo],
                  fee_rate: int, change_script: bytes) -> Transaction:
    """Single deposit transaction: value to the subnet multisig plus a
    zero-value OP_RETURN naming the subnet user address."""
    if amount <= 0:
        raise InsufficientAmount("deposit amount must be positive")
    outputs = [
        TxOutput(amount, p2tr_script(subnet_multisig_program)),
        TxOutput(0, op_return_script(encode_deposit_payload(payload))),
    ]
    total_in = sum(u.value for u in funding)

    def build(change: int | None) -> Transaction:
        outs = tuple(outputs) + ((TxOutput(change, change_script),) if change is not None else ())
        return Transaction(
            inputs=tuple(wallet_input(u) for u in funding), outputs=outs)

    fee = _ceil_fee(build(0).vbytes, fee_rate)
    change = total_in - amount - fee
    if change < 0:
        fee_nochange = _ceil_fee(build(None).vbytes, fee_rate)
        if total_in == amount + fee_nochange:
            return build(None)
        raise InsufficientFunds("funding does not cover deposit amount and fee")
    return build(change)


def build_op_return_command(payload: bytes, funding: list[FundingUtxo],
                            fee_rate: int, change_script: bytes) -> Transaction:
    """Generic single transaction carrying an OP_RETURN command payload
    (stake, unstake, leave, kill proposals and votes)."""
    total_in = sum(u.value for u in funding)

    def build(change: int) -> Transaction:
        return Transaction(
            inputs=tuple(wallet_input(u) for u in funding),
            outputs=(TxOutput(0, op_return_script(payload)),
                     TxOutput(change, change_script)),
        )

    fee = _ceil_fee(build(0).vbytes, fee_rate)
    change = total_in - fee
    if change < 0:
        raise InsufficientFunds("funding does not cover the command fee")
    return build(change)


@dataclass(frozen=True)
class CheckpointBundle:
    checkpoint_tx: Transaction
    batch_transfer_tx: Transaction | None  # absent when the batch is empty

    @property
    def vbytes(self) -> int:
        extra = self.batch_transfer_tx.vbytes if self.batch_transfer_tx else 0
        return self.checkpoint_tx.vbytes + extra

    def transactions(self) -> list[Transaction]:
        txs = [self.checkpoint_tx]
        if self.batch_transfer_tx is not None:
            txs.append(self.batch_transfer_tx)
        return txs


def build_checkpoint_bundle(subnet_utxos: list[FundingUtxo],
                            payload: CheckpointPayload,
                            batch: TransferBatch,
                            withdrawals: list[tuple[bytes, int]],
                            stake_returns: list[tuple[bytes, int]],
                            signers: SignerSpec,
                            leaf_script: Script,
                            subnet_change_script: bytes,
                            fee_rate: int,
                            max_tx_vbytes: int = MAX_STANDARD_TX_VBYTES,
                            include_state_payload: bool = True) -> CheckpointBundle:
    """The periodic checkpoint pair.

    checkpointTx output order: one output per target subnet (summed values),
    one per withdrawal, one per stake return, the OP_RETURN state commitment,
    the script-hash output funding the batchTransferTx (only when there are
    transfers), and finally the change back to the subnet multisig.

    Withdrawal and stake-return scripts are taproot outputs keyed by the
    32-byte program passed in each (program, amount) pair.
    """
    batch.validate()
    if len(withdrawals) > MAX_WITHDRAWALS_PER_BUNDLE:
        raise TooManyWithdrawals(
            f"{len(withdrawals)} withdrawals exceed the {MAX_WITHDRAWALS_PER_BUNDLE} cap")

    fixed_outputs: list[TxOutput] = []
    for subnet_addr, transfers in batch.entries:
        fixed_outputs.append(
            TxOutput(sum(a for _, a in transfers), subnet_lock_script(subnet_addr)))
    for program, amount in withdrawals:
        fixed_outputs.append(TxOutput(amount, p2tr_script(program)))
    for program, amount in stake_returns:
        fixed_outputs.append(TxOutput(amount, p2tr_script(program)))
    if include_state_payload:
        fixed_outputs.append(
            TxOutput(0, op_return_script(encode_checkpoint_payload(payload))))

    batch_tx = None
    temp_output = None
    if batch.entries:
        data = encode_transfer_batch(batch)
        data_script = build_data_script(data)
        temp_spk = p2tr_script(tap_commitment(data_script.serialize()))

        def build_batch_tx(temp_txid: bytes, temp_vout: int, temp_value: int) -> Transaction:
            return Transaction(
                inputs=(TxInput(temp_txid, temp_vout,
                                witness=reveal_witness(data_script)),),
                outputs=(TxOutput(temp_value - batch_fee, subnet_change_script),),
            )

        batch_fee = 0
        batch_fee = _ceil_fee(build_batch_tx(bytes(32), 0, 0).vbytes, fee_rate)
        temp_value = batch_fee + DUST_P2TR
        temp_output = TxOutput(temp_value, temp_spk)

    witness = multisig_spend_witness(signers, leaf_script)

    def build_checkpoint(change: int) -> Transaction:
        outputs = list(fixed_outputs)
        if temp_output is not None:
            outputs.append(temp_output)
        outputs.append(TxOutput(change, subnet_change_script))
        return Transaction(
            inputs=tuple(TxInput(u.txid, u.vout, witness=witness)
                         for u in subnet_utxos),
            outputs=tuple(outputs),
        )

    ckpt_fee = _ceil_fee(build_checkpoint(0).vbytes, fee_rate)
    total_in = sum(u.value for u in subnet_utxos)
    committed = sum(o.value for o in fixed_outputs)
    if temp_output is not None:
        committed += temp_output.value
    change = total_in - committed - ckpt_fee
    if change < 0:
        raise InsufficientSubnetFunds(
            f"subnet UTXOs ({total_in} sat) cannot cover {committed} sat plus fees")

    checkpoint_tx = build_checkpoint(change)
    if temp_output is not None:
        temp_vout = len(fixed_outputs)
        batch_tx = build_batch_tx(checkpoint_tx.txid, temp_vout,
                                  temp_output.value)
        if batch_tx.vbytes > max_tx_vbytes:
            raise BatchTooLarge(
                f"batchTransferTx is {batch_tx.vbytes} vB (cap {max_tx_vbytes})")
    if checkpoint_tx.vbytes > max_tx_vbytes:
        raise BatchTooLarge(
            f"checkpointTx is {checkpoint_tx.vbytes} vB (cap {max_tx_vbytes})")
    return CheckpointBundle(checkpoint_tx, batch_tx)


def build_kill_settlement(collaterals: list[tuple[bytes, int]],
                          subnet_utxos: list[FundingUtxo],
                          signers: SignerSpec, leaf_script: Script,
                          fee_rate: int) -> Transaction:
    """Final settlement of a killed subnet: one output per validator's backup
    program, value proportional to collateral, fees deducted pro rata."""
    total_in = sum(u.value for u in subnet_utxos)
    total_collateral = sum(c for _, c in collaterals)
    witness = multisig_spend_witness(signers, leaf_script)

    def build(values: list[int]) -> Transaction:
        return Transaction(
            inputs=tuple(TxInput(u.txid, u.vout, witness=witness)
                         for u in subnet_utxos),
            outputs=tuple(TxOutput(v, p2tr_script(program))
                          for (program, _), v in zip(collaterals, values)),
        )

    fee = _ceil_fee(build([0] * len(collaterals)).vbytes, fee_rate)
    distributable = total_in - fee
    if distributable <= 0:
        raise InsufficientSubnetFunds("fees exceed the subnet's remaining value")
    values = [distributable * c // total_collateral for _, c in collaterals]
    # Rounding dust goes to the first validators, one satoshi each.
    remainder = distributable - sum(values)
    for i in range(remainder):
        values[i] += 1
    return build(values)


def build_native_transfer(funding: FundingUtxo, amount: int, fee_rate: int,
                          dest_hash: bytes = bytes(20),
                          change_hash: bytes = bytes(20)) -> Transaction:
    """The native Bitcoin baseline: one P2WPKH input, pay + change P2WPKH
    outputs. Measures 141 vB with standard signature sizes."""
    def build(change: int) -> Transaction:
        return Transaction(
            inputs=(wallet_input(funding),),
            outputs=(TxOutput(amount, p2wpkh_script(dest_hash)),
                     TxOutput(change, p2wpkh_script(change_hash))),
        )

    fee = _ceil_fee(build(0).vbytes, fee_rate)
    change = funding.value - amount - fee
    if change < 0:
        raise InsufficientFunds("funding does not cover amount and fee")
    return build(change)


def build_consolidation(subnet_utxos: list[FundingUtxo], signers: SignerSpec,
                        leaf_script: Script, new_owner_script: bytes,
                        fee_rate: int) -> Transaction:
    """Sweep all subnet UTXOs into one output under the new configuration
    multisig (used on every validator-set change)."""
    from .errors import FeeExceedsValue
    if not subnet_utxos:
        raise InsufficientSubnetFunds("nothing to consolidate")
    witness = multisig_spend_witness(signers, leaf_script)
    total_in = sum(u.value for u in subnet_utxos)

    def build(value: int) -> Transaction:
        return Transaction(
            inputs=tuple(TxInput(u.txid, u.vout, witness=witness)
                         for u in subnet_utxos),
            outputs=(TxOutput(value, new_owner_script),),
        )

    fee = _ceil_fee(build(0).vbytes, fee_rate)
    if fee >= total_in:
        raise FeeExceedsValue(f"fee {fee} sat >= consolidated value {total_in} sat")
    return build(total_in - fee)
