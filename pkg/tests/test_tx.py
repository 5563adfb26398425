import hashlib

import pytest
from hypothesis import given, settings, strategies as st

from btcipc.codec import (
    CheckpointPayload,
    DepositPayload,
    SubnetParams,
    TransferBatch,
    ValidatorData,
)
from btcipc.errors import (
    BatchTooLarge,
    CollateralTooLow,
    FeeExceedsValue,
    InsufficientFunds,
    InsufficientSubnetFunds,
    TooManyWithdrawals,
)
from btcipc.script import build_multisig_leaf_script
from btcipc.tx import (
    DUST_P2TR,
    MAX_WITHDRAWALS_PER_BUNDLE,
    FundingUtxo,
    SignerSpec,
    Transaction,
    TxInput,
    TxOutput,
    build_checkpoint_bundle,
    build_create_subnet,
    build_deposit,
    build_join_subnet,
    build_kill_settlement,
    build_native_transfer,
    build_op_return_command,
    build_consolidation,
    compute_weight,
    p2tr_script,
    p2wpkh_script,
    subnet_lock_script,
    wallet_input,
    write_data,
)


def _compact_len(n: int) -> int:
    return 1 if n < 0xFD else (3 if n <= 0xFFFF else 5)


def oracle_vbytes(tx: Transaction) -> int:
    """Independent BIP 141 size oracle computed from field widths, not from
    the serializer under test."""
    base = 4 + 4  # version + locktime
    base += _compact_len(len(tx.inputs)) + _compact_len(len(tx.outputs))
    for txin in tx.inputs:
        base += 32 + 4 + 1 + 4  # outpoint + empty scriptSig + sequence
    for txout in tx.outputs:
        base += 8 + _compact_len(len(txout.script_pubkey)) + len(txout.script_pubkey)
    witness = 0
    if any(i.witness for i in tx.inputs):
        witness = 2  # marker + flag
        for txin in tx.inputs:
            witness += _compact_len(len(txin.witness))
            for item in txin.witness:
                witness += _compact_len(len(item)) + len(item)
    weight = base * 4 + witness
    return -(-weight // 4)


def funding(value: int, label: bytes = b"f") -> FundingUtxo:
    return FundingUtxo(hashlib.sha256(label).digest(), 0, value)


def keys(n):
    return [hashlib.sha256(b"k" + bytes([i])).digest() for i in range(n)]


def test_native_transfer_is_141_vbytes():
    tx = build_native_transfer(funding(1_000_000), 50_000, fee_rate=200)
    assert tx.vbytes == 141
    assert oracle_vbytes(tx) == 141


def test_weight_matches_oracle_on_builders():
    pair = write_data([funding(10_000_000)], [], b"hello world" * 40, 5,
                      p2wpkh_script(bytes(20)))
    for tx in (pair.commit_tx, pair.reveal_tx):
        weight, vbytes = compute_weight(tx)
        assert vbytes == oracle_vbytes(tx)
        assert weight == tx.base_size * 3 + tx.total_size


def test_dust_threshold_oracle():
    # Core's dust rule for a taproot output: 3 sat/vB over the output size
    # (43 bytes) plus the assumed spend cost (67 vB)
    assert DUST_P2TR == 3 * (43 + 67)


def test_txid_ignores_witness():
    tx = build_native_transfer(funding(1_000_000), 50_000, fee_rate=1)
    stripped = Transaction(
        tuple(TxInput(i.txid, i.vout) for i in tx.inputs), tx.outputs)
    assert tx.txid == stripped.txid
    assert stripped.vbytes < tx.vbytes


def test_write_data_conservation():
    fee_rate = 7
    utxos = [funding(5_000_000, b"a"), funding(3_000_000, b"b")]
    pair = write_data(utxos, [TxOutput(1234, p2tr_script(bytes(32)))],
                      b"x" * 900, fee_rate, p2wpkh_script(bytes(20)))
    commit, reveal = pair.commit_tx, pair.reveal_tx
    commit_fee = sum(u.value for u in utxos) - commit.output_value()
    assert commit_fee == commit.vbytes * fee_rate
    temp = commit.outputs[-1]
    reveal_fee = temp.value - reveal.output_value()
    assert reveal_fee == reveal.vbytes * fee_rate
    # the reveal spends the commit's last output
    assert reveal.inputs[0].txid == commit.txid
    assert reveal.inputs[0].vout == len(commit.outputs) - 1


def test_write_data_insufficient_funds():
    with pytest.raises(InsufficientFunds):
        write_data([funding(500)], [], b"x" * 5000, 10, p2wpkh_script(bytes(20)))


def test_create_subnet_pair():
    params = SubnetParams(100_000, 2, tuple(keys(3)), 10)
    pair = build_create_subnet(params, bytes(32), [funding(10_000_000)], 2,
                               p2wpkh_script(bytes(20)))
    assert pair.commit_tx.outputs[0].value == DUST_P2TR
    # reveal witness carries the data script and a control block
    assert len(pair.reveal_tx.inputs[0].witness) == 2


def test_join_subnet_collateral():
    v = ValidatorData("/b4/x", keys(1)[0], "addr", 200_000)
    pair = build_join_subnet(v, 100_000, bytes(32), [funding(10_000_000)], 2,
                             p2wpkh_script(bytes(20)))
    assert pair.commit_tx.outputs[0].value == 200_000
    with pytest.raises(CollateralTooLow):
        build_join_subnet(ValidatorData("/b4/x", keys(1)[0], "addr", 50_000),
                          100_000, bytes(32), [funding(10_000_000)], 2,
                          p2wpkh_script(bytes(20)))


def test_deposit_shape_and_conservation():
    tx = build_deposit(300_000, DepositPayload(b"\x11" * 20), bytes(32),
                       [funding(1_000_000)], 3, p2wpkh_script(bytes(20)))
    assert tx.outputs[0].value == 300_000
    assert tx.outputs[1].script_pubkey[0] == 0x6A and tx.outputs[1].value == 0
    assert 1_000_000 - tx.output_value() == tx.vbytes * 3


def test_op_return_command_fee():
    tx = build_op_return_command(b"IPCLVE" + bytes(32), [funding(50_000)], 4,
                                 p2wpkh_script(bytes(20)))
    assert 50_000 - tx.output_value() == tx.vbytes * 4


# --- checkpoint bundles ---

def make_batch(n_transfers, n_targets):
    groups = [[] for _ in range(n_targets)]
    for i in range(n_transfers):
        dest = hashlib.sha256(b"d" + i.to_bytes(4, "big")).digest()[:20]
        groups[i % n_targets].append((dest, 10_000))
    return TransferBatch(tuple(
        (hashlib.sha256(b"t" + bytes([t])).digest()[:20], tuple(g))
        for t, g in enumerate(groups) if g))


def bundle_for(n_transfers=0, n_targets=1, n_validators=1, withdrawals=(),
               stake_returns=(), fee_rate=2, value=100_000_000):
    signers = SignerSpec.equal_weight(n_validators)
    leaf = build_multisig_leaf_script(sorted(signers.pubkeys),
                                     signers.threshold)
    batch = make_batch(n_transfers, n_targets) if n_transfers else TransferBatch(())
    return build_checkpoint_bundle(
        [funding(value)], CheckpointPayload(7, bytes(32), b"\x09" * 20),
        batch, list(withdrawals), list(stake_returns), signers, leaf,
        p2tr_script(hashlib.sha256(b"change").digest()), fee_rate)


def test_fig4_structure_four_transfers_two_targets():
    """4 transfers to 2 target subnets: checkpointTx carries one summed
    output per target, the OP_RETURN, the script-hash output funding the
    batch reveal, and the subnet change."""
    bundle = bundle_for(n_transfers=4, n_targets=2)
    ckpt, batch_tx = bundle.checkpoint_tx, bundle.batch_transfer_tx
    assert batch_tx is not None
    assert len(ckpt.outputs) == 5
    assert ckpt.outputs[0].value == 20_000 and ckpt.outputs[1].value == 20_000
    assert ckpt.outputs[0].script_pubkey == subnet_lock_script(
        hashlib.sha256(b"t\x00").digest()[:20])
    assert ckpt.outputs[2].script_pubkey[0] == 0x6A
    assert len(ckpt.outputs[2].script_pubkey) == 3 + 78  # PUSHDATA1 + 78 bytes
    # the batch reveal spends the second-to-last checkpoint output
    assert batch_tx.inputs[0].txid == ckpt.txid
    assert batch_tx.inputs[0].vout == 3


def test_bundle_conservation():
    fee_rate = 2
    bundle = bundle_for(n_transfers=6, n_targets=2, fee_rate=fee_rate)
    ckpt, batch_tx = bundle.checkpoint_tx, bundle.batch_transfer_tx
    ckpt_fee = 100_000_000 - ckpt.output_value()
    assert ckpt_fee == ckpt.vbytes * fee_rate
    temp = ckpt.outputs[-2]
    batch_fee = temp.value - batch_tx.output_value()
    assert batch_fee == batch_tx.vbytes * fee_rate
    # the batch reveal hands DUST_P2TR plus its fee through the temp output
    assert temp.value == batch_fee + DUST_P2TR


def test_empty_batch_has_no_batch_tx():
    bundle = bundle_for(n_transfers=0)
    assert bundle.batch_transfer_tx is None
    assert bundle.vbytes == bundle.checkpoint_tx.vbytes


def test_withdrawal_outputs():
    program = hashlib.sha256(b"user").digest()
    bundle = bundle_for(withdrawals=[(program, 40_000)])
    assert any(o.script_pubkey == p2tr_script(program) and o.value == 40_000
               for o in bundle.checkpoint_tx.outputs)


def test_too_many_withdrawals():
    wd = [(hashlib.sha256(bytes([i % 250, i // 250])).digest(), 1000)
          for i in range(MAX_WITHDRAWALS_PER_BUNDLE + 1)]
    with pytest.raises(TooManyWithdrawals):
        bundle_for(withdrawals=wd)


def test_batch_too_large_for_policy_cap():
    with pytest.raises(BatchTooLarge):
        signers = SignerSpec.equal_weight(1)
        leaf = build_multisig_leaf_script(sorted(signers.pubkeys), 1)
        build_checkpoint_bundle(
            [funding(900_000_000)], CheckpointPayload(0, bytes(32), bytes(20)),
            make_batch(9000, 1), [], [], signers, leaf,
            p2tr_script(bytes(32)), 1, max_tx_vbytes=2000)


def test_insufficient_subnet_funds():
    with pytest.raises(InsufficientSubnetFunds):
        bundle_for(n_transfers=4, value=30_000)


def test_multisig_witness_shape():
    bundle = bundle_for(n_validators=9)
    witness = bundle.checkpoint_tx.inputs[0].witness
    # 9 key slots (quorum signatures + empties) + leaf script + control block
    assert len(witness) == 9 + 2
    assert sum(1 for w in witness[:9] if w) == 6  # ceil(2*9/3)
    assert sum(1 for w in witness[:9] if not w) == 3


def test_kill_settlement_pro_rata():
    progs = [hashlib.sha256(b"b" + bytes([i])).digest() for i in range(3)]
    collaterals = [(progs[0], 300_000), (progs[1], 100_000), (progs[2], 100_000)]
    signers = SignerSpec.equal_weight(3)
    leaf = build_multisig_leaf_script(sorted(signers.pubkeys), signers.threshold)
    tx = build_kill_settlement(collaterals, [funding(500_000)], signers, leaf, 2)
    fee = 500_000 - tx.output_value()
    assert fee == tx.vbytes * 2
    values = [o.value for o in tx.outputs]
    assert values[0] >= 3 * values[1] - 3  # pro rata up to rounding
    assert abs(values[1] - values[2]) <= 1
    assert sum(values) == 500_000 - fee  # no satoshi lost to rounding


def test_consolidation_sweeps_everything():
    signers = SignerSpec.equal_weight(4)
    leaf = build_multisig_leaf_script(sorted(signers.pubkeys), signers.threshold)
    utxos = [funding(100_000, bytes([i])) for i in range(3)]
    tx = build_consolidation(utxos, signers, leaf, p2tr_script(bytes(32)), 2)
    assert len(tx.outputs) == 1
    assert 300_000 - tx.outputs[0].value == tx.vbytes * 2
    with pytest.raises(FeeExceedsValue):
        build_consolidation([funding(10)], signers, leaf,
                            p2tr_script(bytes(32)), 50)


@settings(max_examples=200)
@given(st.integers(min_value=1, max_value=60),
       st.integers(min_value=1, max_value=5),
       st.integers(min_value=1, max_value=400))
def test_bundle_conservation_property(n_transfers, n_targets, fee_rate):
    """Value in = value out + fee on every constructed bundle."""
    bundle = bundle_for(n_transfers=max(n_transfers, n_targets),
                        n_targets=n_targets, fee_rate=fee_rate)
    ckpt = bundle.checkpoint_tx
    assert 100_000_000 - ckpt.output_value() == ckpt.vbytes * fee_rate
    assert oracle_vbytes(ckpt) == ckpt.vbytes
    batch_tx = bundle.batch_transfer_tx
    temp = ckpt.outputs[-2]
    assert temp.value - batch_tx.output_value() == batch_tx.vbytes * fee_rate
