"""Acceptance suite: one pass/fail line per criterion.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they print.
Every measurement is taken from freshly constructed transactions; the
expected values and tolerances are frozen below.
"""

import random

import pytest

from btcipc.bench import (
    SWEEPS,
    VBYTES_PER_SECOND,
    SweepSpec,
    _measure_bundle,
    _signers,
    marginal_checkpoint_vbytes,
    max_admissible_batch,
    run_sweep,
)
from btcipc.chain import SimChain
from btcipc.codec import (
    CheckpointPayload,
    SubnetParams,
    TransferBatch,
    decode_transfer_batch,
    encode_checkpoint_payload,
    encode_transfer_batch,
)
from btcipc.monitor import (
    KILL_PROPOSAL_EXPIRY_BLOCKS,
    Monitor,
    Phase,
)
from btcipc.provider import Provider
from btcipc.script import Drop, PushData1, PushNum1, build_data_script
from btcipc.tx import (
    MAX_STANDARD_TX_VBYTES,
    MAX_WITHDRAWALS_PER_BUNDLE,
    FundingUtxo,
    build_native_transfer,
)

from conftest import backup, key
from test_codec import GOLDEN_BATCH, GOLDEN_BATCH_HEX

FEE_RATE = 200


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}",
          flush=True)
    assert ok, f"criterion {criterion}: {detail}"


def within(value: float, expected: float, rel: float) -> bool:
    return abs(value - expected) <= expected * rel


def native_vbytes() -> int:
    tx = build_native_transfer(FundingUtxo(bytes(32), 0, 10_000_000),
                               50_000, FEE_RATE)
    return tx.vbytes


def amortized(n: int, targets: int) -> float:
    bundle = _measure_bundle(n, targets, _signers("threshold", 1), FEE_RATE,
                             MAX_STANDARD_TX_VBYTES)
    return bundle.vbytes / n


def test_criterion_1_native_baseline():
    vb = native_vbytes()
    report("1", abs(vb - 141) <= 2,
           f"native 1-in/2-out transfer = {vb} vB (expected 141 +/- 2)")


def test_criterion_2_batching_convergence():
    signers = _signers("threshold", 1)
    best1 = max_admissible_batch(1, signers, FEE_RATE, MAX_STANDARD_TX_VBYTES)
    a1 = amortized(best1, 1)
    best10 = max_admissible_batch(10, signers, FEE_RATE, MAX_STANDARD_TX_VBYTES)
    a10 = amortized(best10, 10)
    ok = (within(best1, 16_500, 0.10) and within(a1, 6.07, 0.10)
          and within(a10, 6.1, 0.10))
    report("2", ok,
           f"max batch {best1} (expected 16500 +/- 10%), amortized "
           f"{a1:.4f} vB (expected 6.07 +/- 10%), 10-target {a10:.4f} vB "
           f"(expected 6.1 +/- 10%)")


def test_criterion_3_throughput():
    signers = _signers("threshold", 1)
    best = max_admissible_batch(1, signers, FEE_RATE, MAX_STANDARD_TX_VBYTES)
    tps = VBYTES_PER_SECOND / amortized(best, 1)
    report("3", tps >= 145,
           f"effective throughput {tps:.2f} tps (required >= 145)")


def break_even(n_validators: int) -> int:
    signers = _signers("multisig", n_validators)
    for n in range(1, 101):
        bundle = _measure_bundle(n, 1, signers, FEE_RATE,
                                 MAX_STANDARD_TX_VBYTES)
        if bundle.vbytes / n < 141:
            return n
    return -1


def test_criterion_4_break_even():
    be4, be36 = break_even(4), break_even(36)
    report("4", 1 <= be4 <= 4 and 1 <= be36 <= 10,
           f"break-even batch: {be4} transfers at 4 validators (required "
           f"<= 4), {be36} at 36 validators (required <= 10)")


def test_criterion_5_withdrawals():
    bundle = _measure_bundle(0, 1, _signers("threshold", 1), FEE_RATE,
                             MAX_STANDARD_TX_VBYTES,
                             n_withdrawals=MAX_WITHDRAWALS_PER_BUNDLE)
    a = bundle.vbytes / MAX_WITHDRAWALS_PER_BUNDLE
    ok = within(a, 43.8, 0.10) and MAX_WITHDRAWALS_PER_BUNDLE == 255
    report("5", ok,
           f"amortized withdrawal {a:.4f} vB at the 255-per-bundle cap "
           f"(expected 43.8 +/- 10%)")


def test_criterion_6_checkpoint_overhead():
    payload = encode_checkpoint_payload(
        CheckpointPayload(7, bytes(32), bytes(20)))
    marginal = marginal_checkpoint_vbytes(SweepSpec())
    per_day = marginal * 12  # 2-hour period
    ok = (len(payload) == 78 and abs(marginal - 90) <= 5
          and abs(per_day - 1080) <= 60)
    report("6", ok,
           f"state payload {len(payload)} B (expected 78), marginal "
           f"checkpoint {marginal} vB (expected 90 +/- 5), 2-hour cadence "
           f"{per_day} vB/day (expected 1080 +/- 60)")


def test_criterion_7_threshold_comparison():
    vals = {}
    for mode, n_validators in (("threshold", 1), ("multisig", 100)):
        signers = _signers(mode, n_validators)
        for n in (50, 100):
            bundle = _measure_bundle(n, 1, signers, FEE_RATE,
                                     MAX_STANDARD_TX_VBYTES)
            vals[(mode, n)] = bundle.vbytes / n
    ok = (abs(vals[("threshold", 50)] - 13) <= 2
          and abs(vals[("multisig", 50)] - 48.5) <= 5
          and abs(vals[("threshold", 100)] - 9.5) <= 2
          and abs(vals[("multisig", 100)] - 27.3) <= 3)
    report("7", ok,
           "amortized vB batch-50 threshold "
           f"{vals[('threshold', 50)]:.2f} (13 +/- 2) vs 100-validator "
           f"multisig {vals[('multisig', 50)]:.2f} (48.5 +/- 5); batch-100 "
           f"{vals[('threshold', 100)]:.2f} (9.5 +/- 2) vs "
           f"{vals[('multisig', 100)]:.2f} (27.3 +/- 3)")


def test_criterion_8_fees():
    native_fee = native_vbytes() * FEE_RATE
    signers = _signers("threshold", 1)
    best = max_admissible_batch(1, signers, FEE_RATE, MAX_STANDARD_TX_VBYTES)
    bundle = _measure_bundle(best, 1, signers, FEE_RATE,
                             MAX_STANDARD_TX_VBYTES)
    per_transfer = bundle.vbytes * FEE_RATE / best
    # internal consistency: fee is always vbytes x rate; the published
    # per-day checkpoint fee figure does not satisfy this identity and is
    # deliberately not asserted (see the note in bench-checkpoint-overhead.csv)
    consistent = bundle.vbytes == sum(
        tx.vbytes for tx in bundle.transactions())
    ok = (native_fee == 28_200 and within(per_transfer, 1214, 0.10)
          and consistent)
    report("8", ok,
           f"native fee {native_fee} sat (expected exactly 28200); max-batch "
           f"fee {per_transfer:.1f} sat/transfer (expected 1214 +/- 10%); "
           "fee = vbytes x rate holds everywhere, so the published per-day "
           "checkpoint fee figure is reported as computed, not reproduced")


def test_criterion_9_codec_golden():
    blob = encode_transfer_batch(GOLDEN_BATCH)
    script = build_data_script(blob)
    shapes = tuple(type(op) for op in script.ops)
    ok = (len(blob) == 144 and blob[:6].hex() == "495043544652"
          and blob.hex() == GOLDEN_BATCH_HEX
          and shapes == (PushData1, Drop, PushNum1)
          and decode_transfer_batch(blob) == GOLDEN_BATCH)
    report("9", ok,
           f"golden batch encodes to {len(blob)} bytes starting "
           f"{blob[:6].hex()}, wrapped as [PUSHDATA1, DROP, PUSHNUM_1]")


# --- criterion 10: property suites -----------------------------------------

def test_criterion_10a_codec_roundtrip_10k():
    rng = random.Random(1337)
    failures = 0
    for _ in range(10_000):
        batch = TransferBatch(tuple(
            (rng.randbytes(20), tuple(
                (rng.randbytes(20), rng.randint(1, 2**40))
                for _ in range(rng.randint(1, 4))))
            for _ in range(rng.randint(0, 4))))
        if decode_transfer_batch(encode_transfer_batch(batch)) != batch:
            failures += 1
    report("10a", failures == 0,
           f"codec round-trip over 10^4 random batches, {failures} failures")


def test_criterion_10b_script_roundtrip_boundaries():
    from btcipc.script import parse_data_script_bytes
    boundaries = (1, 74, 75, 76, 255, 256, 519, 520, 521, 1040, 1041)
    bad = [n for n in boundaries
           if parse_data_script_bytes(
               build_data_script(bytes(i % 251 for i in range(n))).serialize())
           != bytes(i % 251 for i in range(n))]
    report("10b", not bad,
           f"script build/parse round-trip at chunk boundaries {boundaries}, "
           f"failures: {bad or 'none'}")


def test_criterion_10c_value_conservation(active_subnet):
    chain, monitor, provider, sid, keys = active_subnet
    out_values = {}
    violations = 0
    checked = 0
    for block in chain.blocks:
        for tx in block.transactions:
            for i, out in enumerate(tx.outputs):
                out_values[(tx.txid, i)] = out.value
            if not tx.inputs:
                continue  # faucet grants mint value by construction
            funded = [out_values[inp.outpoint] for inp in tx.inputs
                      if inp.outpoint in out_values]
            if len(funded) != len(tx.inputs):
                continue
            checked += 1
            if sum(funded) < sum(o.value for o in tx.outputs):
                violations += 1
    report("10c", checked > 0 and violations == 0,
           f"value conservation on {checked} constructed transactions, "
           f"{violations} violations")


def test_criterion_10d_lifecycle_running_example(world):
    chain, monitor, provider = world
    keys = [key(f"v{i}") for i in range(5)]
    sid = provider.create_subnet(SubnetParams(100_000, 4, tuple(keys), 10))
    record = monitor.registry[sid]
    phases = [record.phase]
    for i in range(4):
        provider.join_subnet(sid, keys[i], 100_000 + 10_000 * i,
                             backup(f"v{i}"))
        phases.append(record.phase)
    active = record.phase is Phase.ACTIVE and record.current_config.number == 1
    monitor.run_checkpoint_cycle(sid)
    order = [Phase.INITIALIZED, Phase.ACTIVE, Phase.TO_BE_KILLED, Phase.KILLED]
    monotone = all(order.index(a) <= order.index(b)
                   for a, b in zip(phases, phases[1:]))
    report("10d", active and monotone and record.checkpoint_number == 1,
           "create -> 4 joins -> active with configuration 0 -> 1, "
           "checkpoint 0 anchored, phases monotone")


def test_criterion_10e_kill_flow(world):
    from btcipc.address import decode_p2tr_address
    from btcipc.errors import ProposalExpired
    chain, monitor, provider = world
    keys = [key(f"v{i}") for i in range(4)]
    sid = provider.create_subnet(SubnetParams(100_000, 4, tuple(keys), 10))
    for i in range(4):
        provider.join_subnet(sid, keys[i], 100_000, backup(f"v{i}"))
    monitor.run_checkpoint_cycle(sid)
    record = monitor.registry[sid]
    # expiry path
    monitor.propose_kill(sid, keys[0])
    chain.mine_blocks(KILL_PROPOSAL_EXPIRY_BLOCKS + 1)
    monitor.sync()
    expired = False
    try:
        monitor.vote_kill(sid, keys[1])
    except ProposalExpired:
        expired = True
    # acceptance path: 3 of 4 equal weights exceed 2/3
    monitor.propose_kill(sid, keys[0])
    monitor.vote_kill(sid, keys[1])
    monitor.vote_kill(sid, keys[2])
    accepted = record.phase is Phase.TO_BE_KILLED
    for _ in range(5):
        monitor.run_checkpoint_cycle(sid)
    killed = record.phase is Phase.KILLED
    chain.mine_block()
    monitor.sync()
    paid = 0
    for v in record.validators.values():
        spk = b"\x51\x20" + decode_p2tr_address(v.backup_address)
        paid += sum(o.value for o in chain.utxo_set.values()
                    if o.script_pubkey == spk)
    report("10e", expired and accepted and killed and paid > 0
           and not record.owned_utxos,
           f"36-block expiry enforced, 2/3-stake vote accepted, killed after "
           f"5 checkpoints, {paid} sat returned to backup addresses")


def test_criterion_10f_monitor_rejections(world):
    from btcipc.script import Other, PushBytes, Script, PushNum1 as P1
    from btcipc.tx import Transaction, TxInput, TxOutput, p2wpkh_script
    chain, monitor, provider = world
    poisoned = Script((PushBytes(b"IPCCRT" + bytes(40)), Other(0xAC),
                       P1())).serialize()
    op = chain.fund(100_000)
    chain.submit(Transaction(
        (TxInput(op[0], op[1], witness=(poisoned,)),),
        (TxOutput(50_000, p2wpkh_script(bytes(20))),)))
    chain.mine_block()
    foreign_ignored = monitor.sync() == [] and not monitor.registry
    report("10f", foreign_ignored,
           "foreign-opcode witness scripts produce no lifecycle events "
           "(value-mismatched transfer reveals covered in the monitor suite)")


def test_criterion_10g_dual_relayer(active_subnet):
    chain, monitor, provider, sid, keys = active_subnet
    bundle = monitor.run_checkpoint_cycle(
        sid, transfers=[(sid, b"\x01" * 20, 5_000)], relayers=2)
    mined = [tx.txid for tx in chain.blocks[-1].transactions]
    once = all(mined.count(tx.txid) == 1 for tx in bundle.transactions())
    dup = any(e.kind == "relay-duplicate" for e in monitor.events)
    report("10g", once and dup,
           "two racing relayers: exactly one bundle accepted on-chain, the "
           "duplicate rejected as a double spend")


def test_criterion_11_benchmark_determinism(tmp_path):
    spec = SweepSpec()
    for sub in ("a", "b"):
        for name in SWEEPS:
            run_sweep(name, spec, tmp_path / sub)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    identical = [name for name in files
                 if (tmp_path / "a" / name).read_bytes()
                 == (tmp_path / "b" / name).read_bytes()]
    report("11", len(files) == 6 and identical == files,
           f"two full harness runs, {len(identical)}/{len(files)} CSVs "
           "byte-identical")
