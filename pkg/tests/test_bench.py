import csv

import pytest

from btcipc.bench import (
    BITCOIN_AVG_TX_VBYTES,
    CSV_FIELDS,
    NATIVE_TRANSFER_VBYTES,
    SWEEPS,
    USD_PER_BTC,
    VBYTES_PER_SECOND,
    SweepSpec,
    _measure_bundle,
    _signers,
    bench_checkpoint_overhead,
    bench_threshold_comparison,
    bench_throughput,
    bench_transfer_sizes,
    bench_validator_sweep,
    bench_withdraw_sizes,
    marginal_checkpoint_vbytes,
    max_admissible_batch,
    run_sweep,
    write_rows,
)
from btcipc.errors import BatchTooLarge, DataTooLarge, InvalidParams, OversizedTx
from btcipc.tx import MAX_STANDARD_TX_VBYTES, MAX_WITHDRAWALS_PER_BUNDLE

SMALL = SweepSpec(n_transfers=(1, 10, 50, 100), n_target_subnets=(1, 2),
                  n_validators=(4, 10), fee_rate=200)


def rows_to_csv(rows, tmp_path, name):
    path = tmp_path / name
    write_rows(rows, path)
    return path.read_bytes()


@pytest.mark.parametrize("name", sorted(SWEEPS))
def test_sweeps_are_deterministic(name, tmp_path):
    fn = SWEEPS[name][0]
    a = rows_to_csv(fn(SMALL), tmp_path, "a.csv")
    b = rows_to_csv(fn(SMALL), tmp_path, "b.csv")
    assert a == b


@pytest.mark.parametrize("name", sorted(set(SWEEPS) - {"checkpoint"}))
def test_row_invariants(name):
    for row in SWEEPS[name][0](SMALL):
        total = row.checkpoint_tx_vbytes + row.batch_tx_vbytes
        assert row.fee_sat == total * SMALL.fee_rate
        assert row.fee_usd == pytest.approx(row.fee_sat * 1e-8 * USD_PER_BTC,
                                            abs=1e-4)
        assert row.amortized_vbytes_per_item == pytest.approx(
            total / row.n_items, abs=1e-4)
        assert row.effective_tps == pytest.approx(
            VBYTES_PER_SECOND / row.amortized_vbytes_per_item, rel=1e-3)


def test_amortized_cost_decreases_with_batch_size():
    rows = [r for r in bench_transfer_sizes(SMALL)
            if r.n_targets == 1 and r.signer_mode != "native"]
    costs = [r.amortized_vbytes_per_item for r in rows]
    assert costs == sorted(costs, reverse=True)


def test_more_targets_cost_more_per_batch():
    by_key = {(r.n_items, r.n_targets): r for r in bench_transfer_sizes(SMALL)
              if r.signer_mode != "native"}
    for n in SMALL.n_transfers:
        if n >= 2:
            assert (by_key[(n, 2)].batch_tx_vbytes
                    > by_key[(n, 1)].batch_tx_vbytes)


def test_max_admissible_batch_is_maximal():
    signers = _signers("threshold", 1)
    best = max_admissible_batch(1, signers, 200, MAX_STANDARD_TX_VBYTES)
    assert 10_000 < best < 30_000
    _measure_bundle(best, 1, signers, 200, MAX_STANDARD_TX_VBYTES)
    with pytest.raises((BatchTooLarge, DataTooLarge, OversizedTx)):
        _measure_bundle(best + 1, 1, signers, 200, MAX_STANDARD_TX_VBYTES)


def test_withdraw_cap_flagged():
    rows = bench_withdraw_sizes(SweepSpec(n_transfers=(10, 100)))
    capped = [r for r in rows if r.capped]
    assert capped and all(r.n_items == MAX_WITHDRAWALS_PER_BUNDLE
                          for r in capped)
    assert all(r.n_items <= MAX_WITHDRAWALS_PER_BUNDLE for r in rows)


def test_threshold_beats_full_multisig():
    by_key = {(r.signer_mode, r.n_items): r
              for r in bench_threshold_comparison(SMALL)}
    for n in (50, 100):
        assert (by_key[("threshold", n)].amortized_vbytes_per_item
                < by_key[("multisig", n)].amortized_vbytes_per_item / 2)


def test_validator_sweep_break_even_is_tight():
    rows = bench_validator_sweep(SweepSpec(n_transfers=(1,),
                                           n_validators=(4, 36)))
    notes = {r.n_validators: r.note for r in rows if "break_even=" in r.note}
    assert set(notes) == {4, 36}
    for n, note in notes.items():
        k = int(note.split("break_even=")[1].split(";")[0])
        signers = _signers("multisig", n)
        at = _measure_bundle(k, 1, signers, 200, MAX_STANDARD_TX_VBYTES)
        assert at.vbytes / k < NATIVE_TRANSFER_VBYTES
        if k > 1:
            before = _measure_bundle(k - 1, 1, signers, 200,
                                     MAX_STANDARD_TX_VBYTES)
            assert before.vbytes / (k - 1) >= NATIVE_TRANSFER_VBYTES


def test_checkpoint_overhead_rows():
    marginal = marginal_checkpoint_vbytes(SweepSpec())
    rows = bench_checkpoint_overhead(SweepSpec())
    assert all(r.checkpoint_tx_vbytes == marginal for r in rows)
    two_hour = [r for r in rows if "period_hours=2" in r.note
                and "period_hours=24" not in r.note]
    assert two_hour and two_hour[0].n_items == 12
    assert two_hour[0].amortized_vbytes_per_item == pytest.approx(
        marginal * 12)


def test_throughput_vs_native_bitcoin():
    rows = bench_throughput(SweepSpec())
    best = max(r.effective_tps for r in rows)
    native = VBYTES_PER_SECOND / BITCOIN_AVG_TX_VBYTES
    assert best > 20 * native


def test_csv_files_byte_identical_across_runs(tmp_path):
    for sub in ("a", "b"):
        for name in SWEEPS:
            run_sweep(name, SMALL, tmp_path / sub)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(files) == 6
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_csv_schema(tmp_path):
    path = tmp_path / "out.csv"
    write_rows(bench_transfer_sizes(SMALL), path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_rows = sum(1 for _ in reader)
    assert header == CSV_FIELDS
    assert header == ["sweep", "signer_mode", "n_validators", "n_targets",
                      "n_items", "checkpoint_tx_vbytes", "batch_tx_vbytes",
                      "amortized_vbytes_per_item", "fee_sat", "fee_usd",
                      "effective_tps", "capped", "note"]
    assert n_rows > 0


def test_sweepspec_validation():
    with pytest.raises(InvalidParams):
        SweepSpec(fee_rate=0).validate()
    with pytest.raises(InvalidParams):
        SweepSpec(n_transfers=()).validate()
    with pytest.raises(InvalidParams):
        SweepSpec(n_transfers=(0,)).validate()
    with pytest.raises(InvalidParams):
        SweepSpec(signer_mode="frost").validate()
