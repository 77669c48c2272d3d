import json
import math
import time

import numpy as np
import pytest

from src.lora_phy_lab.config import ExperimentConfig, FrameConfig, SweepConfig
from src.lora_phy_lab.experiments.ber import RESULT_COLUMNS, ResultRow, run_ber_sweep, snr_at_ber, snr_axes
from src.lora_phy_lab.experiments.outputs import (
    BER_SCHEMA,
    SYNC_BENCH_SCHEMA,
    load_result_csv,
    run_log_path,
    write_result_csv,
    write_run_log,
)
from src.lora_phy_lab.experiments.stats import intervals_overlap, log_crossing, rate, wilson_interval, z_value
from src.lora_phy_lab.experiments.sync_bench import SYNC_BENCH_COLUMNS, run_sync_bench
from src.lora_phy_lab.experiments.trials import (
    TrialOutcome,
    draw_offsets,
    fraction_error,
    popcount,
    simulate_trial,
)
from src.lora_phy_lab.channel.noise import NoiseConvention


def _config(**sweep) -> ExperimentConfig:
    settings = {"snr_db": [math.inf], "trials": 4}
    settings.update(sweep)
    return ExperimentConfig(frame=FrameConfig(payload_len=12), sweep=SweepConfig(**settings), master_seed=11)


def _outcome(**overrides) -> TrialOutcome:
    values = {
        "bits": 96,
        "bit_errors": 0,
        "symbols": 40,
        "symbol_errors": 0,
        "frame_error": False,
        "sync_failed": False,
        "tau_sto": 10.0,
        "tau_cfo": 1.0,
        "tau_sto_err": 0.0,
        "tau_cfo_err": 0.0,
        "lambda_sto_err": 0.0,
        "lambda_cfo_err": 0.0,
        "snr_est_db": 10.0,
    }
    values.update(overrides)
    return TrialOutcome(**values)


def test_z_value_and_wilson_interval():
    assert z_value() == pytest.approx(1.959964, abs=1e-6)
    low, high = wilson_interval(0, 100)
    assert low == 0.0
    assert 0.0 < high < 0.05
    low, high = wilson_interval(50, 100)
    assert low < 0.5 < high
    assert high - 0.5 == pytest.approx(0.5 - low)
    assert wilson_interval(0, 0) == (0.0, 1.0)
    assert rate(0, 0) == 0.0
    assert intervals_overlap((0.1, 0.2), (0.15, 0.3))
    assert not intervals_overlap((0.1, 0.2), (0.25, 0.3))


def test_popcount_and_fraction_error():
    assert popcount(np.array([0xFF, 0x01])) == 9
    assert popcount(np.array([0b1010101]), 7) == 4
    assert fraction_error(0.95, 0.05) == pytest.approx(-0.1)
    assert fraction_error(0.05, 0.95) == pytest.approx(0.1)


def test_draw_offsets_respects_ranges_and_shared_oscillator():
    rng = np.random.default_rng(3)
    sweep = SweepConfig(sto_range=(5.0, 6.0), cfo_range=(-2.0, 2.0))
    for _ in range(20):
        tau_sto, tau_cfo = draw_offsets(sweep, rng)
        assert 5.0 <= tau_sto <= 6.0
        assert -2.0 <= tau_cfo <= 2.0
    shared = SweepConfig(sto_range=(5.0, 6.0), cfo_range=(-2.0, 2.0), shared_oscillator=True)
    assert draw_offsets(shared, rng)[1] == 0.0


def test_snr_axes_follow_the_convention():
    per_sample, n0_axis = snr_axes(0.0, NoiseConvention.PER_SAMPLE, 128)
    assert per_sample == 0.0
    assert n0_axis == pytest.approx(-10 * math.log10(256))
    per_sample, n0_axis = snr_axes(-20.0, NoiseConvention.INVERSE_N0, 128)
    assert n0_axis == -20.0
    assert per_sample == pytest.approx(-20.0 + 10 * math.log10(256))


def test_result_row_counts_and_means():
    outcomes = [
        _outcome(bit_errors=3, symbol_errors=2, frame_error=True, lambda_sto_err=-0.02, snr_est_db=8.0),
        _outcome(lambda_sto_err=0.04, snr_est_db=12.0),
        _outcome(
            bit_errors=40,
            symbol_errors=40,
            frame_error=True,
            sync_failed=True,
            tau_sto_err=math.nan,
            tau_cfo_err=math.nan,
            lambda_sto_err=math.nan,
            lambda_cfo_err=math.nan,
            snr_est_db=math.nan,
        ),
    ]
    row = ResultRow.from_outcomes(5.0, -19.0, outcomes)
    assert row.frames == 3
    assert row.bits == 288
    assert row.bit_errors == 43
    assert row.symbol_errors == 42
    assert row.frame_errors == 2
    assert row.sync_failures == 1
    assert row.ber == pytest.approx(43 / 288)
    assert row.fer == pytest.approx(2 / 3)
    assert row.sync_failure_rate == pytest.approx(1 / 3)
    assert row.mean_lambda_sto_err == pytest.approx(0.03)
    assert row.mean_snr_est_db == pytest.approx(10.0)
    assert list(row.as_dict()) == RESULT_COLUMNS


def test_result_row_without_synced_trials_reports_nan():
    row = ResultRow.from_outcomes(0.0, 0.0, [_outcome(sync_failed=True, frame_error=True)])
    assert math.isnan(row.mean_lambda_cfo_err)
    assert math.isnan(row.mean_snr_est_db)


def test_noiseless_trial_is_error_free():
    cfg = _config(sto_range=(0.0, 40.0), cfo_range=(-8.0, 8.0))
    for genie in (True, False):
        outcome = simulate_trial(cfg, math.inf, 0, 1, genie=genie)
        assert not outcome.sync_failed
        assert outcome.bit_errors == 0
        assert outcome.symbol_errors == 0
        assert not outcome.frame_error
        assert outcome.bits == 96


def test_trial_depends_only_on_its_seed():
    cfg = _config(sto_range=(0.0, 40.0), cfo_range=(-8.0, 8.0))
    first = simulate_trial(cfg, 0.0, 2, 5)
    second = simulate_trial(cfg, 0.0, 2, 5)

    def key(outcome):
        return (outcome.tau_sto, outcome.tau_cfo, outcome.bit_errors, outcome.symbol_errors, outcome.sync_failed)

    assert key(first) == key(second)
    other = simulate_trial(cfg, 0.0, 2, 6)
    assert (other.tau_sto, other.tau_cfo) != (first.tau_sto, first.tau_cfo)


def test_undetectable_trial_counts_every_symbol_wrong():
    cfg = _config(sto_range=(0.0, 40.0))
    outcome = simulate_trial(cfg, -40.0, 0, 0, genie=False)
    assert outcome.sync_failed
    assert outcome.symbol_errors == outcome.symbols
    assert outcome.frame_error
    assert not outcome.integer_exact


def test_noiseless_sweep_has_no_errors():
    rows = run_ber_sweep(_config())
    assert len(rows) == 1
    row = rows[0]
    assert row.ber == 0.0
    assert row.fer == 0.0
    assert row.frames == 4
    assert row.bits == 4 * 96
    assert math.isinf(row.snr_db_n0)


def test_sweep_output_is_identical_across_thread_counts(tmp_path):
    cfg = _config(snr_db=[-6.0, 0.0], trials=6, sto_range=(0.0, 50.0), cfo_range=(-10.0, 10.0))
    paths = []
    for threads in (1, 2):
        cfg.threads = threads
        path = tmp_path / f"ber_{threads}.csv"
        write_result_csv(run_ber_sweep(cfg), path, BER_SCHEMA, RESULT_COLUMNS)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_result_csv_has_schema_line_and_columns(tmp_path):
    rows = [ResultRow.from_outcomes(5.0, -19.0, [_outcome()])]
    path = write_result_csv(rows, tmp_path / "nested" / "ber.csv", BER_SCHEMA, RESULT_COLUMNS)
    assert path.read_text(encoding="utf-8").splitlines()[0] == BER_SCHEMA
    frame = load_result_csv(path)
    assert list(frame.columns) == RESULT_COLUMNS
    assert frame.loc[0, "frames"] == 1
    assert frame.loc[0, "snr_db"] == 5.0


def test_run_log_records_config_and_command(tmp_path):
    cfg = _config()
    out_path = tmp_path / "results.csv"
    log_path = write_run_log(out_path, cfg, "sync-bench", time.monotonic())
    assert log_path == run_log_path(out_path)
    payload = json.loads(log_path.read_text(encoding="utf-8"))
    assert payload["command"] == "sync-bench"
    assert payload["run_id"].startswith("results_sync_bench_")
    assert payload["config"]["master_seed"] == 11
    assert payload["config"]["frame"]["payload_len"] == 12
    assert payload["runtime_seconds"] >= 0


def test_sync_bench_noiseless_errors_are_small(tmp_path):
    cfg = _config(trials=12, sto_range=(0.0, 100.0), cfo_range=(-20.0, 20.0))
    rows = run_sync_bench(cfg)
    row = rows[0]
    assert row.sync_failures == 0
    assert row.integer_exact_rate == 1.0
    assert row.tau_sto_rmse <= 0.01
    assert row.tau_cfo_rmse <= 0.01
    assert row.lambda_sto_rmse <= 0.01
    assert row.lambda_cfo_rmse <= 0.01

    path = write_result_csv(rows, tmp_path / "bench.csv", SYNC_BENCH_SCHEMA, SYNC_BENCH_COLUMNS)
    assert list(load_result_csv(path).columns) == SYNC_BENCH_COLUMNS


def test_fraction_estimates_tighten_as_snr_rises():
    trials = 40
    cfg = _config(snr_db=[-5.0, 0.0, 5.0, 15.0], trials=trials, sto_range=(0.0, 100.0), cfo_range=(-20.0, 20.0))
    rows = run_sync_bench(cfg)
    slack = 3.0 / math.sqrt(2 * trials)
    for column in ("lambda_sto_rmse", "lambda_cfo_rmse"):
        values = [getattr(row, column) for row in rows]
        assert not any(math.isnan(value) for value in values)
        for previous, current in zip(values, values[1:]):
            assert current <= previous * (1.0 + slack) + 1e-3
    assert rows[-1].lambda_sto_rmse < rows[0].lambda_sto_rmse


def test_sync_bench_fails_far_below_sensitivity():
    cfg = _config(snr_db=[-30.0], trials=10, sto_range=(0.0, 100.0), cfo_range=(-20.0, 20.0))
    row = run_sync_bench(cfg)[0]
    assert row.sync_failure_rate >= 0.8
    assert row.trials == 10


def _oracle_symbol_errors(n: int, snr_db: float, count: int, seed: int) -> int:
    rng = np.random.default_rng(seed)
    k = np.arange(n)
    base = np.exp(1j * np.pi * k * k / n - 1j * np.pi * k)
    sigma2 = 10 ** (-snr_db / 10)
    errors = 0
    for symbol in rng.integers(0, n, size=count):
        tone = base * np.exp(2j * np.pi * symbol * k / n)
        noise = np.sqrt(sigma2 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        spectrum = np.fft.fft((tone + noise) * np.conj(base))
        errors += int(np.argmax(np.abs(spectrum)) != symbol)
    return errors


def _genie_matches_oracle(snr_db: float, trials: int) -> None:
    cfg = ExperimentConfig(
        frame=FrameConfig(payload_len=16),
        sweep=SweepConfig(snr_db=[snr_db], trials=trials, coded=False),
        master_seed=5,
    )
    row = run_ber_sweep(cfg, genie=True)[0]
    oracle_errors = _oracle_symbol_errors(cfg.chirp.n, snr_db, row.symbols, seed=99)
    assert 0 < row.symbol_errors < row.symbols
    assert intervals_overlap(
        wilson_interval(row.symbol_errors, row.symbols),
        wilson_interval(oracle_errors, row.symbols),
    )


def test_genie_symbol_error_rate_matches_dechirp_oracle():
    _genie_matches_oracle(-12.0, 20)


@pytest.mark.slow
def test_genie_symbol_error_rate_matches_dechirp_oracle_long():
    for snr_db in (-14.0, -13.0, -12.0, -11.0, -10.0):
        _genie_matches_oracle(snr_db, 300)


def _row(snr_db: float, bit_errors: int, bits: int = 10_000) -> ResultRow:
    outcomes = [_outcome(bits=bits, bit_errors=bit_errors)]
    return ResultRow.from_outcomes(snr_db, snr_db, outcomes)


def test_log_crossing_interpolates_in_log_domain():
    assert log_crossing([0.0, 1.0], [1e-2, 1e-4], 1e-3) == pytest.approx(0.5)
    assert log_crossing([2.0, 0.0, 1.0], [1e-5, 1e-1, 1e-2], 1e-3) == pytest.approx(1.0 + 1.0 / 3.0)
    assert math.isnan(log_crossing([0.0, 1.0], [1e-4, 1e-5], 1e-3))
    with pytest.raises(ValueError):
        log_crossing([0.0, 1.0], [1e-2, 0.0], 1e-3)


def test_snr_at_ber_floors_error_free_points():
    rows = [_row(-9.0, 100), _row(-8.0, 10), _row(-7.0, 0)]
    assert snr_at_ber(rows) == pytest.approx(-8.0)
    # 0 errors in 10k bits counts as 5e-5
    assert snr_at_ber(rows, target=1e-4) == pytest.approx(-8.0 + 1.0 / math.log10(1e-3 / 5e-5))
    assert math.isnan(snr_at_ber(rows[:1]))


ONE_DB_GRID = [-12.0, -11.0, -10.0, -9.0, -8.0, -7.0, -6.0, -5.0]


@pytest.mark.slow
@pytest.mark.parametrize("coded", [False, True])
def test_full_sync_loses_at_most_one_db_to_genie(coded):
    cfg = ExperimentConfig(
        frame=FrameConfig(payload_len=64),
        sweep=SweepConfig(
            snr_db=ONE_DB_GRID,
            trials=200,
            coded=coded,
            sto_range=(0.0, 128.0),
            cfo_range=(-16.0, 16.0),
        ),
        master_seed=21,
        threads=-1,
    )
    genie_rows = run_ber_sweep(cfg, genie=True)
    full_rows = run_ber_sweep(cfg, genie=False)
    assert all(row.frames == 200 for row in full_rows)

    genie_crossing = snr_at_ber(genie_rows)
    full_crossing = snr_at_ber(full_rows)
    assert not math.isnan(genie_crossing)
    assert not math.isnan(full_crossing)
    assert full_crossing - genie_crossing <= 1.0
