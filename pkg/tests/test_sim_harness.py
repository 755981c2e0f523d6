import numpy as np
import pytest

from cohspec.sim_harness import (
    DESK_GRID,
    DEV_COLUMNS,
    ExperimentConfig,
    SweepResult,
    SweepRow,
    find_crossover,
    frequency_average,
    monotonicity_violations,
    run_fixed_snr,
    run_snr_sweep,
    trial_seed,
)
from cohspec.spectral_core import SamplingGrid

SMALL = SamplingGrid(6.4, 64, 32)


def small_cfg(**kw):
    kw.setdefault("num_tones", 6)
    return ExperimentConfig(grid=SMALL, **kw)


class TestConfig:
    def test_full_scale_default(self):
        cfg = ExperimentConfig()
        assert cfg.grid.duration_s == pytest.approx(102400.0)
        assert cfg.grid.df == pytest.approx(0.01)
        assert len(cfg.snr_points) == 25
        assert cfg.snr_points[0] == pytest.approx(0.01) and cfg.snr_points[-1] == pytest.approx(10.0)

    def test_presets(self):
        assert ExperimentConfig.preset("desk").grid == DESK_GRID
        with pytest.raises(ValueError):
            ExperimentConfig.preset("laptop")

    @pytest.mark.parametrize("kw", [dict(trials_per_point=0), dict(snr_points=(1.0, -1.0))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            small_cfg(**kw)


class TestFrequencyAverage:
    def test_single_row(self):
        row = {c: np.array([0.25]) for c in DEV_COLUMNS}
        means, undefined = frequency_average(row)
        assert means == {c: 0.25 for c in DEV_COLUMNS}
        assert all(v == 0 for v in undefined.values())

    def test_two_rows(self):
        means, _ = frequency_average({"x": np.array([0.1, 0.3])}, columns=["x"])
        assert means["x"] == pytest.approx(0.2)

    def test_undefined_excluded_and_counted(self):
        means, undefined = frequency_average({"x": np.array([0.1, np.nan, 0.5]), "y": np.array([np.nan])},
                                             columns=["x", "y"])
        assert means["x"] == pytest.approx(0.3) and undefined["x"] == 1
        assert np.isnan(means["y"]) and undefined["y"] == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            frequency_average({"x": np.array([])}, columns=["x"])


class TestFixedSNR:
    def test_noiseless(self):
        rep = run_fixed_snr(small_cfg(), float("inf"))
        for c in DEV_COLUMNS:
            assert rep.per_tone[c].max() < 1e-9

    def test_report_integrity(self):
        rep = run_fixed_snr(small_cfg(), 0.3)
        for c in DEV_COLUMNS:
            assert abs(rep.freq_averaged[c] - np.mean(rep.per_tone[c])) <= 1e-12
        assert rep.metadata["seed"] == small_cfg().master_seed

    def test_reproducible(self):
        a = run_fixed_snr(small_cfg(), 0.1)
        b = run_fixed_snr(small_cfg(), 0.1)
        for c in a.per_tone:
            np.testing.assert_array_equal(a.per_tone[c], b.per_tone[c])

    def test_rejects_nonpositive_snr(self):
        with pytest.raises(ValueError):
            run_fixed_snr(small_cfg(), 0.0)

    def test_desk_dominance(self):
        cfg = ExperimentConfig.preset("desk")
        a = run_fixed_snr(cfg, 0.32).freq_averaged
        p = run_fixed_snr(cfg, 0.024).freq_averaged
        assert a["dev_sqrtCOP"] < a["dev_meanamp"]
        assert p["dev_COA"] < p["dev_meanphase"]

    def test_deviation_falls_with_snr(self):
        cfg = ExperimentConfig.preset("desk")
        lo = run_fixed_snr(cfg, 0.1).freq_averaged
        hi = run_fixed_snr(cfg, 10.0).freq_averaged
        for c in DEV_COLUMNS:
            assert hi[c] < lo[c]


class TestSweep:
    def test_shape_and_trials(self):
        cfg = small_cfg(snr_points=(0.1, 1.0, 10.0), trials_per_point=2)
        res = run_snr_sweep(cfg)
        assert len(res.rows) == 3
        assert all(r.trials == 2 for r in res.rows)
        assert all(np.isfinite(r.stderr[c]) for r in res.rows for c in DEV_COLUMNS)

    def test_trial_seeds_distinct(self):
        seeds = {trial_seed(1, i, t) for i in range(25) for t in range(8)}
        assert len(seeds) == 200

    def test_workers_do_not_change_result(self):
        cfg = small_cfg(snr_points=(0.1, 1.0), trials_per_point=2)
        a, b = run_snr_sweep(cfg), run_snr_sweep(cfg, workers=3)
        for ra, rb in zip(a.rows, b.rows):
            assert ra.means == rb.means

    def test_single_trial_stderr_nan(self):
        res = run_snr_sweep(small_cfg(snr_points=(1.0,)))
        assert np.isnan(res.rows[0].stderr["dev_COA"])


class TestCrossover:
    def test_interpolated_in_log_snr(self):
        s, direction = find_crossover([0.1, 1.0, 10.0], [-1.0, 1.0, 2.0])
        assert s == pytest.approx(np.sqrt(0.1 * 1.0))
        assert direction == "rises"

    def test_falls(self):
        assert find_crossover([1.0, 10.0], [1.0, -3.0])[1] == "falls"

    def test_none(self):
        assert find_crossover([1.0, 2.0, 3.0], [-1.0, -2.0, -0.5]) is None


class TestMonotonicity:
    def result(self, col_vals, se):
        rows = [SweepRow(s, {c: v for c in DEV_COLUMNS}, {c: se for c in DEV_COLUMNS}, 4)
                for s, v in zip([0.1, 1.0, 10.0], col_vals)]
        return SweepResult(rows, small_cfg())

    def test_flags_significant_rise(self):
        assert monotonicity_violations(self.result([1.0, 2.0, 0.5], 0.01))

    def test_tolerates_noise(self):
        assert not monotonicity_violations(self.result([1.0, 1.02, 0.5], 0.01))
