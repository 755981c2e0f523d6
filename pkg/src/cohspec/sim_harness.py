"""Monte-Carlo experiments: per-tone deviations at a fixed SNR and the
frequency-averaged deviation versus SNR sweep.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .estimators import (
    ToneTruth,
    amplitude_deviation,
    coherent_amplitude,
    coherent_phase,
    mean_amplitude,
    mean_phase,
    phase_deviation,
)
from .signal_synth import (
    MultisineSpec,
    NoiseSpec,
    default_phases,
    default_tone_bins,
    synth_channel_pair,
)
from .spectral_core import SamplingGrid, SpectralAccumulator, accumulate_recordings

__all__ = [
    "PAPER_GRID",
    "DESK_GRID",
    "PRESETS",
    "DEV_COLUMNS",
    "ExperimentConfig",
    "DeviationReport",
    "SweepRow",
    "SweepResult",
    "evaluate",
    "frequency_average",
    "run_fixed_snr",
    "run_snr_sweep",
    "find_crossover",
    "monotonicity_violations",
    "trial_seed",
    "with_segments",
]

# 1024 x 100 s records of 2048 points: 10 mHz steps up to 10.24 Hz
PAPER_GRID = SamplingGrid(sample_rate_hz=20.48, segment_len=2048, num_segments=1024)
DESK_GRID = SamplingGrid(sample_rate_hz=5.12, segment_len=512, num_segments=256)
PRESETS = {"paper": PAPER_GRID, "desk": DESK_GRID}

DEV_COLUMNS = ("dev_sqrtCOP", "dev_meanamp", "dev_COA", "dev_meanphase")
EST_COLUMNS = ("sqrt_COP", "mean_amplitude", "COA", "mean_phase")


def default_snr_points(num: int = 25, lo: float = 0.01, hi: float = 10.0) -> tuple[float, ...]:
    return tuple(float(s) for s in np.geomspace(lo, hi, num))


@dataclass(frozen=True)
class ExperimentConfig:
    grid: SamplingGrid = PAPER_GRID
    tone_bins: tuple | None = None
    num_tones: int = 16
    phases: tuple | None = None
    phase_seed: int = 0
    master_seed: int = 2024
    noise_amplitude: float = 1.0
    snr_points: tuple = field(default_factory=default_snr_points)
    trials_per_point: int = 1

    def __post_init__(self):
        if self.trials_per_point < 1:
            raise ValueError(f"trials_per_point must be >= 1, got {self.trials_per_point}")
        if not self.noise_amplitude > 0:
            raise ValueError(f"noise_amplitude must be > 0, got {self.noise_amplitude}")
        if any(not s > 0 for s in self.snr_points):
            raise ValueError(f"snr_points must all be positive: {self.snr_points}")

    @classmethod
    def preset(cls, name: str, **overrides) -> "ExperimentConfig":
        try:
            grid = PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
        return cls(grid=grid, **overrides)

    def resolved_bins(self) -> tuple[int, ...]:
        if self.tone_bins is not None:
            return tuple(int(k) for k in self.tone_bins)
        return tuple(default_tone_bins(self.grid, self.num_tones))

    def resolved_phases(self) -> tuple[float, ...]:
        if self.phases is not None:
            return tuple(float(p) for p in self.phases)
        return tuple(default_phases(len(self.resolved_bins()), self.phase_seed))

    def multisine(self, amplitude: float) -> MultisineSpec:
        return MultisineSpec(self.resolved_bins(), amplitude, self.resolved_phases(), self.grid)

    def echo(self) -> dict:
        d = asdict(self)
        d["tone_bins"] = list(self.resolved_bins())
        d["phases"] = list(self.resolved_phases())
        d["snr_points"] = list(self.snr_points)
        return d


@dataclass
class DeviationReport:
    """Per-tone estimates and deviations plus their frequency averages.

    ``per_tone`` maps column names (``f_hz``, ``bin``, estimate columns and
    :data:`DEV_COLUMNS`) to arrays over tones. ``undefined_counts`` counts the
    NaN entries excluded from each averaged column.
    """

    per_tone: dict
    freq_averaged: dict
    undefined_counts: dict
    metadata: dict = field(default_factory=dict)


def evaluate(acc: SpectralAccumulator, truth: ToneTruth) -> dict:
    """All four estimators and their deviations at the tone bins."""
    amp_c = coherent_amplitude(acc)
    amp_m = mean_amplitude(acc)
    ph_c = coherent_phase(acc)
    ph_m = mean_phase(acc)
    bins = truth.tone_bins
    return {
        "f_hz": bins * acc.grid.df,
        "bin": bins.copy(),
        "sqrt_COP": amp_c.at_bins(bins),
        "mean_amplitude": amp_m.at_bins(bins),
        "COA": ph_c.at_bins(bins),
        "mean_phase": ph_m.at_bins(bins),
        "dev_sqrtCOP": amplitude_deviation(amp_c, truth),
        "dev_meanamp": amplitude_deviation(amp_m, truth),
        "dev_COA": phase_deviation(ph_c, truth),
        "dev_meanphase": phase_deviation(ph_m, truth),
    }


def frequency_average(per_tone: dict, columns=DEV_COLUMNS) -> tuple[dict, dict]:
    """Mean of each deviation column over tones, skipping undefined (NaN) entries.

    Returns ``(means, undefined_counts)``; a column with no defined entry
    averages to NaN.
    """
    means, undefined = {}, {}
    for col in columns:
        v = np.asarray(per_tone[col], dtype=float)
        if v.size == 0:
            raise ValueError("frequency_average needs at least one tone row")
        ok = ~np.isnan(v)
        undefined[col] = int(v.size - ok.sum())
        means[col] = float(v[ok].mean()) if ok.any() else float("nan")
    return means, undefined


def _amplitudes_for(snr: float, noise_amplitude: float) -> tuple[float, float]:
    # SNR is moved by scaling U0 at fixed N0
    if np.isinf(snr):
        return noise_amplitude, 0.0
    if not snr > 0:
        raise ValueError(f"snr must be > 0, got {snr}")
    return snr * noise_amplitude, noise_amplitude


def run_fixed_snr(cfg: ExperimentConfig, snr: float, seed: int | None = None) -> DeviationReport:
    """Synthesize one channel pair at ``snr``, accumulate every segment and
    score the four estimators at the tone bins.

    ``snr = inf`` runs noiseless with ``U0 = noise_amplitude``.
    """
    t0 = time.perf_counter()
    seed = cfg.master_seed if seed is None else seed
    u0, n0 = _amplitudes_for(snr, cfg.noise_amplitude)
    pair = synth_channel_pair(cfg.multisine(u0), NoiseSpec(n0, seed), cfg.grid)
    acc = accumulate_recordings(pair.channel_a, pair.channel_b)
    per_tone = evaluate(acc, pair.truth)
    means, undefined = frequency_average(per_tone)
    meta = {
        "snr": snr,
        "signal_amplitude": u0,
        "noise_amplitude": n0,
        "seed": seed,
        "config": cfg.echo(),
        "wall_clock_s": time.perf_counter() - t0,
    }
    return DeviationReport(per_tone, means, undefined, meta)


def trial_seed(master_seed: int, point_index: int, trial: int) -> int:
    """Independent 64-bit noise seed for one (SNR point, trial)."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(point_index), int(trial)))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class SweepRow:
    snr: float
    means: dict
    stderr: dict
    trials: int


@dataclass
class SweepResult:
    rows: list
    config: ExperimentConfig
    wall_clock_s: float = 0.0

    @property
    def snr(self) -> np.ndarray:
        return np.array([r.snr for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([r.means[name] for r in self.rows])

    def stderr(self, name: str) -> np.ndarray:
        return np.array([r.stderr[name] for r in self.rows])

    def amplitude_crossover(self):
        return find_crossover(self.snr, self.column("dev_sqrtCOP") - self.column("dev_meanamp"))

    def phase_crossover(self):
        return find_crossover(self.snr, self.column("dev_COA") - self.column("dev_meanphase"))


def run_snr_sweep(cfg: ExperimentConfig, workers: int = 1, progress=None) -> SweepResult:
    """Frequency-averaged deviations for every SNR point, averaged over trials.

    Every (point, trial) uses its own derived seed, so the result does not
    depend on ``workers`` or scheduling order.
    """
    if not cfg.snr_points:
        raise ValueError("snr_points is empty")
    t0 = time.perf_counter()
    jobs = [(i, t, s) for i, s in enumerate(cfg.snr_points) for t in range(cfg.trials_per_point)]

    def run(job):
        i, t, s = job
        rep = run_fixed_snr(cfg, s, seed=trial_seed(cfg.master_seed, i, t))
        if progress is not None:
            progress(i, t, s)
        return rep.freq_averaged

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    rows = []
    n = cfg.trials_per_point
    for i, s in enumerate(cfg.snr_points):
        block = results[i * n:(i + 1) * n]
        means, se = {}, {}
        for col in DEV_COLUMNS:
            v = np.array([r[col] for r in block])
            means[col] = float(np.nanmean(v)) if np.any(~np.isnan(v)) else float("nan")
            se[col] = float(np.nanstd(v, ddof=1) / np.sqrt(np.sum(~np.isnan(v)))) if n > 1 else float("nan")
        rows.append(SweepRow(float(s), means, se, n))
    return SweepResult(rows, cfg, time.perf_counter() - t0)


def find_crossover(snr, diff):
    """First sign change of ``diff`` along increasing SNR.

    Returns ``(snr_cross, direction)`` with the crossing interpolated linearly
    in log-SNR, ``direction`` being ``"falls"`` when ``diff`` goes from
    positive to negative and ``"rises"`` otherwise, or ``None`` if ``diff``
    never changes sign.
    """
    snr = np.asarray(snr, dtype=float)
    diff = np.asarray(diff, dtype=float)
    order = np.argsort(snr)
    snr, diff = snr[order], diff[order]
    for i in range(len(diff) - 1):
        d0, d1 = diff[i], diff[i + 1]
        if np.isnan(d0) or np.isnan(d1) or d0 == 0 or np.sign(d0) == np.sign(d1):
            continue
        x0, x1 = np.log(snr[i]), np.log(snr[i + 1])
        x = x0 + (x1 - x0) * d0 / (d0 - d1)
        return float(np.exp(x)), ("falls" if d0 > 0 else "rises")
    return None


def monotonicity_violations(result: SweepResult, k: float = 3.0) -> list[tuple[str, float, float]]:
    """Adjacent SNR steps where a deviation curve rises by more than ``k``
    combined trial standard errors."""
    bad = []
    s = result.snr
    for col in DEV_COLUMNS:
        m, se = result.column(col), result.stderr(col)
        for i in range(len(m) - 1):
            tol = k * np.hypot(se[i], se[i + 1])
            if m[i + 1] - m[i] > tol:
                bad.append((col, float(s[i]), float(s[i + 1])))
    return bad


def with_segments(cfg: ExperimentConfig, num_segments: int) -> ExperimentConfig:
    return replace(cfg, grid=cfg.grid.with_segments(num_segments))
