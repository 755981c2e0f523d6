"""Bin-synchronized multi-sine and seeded white noise for the two-channel model
``a = u + n``, ``b = u + m``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import ToneTruth
from .spectral_core import SamplingGrid, SegmentedRecording, TimeSegment

__all__ = [
    "MultisineSpec",
    "NoiseSpec",
    "ChannelPair",
    "OffGridFrequencyError",
    "validate_bin_sync",
    "default_tone_bins",
    "default_phases",
    "synth_multisine",
    "synth_noise",
    "noise_seed_sequence",
    "synth_channel_pair",
    "snr",
]


class OffGridFrequencyError(ValueError):
    """A tone frequency does not fall on the analysis grid."""


@dataclass(frozen=True)
class MultisineSpec:
    """Equal-amplitude multi-sine with every tone on a DFT bin.

    ``phases`` are sine phases in ``(-pi, pi]``.
    """

    tone_bins: tuple
    amplitude: float
    phases: tuple
    grid: SamplingGrid

    def __post_init__(self):
        bins = tuple(int(k) for k in self.tone_bins)
        phases = tuple(float(p) for p in self.phases)
        object.__setattr__(self, "tone_bins", bins)
        object.__setattr__(self, "phases", phases)
        if not self.amplitude > 0:
            raise ValueError(f"multisine amplitude must be > 0, got {self.amplitude}")
        if len(bins) != len(phases):
            raise ValueError(f"{len(bins)} tone bins but {len(phases)} phases")
        if any(b2 <= b1 for b1, b2 in zip(bins, bins[1:])):
            raise ValueError(f"tone bins must be strictly increasing: {bins}")
        nyq = self.grid.num_bins
        for k in bins:
            if not 1 <= k < nyq:
                raise ValueError(f"tone bin {k} outside 1 .. {nyq - 1} (DC and Nyquist excluded)")
        for p in phases:
            if not -np.pi < p <= np.pi:
                raise ValueError(f"phase {p} outside (-pi, pi]")

    @property
    def frequencies(self) -> np.ndarray:
        return np.asarray(self.tone_bins) * self.grid.df

    def truth(self) -> ToneTruth:
        return ToneTruth(np.asarray(self.tone_bins), self.amplitude, np.asarray(self.phases))


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian white noise with standard deviation ``amplitude``."""

    amplitude: float
    master_seed: int = 0

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError(f"noise amplitude must be >= 0, got {self.amplitude}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError(f"master_seed must fit in an unsigned 64-bit integer, got {self.master_seed}")


@dataclass(frozen=True)
class ChannelPair:
    channel_a: SegmentedRecording
    channel_b: SegmentedRecording
    truth: ToneTruth

    @property
    def grid(self) -> SamplingGrid:
        return self.channel_a.grid


def validate_bin_sync(frequencies_hz, grid: SamplingGrid, rtol: float = 1e-9) -> list[int]:
    """Map tone frequencies onto grid bins, rejecting anything off-grid.

    Raises
    ------
    OffGridFrequencyError
        If ``f / df`` is not an integer to within ``rtol``, or the frequency
        is not strictly between 0 and Nyquist. The message names the nearest
        grid frequencies.
    """
    df = grid.df
    nyquist = grid.num_bins * df
    bins = []
    for f in frequencies_hz:
        f = float(f)
        if not 0 < f < nyquist:
            raise OffGridFrequencyError(f"tone frequency {f!r} Hz must lie in (0, {nyquist!r}) Hz")
        ratio = f / df
        k = round(ratio)
        if k < 1 or abs(ratio - k) > rtol * ratio:
            lo = max(int(np.floor(ratio)), 1) * df
            hi = int(np.ceil(ratio)) * df
            raise OffGridFrequencyError(
                f"tone frequency {f!r} Hz is not on the {df!r} Hz grid "
                f"(f/df = {ratio!r}); nearest grid frequencies: {lo!r} Hz or {hi!r} Hz"
            )
        bins.append(int(k))
    return bins


def default_tone_bins(grid: SamplingGrid, num_tones: int = 16,
                      f_lo: float = 0.01, f_hi: float = 10.0) -> list[int]:
    """About log-spaced distinct bins between ``f_lo`` and ``f_hi``, excluding DC and Nyquist."""
    k_lo = max(1, int(round(f_lo / grid.df)))
    k_hi = min(grid.num_bins - 1, int(round(f_hi / grid.df)))
    if k_hi - k_lo + 1 < num_tones:
        raise ValueError(f"only {k_hi - k_lo + 1} bins available for {num_tones} tones")
    bins = []
    for k in np.rint(np.geomspace(k_lo, k_hi, num_tones)).astype(int):
        k = max(int(k), bins[-1] + 1 if bins else k_lo)
        bins.append(k)
    # push back down if the last tones overshot
    for i in range(len(bins) - 1, -1, -1):
        upper = k_hi if i == len(bins) - 1 else bins[i + 1] - 1
        bins[i] = min(bins[i], upper)
    return bins


def default_phases(num_tones: int, seed: int = 0) -> list[float]:
    """Seeded pseudo-random sine phases in ``(-pi/2, pi/2]``."""
    rng = np.random.default_rng(seed)
    return list(np.pi / 2 - rng.uniform(0.0, np.pi, num_tones))


def synth_multisine(spec: MultisineSpec, segment_index: int) -> TimeSegment:
    """Samples ``U0 * sum_l sin(2 pi f_l t + phi_l)`` at global times of segment ``j``.

    ``f_l t = k_l (j L + i) / L``; the integer part is dropped before scaling
    by 2 pi so late segments carry no phase round-off.
    """
    L = spec.grid.segment_len
    n = segment_index * L + np.arange(L)
    x = np.zeros(L)
    for k, phi in zip(spec.tone_bins, spec.phases):
        cycles = np.mod(k * n, L) / L
        x += np.sin(2 * np.pi * cycles + phi)
    return TimeSegment(spec.amplitude * x, segment_index, spec.grid)


def _label_code(label: str) -> int:
    return int.from_bytes(label.encode("utf-8"), "little")


def noise_seed_sequence(master_seed: int, channel_id: str, segment_index: int) -> np.random.SeedSequence:
    """Sub-stream seed for one (channel, segment): ``SeedSequence(master_seed,
    spawn_key=(utf8-little-endian int of the label, segment_index))``."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(_label_code(channel_id), int(segment_index)))


def synth_noise(spec: NoiseSpec, channel_id: str, segment_index: int, grid: SamplingGrid) -> TimeSegment:
    L = grid.segment_len
    if spec.amplitude == 0:
        return TimeSegment(np.zeros(L), segment_index, grid)
    rng = np.random.Generator(np.random.PCG64(noise_seed_sequence(spec.master_seed, channel_id, segment_index)))
    return TimeSegment(spec.amplitude * rng.standard_normal(L), segment_index, grid)


def _noise_block(spec: NoiseSpec, channel_id: str, grid: SamplingGrid) -> np.ndarray:
    out = np.empty((grid.num_segments, grid.segment_len))
    for j in range(grid.num_segments):
        out[j] = synth_noise(spec, channel_id, j, grid).samples
    return out


def synth_channel_pair(ms: MultisineSpec, ns: NoiseSpec, grid: SamplingGrid | None = None) -> ChannelPair:
    """Two channels sharing one noiseless multi-sine plus independent noise."""
    grid = ms.grid if grid is None else grid
    if grid != ms.grid:
        raise ValueError(f"multisine grid {ms.grid} differs from requested grid {grid}")
    # bin-synchronized tones make every segment identical
    u = synth_multisine(ms, 0).samples
    a = u + _noise_block(ns, "a", grid)
    b = u + _noise_block(ns, "b", grid)
    return ChannelPair(SegmentedRecording(a, grid, "a"), SegmentedRecording(b, grid, "b"), ms.truth())


def snr(signal_amplitude: float, noise_amplitude: float) -> float:
    """``U0 / N0``; ``inf`` when there is no noise."""
    if not signal_amplitude > 0:
        raise ValueError(f"signal amplitude must be > 0, got {signal_amplitude}")
    if noise_amplitude < 0:
        raise ValueError(f"noise amplitude must be >= 0, got {noise_amplitude}")
    if noise_amplitude == 0:
        return float("inf")
    return signal_amplitude / noise_amplitude
