"""Segmentation, amplitude-normalized one-sided DFT and spectral accumulation.

Every estimator in :mod:`cohspec.estimators` consumes a
:class:`SpectralAccumulator`, which stores raw per-bin sums over segments so
that partial accumulations (e.g. from parallel workers) merge exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = [
    "SamplingGrid",
    "TimeSegment",
    "SegmentedRecording",
    "ComplexSpectrum",
    "SpectralAccumulator",
    "segment_recording",
    "dft_forward",
    "dft_segments",
    "principal_angle",
    "accumulator_update",
    "accumulator_merge",
    "accumulate_recordings",
    "cross_spectrum",
    "nonconj_cross_spectrum",
]


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform sampling grid shared by all segments of a recording.

    Parameters
    ----------
    sample_rate_hz : float
        Sampling frequency in Hz.
    segment_len : int
        Samples per segment ``L``; must be even and at least 4.
    num_segments : int
        Number of contiguous segments ``N``.
    """

    sample_rate_hz: float
    segment_len: int
    num_segments: int

    def __post_init__(self):
        if not (self.sample_rate_hz > 0 and np.isfinite(self.sample_rate_hz)):
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if int(self.segment_len) != self.segment_len or self.segment_len < 4:
            raise ValueError(f"segment_len must be an integer >= 4, got {self.segment_len}")
        if self.segment_len % 2:
            raise ValueError(f"segment_len must be even, got {self.segment_len}")
        if int(self.num_segments) != self.num_segments or self.num_segments < 1:
            raise ValueError(f"num_segments must be a positive integer, got {self.num_segments}")

    @property
    def df(self) -> float:
        """Frequency resolution in Hz."""
        return self.sample_rate_hz / self.segment_len

    @property
    def num_bins(self) -> int:
        return self.segment_len // 2

    @property
    def total_samples(self) -> int:
        return self.segment_len * self.num_segments

    @property
    def duration_s(self) -> float:
        return self.total_samples / self.sample_rate_hz

    def frequencies(self) -> np.ndarray:
        """Reporting grid ``f_k = k * df`` for ``k = 1 .. L/2``."""
        return np.arange(1, self.num_bins + 1) * self.df

    def with_segments(self, num_segments: int) -> "SamplingGrid":
        return SamplingGrid(self.sample_rate_hz, self.segment_len, num_segments)


@dataclass(frozen=True)
class TimeSegment:
    samples: np.ndarray
    segment_index: int
    grid: SamplingGrid

    def __post_init__(self):
        if self.samples.shape != (self.grid.segment_len,):
            raise ValueError(
                f"segment must hold {self.grid.segment_len} samples, got shape {self.samples.shape}"
            )

    def times(self) -> np.ndarray:
        """Global sample times, continuous across segments."""
        L = self.grid.segment_len
        return (self.segment_index * L + np.arange(L)) / self.grid.sample_rate_hz


@dataclass(frozen=True)
class SegmentedRecording:
    """``N`` gapless segments of one channel, stored as an ``(N, L)`` array."""

    data: np.ndarray
    grid: SamplingGrid
    channel_id: str = "a"

    def __post_init__(self):
        expected = (self.grid.num_segments, self.grid.segment_len)
        if self.data.shape != expected:
            raise ValueError(f"recording shape {self.data.shape} does not match grid {expected}")

    def __len__(self) -> int:
        return self.grid.num_segments

    def __getitem__(self, j: int) -> TimeSegment:
        return TimeSegment(self.data[j], j, self.grid)

    def __iter__(self) -> Iterator[TimeSegment]:
        for j in range(len(self)):
            yield self[j]

    @property
    def segments(self) -> list[TimeSegment]:
        return list(self)

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)


@dataclass(frozen=True)
class ComplexSpectrum:
    """Complex one-sided spectrum on bins ``k = 1 .. L/2`` (array index ``k - 1``)."""

    values: np.ndarray
    grid: SamplingGrid

    def __post_init__(self):
        if self.values.shape != (self.grid.num_bins,):
            raise ValueError(
                f"spectrum must hold {self.grid.num_bins} bins, got shape {self.values.shape}"
            )

    def at_bin(self, k: int) -> complex:
        return complex(self.values[k - 1])


def segment_recording(samples, grid: SamplingGrid, channel_id: str = "a") -> SegmentedRecording:
    """Partition a sample stream into ``N`` contiguous segments of length ``L``.

    No windowing, no overlap. Raises ``ValueError`` when the stream length is
    not exactly ``N * L``.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D sample stream, got shape {x.shape}")
    if x.size != grid.total_samples:
        raise ValueError(
            f"expected {grid.total_samples} samples "
            f"({grid.num_segments} x {grid.segment_len}), got {x.size}"
        )
    return SegmentedRecording(x.reshape(grid.num_segments, grid.segment_len).copy(), grid, channel_id)


def _normalize_rfft(raw: np.ndarray, L: int) -> np.ndarray:
    # drop DC, 2/L interior, 1/L at Nyquist
    out = raw[..., 1:] * (2.0 / L)
    out[..., -1] *= 0.5
    return out


def dft_forward(seg: TimeSegment) -> ComplexSpectrum:
    """One-sided amplitude-normalized DFT of a single segment.

    ``X(k) = (2/L) sum_n x_n exp(-2 pi i k n / L)`` for ``1 <= k < L/2`` and
    ``(1/L) sum_n x_n (-1)^n`` at Nyquist. A bin-centred cosine of amplitude
    ``U0`` and phase ``psi`` maps to ``U0 * exp(i psi)``.
    """
    L = seg.grid.segment_len
    return ComplexSpectrum(_normalize_rfft(np.fft.rfft(seg.samples), L), seg.grid)


def dft_segments(rec: SegmentedRecording) -> np.ndarray:
    """Batch version of :func:`dft_forward`: ``(N, L)`` samples -> ``(N, L/2)`` spectra."""
    return _normalize_rfft(np.fft.rfft(rec.data, axis=-1), rec.grid.segment_len)


def principal_angle(z) -> np.ndarray:
    """Argument in ``(-pi, pi]``; exact zeros map to 0."""
    z = np.asarray(z)
    ang = np.angle(z)
    ang = np.where(ang == -np.pi, np.pi, ang)
    return np.where(z == 0, 0.0, ang)


def _unit_phasor(z: np.ndarray) -> np.ndarray:
    mag = np.abs(z)
    return np.divide(z, mag, out=np.zeros_like(z), where=mag > 0)


# Products spelled out in real arithmetic: numpy's vectorized complex multiply
# is not bit-symmetric, and channel swaps must give exact conjugates / equals.
def _conj_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    out.real = a.real * b.real + a.imag * b.imag
    out.imag = a.imag * b.real - a.real * b.imag
    return out


def _product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    out.real = a.real * b.real - a.imag * b.imag
    out.imag = a.real * b.imag + a.imag * b.real
    return out


@dataclass
class SpectralAccumulator:
    """Raw per-bin sums over segments.

    ``sum_phasor_*`` hold the sums of unit phasors ``A_j / |A_j|``; they only
    feed the branch choice of the coherent phase.
    """

    grid: SamplingGrid
    sum_cross: np.ndarray = field(default=None)
    sum_nonconj: np.ndarray = field(default=None)
    sum_mag_a: np.ndarray = field(default=None)
    sum_mag_b: np.ndarray = field(default=None)
    sum_arg_a: np.ndarray = field(default=None)
    sum_arg_b: np.ndarray = field(default=None)
    sum_phasor_a: np.ndarray = field(default=None)
    sum_phasor_b: np.ndarray = field(default=None)
    count: int = 0

    _complex_fields = ("sum_cross", "sum_nonconj", "sum_phasor_a", "sum_phasor_b")
    _real_fields = ("sum_mag_a", "sum_mag_b", "sum_arg_a", "sum_arg_b")

    def __post_init__(self):
        nb = self.grid.num_bins
        for name in self._complex_fields:
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(nb, dtype=complex))
        for name in self._real_fields:
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(nb, dtype=float))
        for name in self.field_names():
            if getattr(self, name).shape != (nb,):
                raise ValueError(f"{name} must have length {nb}")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return cls._complex_fields + cls._real_fields

    @classmethod
    def empty(cls, grid: SamplingGrid) -> "SpectralAccumulator":
        return cls(grid)

    @classmethod
    def from_spectra(cls, spec_a: np.ndarray, spec_b: np.ndarray, grid: SamplingGrid) -> "SpectralAccumulator":
        """Accumulate stacked spectra of shape ``(n, L/2)`` in one pass."""
        spec_a = np.atleast_2d(spec_a)
        spec_b = np.atleast_2d(spec_b)
        if spec_a.shape != spec_b.shape or spec_a.shape[-1] != grid.num_bins:
            raise ValueError(f"spectra shapes {spec_a.shape} and {spec_b.shape} do not match the grid")
        return cls(
            grid,
            sum_cross=_conj_product(spec_a, spec_b).sum(axis=0),
            sum_nonconj=_product(spec_a, spec_b).sum(axis=0),
            sum_mag_a=np.abs(spec_a).sum(axis=0),
            sum_mag_b=np.abs(spec_b).sum(axis=0),
            sum_arg_a=principal_angle(spec_a).sum(axis=0),
            sum_arg_b=principal_angle(spec_b).sum(axis=0),
            sum_phasor_a=_unit_phasor(spec_a).sum(axis=0),
            sum_phasor_b=_unit_phasor(spec_b).sum(axis=0),
            count=spec_a.shape[0],
        )

    def swapped(self) -> "SpectralAccumulator":
        """Accumulator with the roles of channels a and b exchanged."""
        return SpectralAccumulator(
            self.grid,
            sum_cross=np.conj(self.sum_cross),
            sum_nonconj=self.sum_nonconj.copy(),
            sum_mag_a=self.sum_mag_b.copy(),
            sum_mag_b=self.sum_mag_a.copy(),
            sum_arg_a=self.sum_arg_b.copy(),
            sum_arg_b=self.sum_arg_a.copy(),
            sum_phasor_a=self.sum_phasor_b.copy(),
            sum_phasor_b=self.sum_phasor_a.copy(),
            count=self.count,
        )


def _check_grid(expected: SamplingGrid, got: SamplingGrid, what: str):
    if (expected.sample_rate_hz, expected.segment_len) != (got.sample_rate_hz, got.segment_len):
        raise ValueError(f"{what} grid {got} does not match accumulator grid {expected}")


def accumulator_update(acc: SpectralAccumulator, spec_a: ComplexSpectrum,
                       spec_b: ComplexSpectrum) -> SpectralAccumulator:
    """Return a new accumulator with one segment pair added."""
    _check_grid(acc.grid, spec_a.grid, "channel a")
    _check_grid(acc.grid, spec_b.grid, "channel b")
    step = SpectralAccumulator.from_spectra(spec_a.values, spec_b.values, acc.grid)
    return accumulator_merge(acc, step)


def accumulator_merge(a: SpectralAccumulator, b: SpectralAccumulator) -> SpectralAccumulator:
    _check_grid(a.grid, b.grid, "merged")
    sums = {name: getattr(a, name) + getattr(b, name) for name in SpectralAccumulator.field_names()}
    return SpectralAccumulator(a.grid, count=a.count + b.count, **sums)


def accumulate_recordings(rec_a: SegmentedRecording, rec_b: SegmentedRecording) -> SpectralAccumulator:
    """DFT every segment pair of two synchronized recordings and accumulate."""
    if rec_a.grid != rec_b.grid:
        raise ValueError(f"channel grids differ: {rec_a.grid} vs {rec_b.grid}")
    return SpectralAccumulator.from_spectra(dft_segments(rec_a), dft_segments(rec_b), rec_a.grid)


def _require_count(acc: SpectralAccumulator):
    if acc.count < 1:
        raise ValueError("accumulator is empty (count = 0)")


def cross_spectrum(acc: SpectralAccumulator) -> ComplexSpectrum:
    """Finite-N cross spectrum ``mean_j A_j conj(B_j)``."""
    _require_count(acc)
    return ComplexSpectrum(acc.sum_cross / acc.count, acc.grid)


def nonconj_cross_spectrum(acc: SpectralAccumulator) -> ComplexSpectrum:
    """Finite-N non-conjugated cross spectrum ``mean_j A_j B_j``."""
    _require_count(acc)
    return ComplexSpectrum(acc.sum_nonconj / acc.count, acc.grid)
