"""Amplitude and phase estimators evaluated on a :class:`SpectralAccumulator`.

Coherent estimators:

* coherent power ``COP = |S_AB|`` and coherent amplitude ``sqrt(COP)``;
* coherent phase ``COA = 0.5 * Im(ln D_AB)``, branch-resolved and reported
  sine-referenced.

Baselines are the per-bin mean magnitude and the arithmetic mean of the
principal arguments of both channels.

All public phases are sine-referenced: a tone ``sin(2 pi f t + phi)`` is
reported as ``phi``. Internally the DFT yields the cosine-referenced
``phi - pi/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral_core import (
    SamplingGrid,
    SpectralAccumulator,
    cross_spectrum,
    nonconj_cross_spectrum,
    principal_angle,
)

__all__ = [
    "RealSpectrum",
    "ToneTruth",
    "wrap_phase",
    "coherent_power",
    "coherent_amplitude",
    "coherent_phase",
    "half_angle",
    "mean_amplitude",
    "mean_phase",
    "amplitude_deviation",
    "phase_deviation",
]

KINDS = ("power", "amplitude", "phase_radians", "deviation")
SINE_OFFSET = np.pi / 2


def wrap_phase(x):
    """Wrap angles into ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


@dataclass(frozen=True)
class RealSpectrum:
    """Real per-bin quantity on ``k = 1 .. L/2``.

    ``undefined`` marks bins where no value exists (their ``values`` are NaN).
    """

    values: np.ndarray
    grid: SamplingGrid
    kind: str
    undefined: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.undefined is None:
            object.__setattr__(self, "undefined", np.isnan(self.values))

    def at_bins(self, bins) -> np.ndarray:
        return self.values[np.asarray(bins, dtype=int) - 1]


@dataclass(frozen=True)
class ToneTruth:
    tone_bins: np.ndarray
    amplitude: float
    phases_sine_ref: np.ndarray

    def __post_init__(self):
        bins = np.asarray(self.tone_bins, dtype=int)
        phases = np.asarray(self.phases_sine_ref, dtype=float)
        if bins.shape != phases.shape:
            raise ValueError("tone_bins and phases_sine_ref must have equal length")
        if bins.size and (np.any(np.diff(bins) <= 0) or bins[0] < 1):
            raise ValueError("tone_bins must be strictly increasing and >= 1")
        object.__setattr__(self, "tone_bins", bins)
        object.__setattr__(self, "phases_sine_ref", phases)


def coherent_power(acc: SpectralAccumulator) -> RealSpectrum:
    """Coherent power: modulus of the averaged cross spectrum.

    For finite ``N`` the cross spectrum keeps a small imaginary residue from
    noise cross-terms, so the modulus is taken.
    """
    return RealSpectrum(np.abs(cross_spectrum(acc).values), acc.grid, "power")


def coherent_amplitude(acc: SpectralAccumulator) -> RealSpectrum:
    return RealSpectrum(np.sqrt(coherent_power(acc).values), acc.grid, "amplitude")


_BRANCH_TIE_TOL = 1e-9


def half_angle(d) -> np.ndarray:
    """``0.5 * Im(ln d)`` in ``(-pi/2, pi/2]``."""
    return 0.5 * principal_angle(d)


def coherent_phase(acc: SpectralAccumulator, truth_hint: RealSpectrum | None = None) -> RealSpectrum:
    """Coherent phase from the non-conjugated cross spectrum.

    The half angle of ``D_AB`` fixes the cosine-referenced phase only modulo
    ``pi``. The branch closest in circular distance to a reference phase is
    kept. The reference is ``truth_hint`` (sine-referenced) where given and
    finite, else the circular mean of the per-segment unit phasors of both
    channels. Bins with ``D_AB == 0`` come back undefined (NaN), as does
    the Nyquist bin, whose spectrum is real and so carries no phase.

    Parameters
    ----------
    acc : SpectralAccumulator
        Accumulated segment statistics, ``count >= 1``.
    truth_hint : RealSpectrum, optional
        Sine-referenced coarse phase used only for the branch choice.

    Returns
    -------
    RealSpectrum
        Sine-referenced phase in ``(-pi, pi]``, kind ``phase_radians``.
    """
    d = nonconj_cross_spectrum(acc).values
    undefined = d == 0
    if acc.grid.segment_len % 2 == 0:
        undefined[-1] = True
    psi = half_angle(d)

    ref = principal_angle(acc.sum_phasor_a + acc.sum_phasor_b)
    has_ref = (acc.sum_phasor_a + acc.sum_phasor_b) != 0
    if truth_hint is not None:
        hint = np.asarray(truth_hint.values, dtype=float) - SINE_OFFSET
        use_hint = np.isfinite(hint)
        ref = np.where(use_hint, hint, ref)
        has_ref = has_ref | use_hint

    # near-ties (e.g. a purely real Nyquist bin) keep the principal branch so
    # that rounding cannot flip the result
    flip = np.cos(psi - ref) < -_BRANCH_TIE_TOL
    psi = np.where(has_ref & flip, psi + np.pi, psi)

    phase = wrap_phase(psi + SINE_OFFSET)
    phase = np.where(undefined, np.nan, phase)
    return RealSpectrum(phase, acc.grid, "phase_radians", undefined)


def mean_amplitude(acc: SpectralAccumulator) -> RealSpectrum:
    """Baseline ``0.5 * (mean|A_j| + mean|B_j|)``."""
    if acc.count < 1:
        raise ValueError("accumulator is empty (count = 0)")
    return RealSpectrum(0.5 * (acc.sum_mag_a + acc.sum_mag_b) / acc.count, acc.grid, "amplitude")


def mean_phase(acc: SpectralAccumulator) -> RealSpectrum:
    """Baseline arithmetic mean of principal arguments, sine-referenced.

    Deliberately not a circular mean: the wrap fragility is the behaviour
    being compared against.
    """
    if acc.count < 1:
        raise ValueError("accumulator is empty (count = 0)")
    internal = 0.5 * (acc.sum_arg_a + acc.sum_arg_b) / acc.count
    return RealSpectrum(wrap_phase(internal + SINE_OFFSET), acc.grid, "phase_radians")


def amplitude_deviation(est: RealSpectrum, truth: ToneTruth) -> np.ndarray:
    """Relative deviation ``|est - U0| / U0`` at the tone bins."""
    if est.kind != "amplitude":
        raise ValueError(f"expected an amplitude spectrum, got kind {est.kind!r}")
    if truth.amplitude == 0:
        raise ValueError("true amplitude U0 is zero; relative deviation undefined")
    return np.abs(est.at_bins(truth.tone_bins) - truth.amplitude) / truth.amplitude


def phase_deviation(est: RealSpectrum, truth: ToneTruth) -> np.ndarray:
    """Absolute wrapped phase error in radians at the tone bins; NaN stays NaN."""
    if est.kind != "phase_radians":
        raise ValueError(f"expected a phase spectrum, got kind {est.kind!r}")
    return np.abs(wrap_phase(est.at_bins(truth.tone_bins) - truth.phases_sine_ref))
