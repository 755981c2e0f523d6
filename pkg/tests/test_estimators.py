import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohspec.estimators import (
    RealSpectrum,
    ToneTruth,
    amplitude_deviation,
    coherent_amplitude,
    coherent_phase,
    coherent_power,
    half_angle,
    mean_amplitude,
    mean_phase,
    phase_deviation,
    wrap_phase,
)
from cohspec.signal_synth import MultisineSpec, NoiseSpec, synth_channel_pair
from cohspec.spectral_core import (
    ComplexSpectrum,
    SamplingGrid,
    SegmentedRecording,
    SpectralAccumulator,
    accumulate_recordings,
    accumulator_update,
)


def acc_from_bins(A, B, grid=None):
    """Accumulator from per-segment values of bin 1 (other bins zero)."""
    grid = grid or SamplingGrid(4.0, 4, 1)
    A, B = np.atleast_1d(A).astype(complex), np.atleast_1d(B).astype(complex)
    sa = np.zeros((A.size, grid.num_bins), dtype=complex)
    sb = np.zeros_like(sa)
    sa[:, 0], sb[:, 0] = A, B
    return SpectralAccumulator.from_spectra(sa, sb, grid)


def noisy_acc(U0, N0, seed=3, N=64, L=64, bins=(3, 7, 11), phases=(0.3, -1.2, 1.5)):
    g = SamplingGrid(float(L), L, N)
    ms = MultisineSpec(bins, U0, phases, g)
    pair = synth_channel_pair(ms, NoiseSpec(N0, seed), g)
    return accumulate_recordings(pair.channel_a, pair.channel_b), pair


class TestWrap:
    def test_range(self):
        x = np.array([np.pi, -np.pi, 3 * np.pi, 0.0, 2 * np.pi + 0.1, -0.1])
        np.testing.assert_allclose(wrap_phase(x), [np.pi, np.pi, np.pi, 0.0, 0.1, -0.1], atol=1e-15)


class TestCoherentPower:
    def test_noiseless_tone(self):
        acc, _ = noisy_acc(2.0, 0.0)
        assert coherent_power(acc).at_bins([3])[0] == pytest.approx(4.0, rel=1e-13)

    def test_zero_signal(self):
        g = SamplingGrid(8.0, 8, 2)
        z = SegmentedRecording(np.zeros((2, 8)), g)
        acc = accumulate_recordings(z, z)
        assert np.all(coherent_power(acc).values == 0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            coherent_power(SpectralAccumulator.empty(SamplingGrid(4.0, 4, 1)))


class TestCoherentAmplitude:
    def test_sqrt(self):
        g = SamplingGrid(12.0, 6, 1)
        A = np.array([2, 0, 1], dtype=complex)
        acc = accumulator_update(SpectralAccumulator.empty(g), ComplexSpectrum(A, g), ComplexSpectrum(A, g))
        np.testing.assert_array_equal(coherent_power(acc).values, [4, 0, 1])
        np.testing.assert_array_equal(coherent_amplitude(acc).values, [2, 0, 1])

    def test_noiseless_unit(self):
        acc, _ = noisy_acc(1.0, 0.0)
        np.testing.assert_allclose(coherent_amplitude(acc).at_bins([3, 7, 11]), 1.0, atol=1e-14)


class TestCoherentPhase:
    def test_half_angle_example(self):
        d = np.exp(1j * np.pi / 3)
        acc = acc_from_bins(d, 1.0)  # D = d, phasor reference arg(d) + 0 -> near pi/6 branch
        assert half_angle(d) == pytest.approx(np.pi / 6)
        assert coherent_phase(acc).values[0] == pytest.approx(2 * np.pi / 3, abs=1e-15)

    def test_branch_follows_reference(self):
        # psi = -2.5: D = exp(-5i) gives half angle 0.64, the reference must pull it back
        psi = -2.5
        acc = acc_from_bins(np.exp(1j * psi), np.exp(1j * psi))
        assert coherent_phase(acc).values[0] == pytest.approx(wrap_phase(psi + np.pi / 2), abs=1e-14)

    def test_truth_hint_overrides_reference(self):
        psi = -2.5
        acc = acc_from_bins(np.exp(1j * psi), np.exp(1j * psi))
        g = acc.grid
        hint = RealSpectrum(np.array([wrap_phase(psi + np.pi + np.pi / 2), np.nan]), g, "phase_radians")
        assert coherent_phase(acc, hint).values[0] == pytest.approx(wrap_phase(psi + np.pi + np.pi / 2))

    def test_undefined_bins_flagged(self):
        acc = acc_from_bins(0.0, 1.0)
        ph = coherent_phase(acc)
        assert np.all(ph.undefined)
        assert np.all(np.isnan(ph.values))

    def test_noiseless_multisine_phase(self):
        acc, _ = noisy_acc(1.0, 0.0, phases=(0.3, 0.3, 0.3))
        np.testing.assert_allclose(coherent_phase(acc).at_bins([3, 7, 11]), 0.3, atol=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(re=st.floats(-1e3, 1e3), im=st.floats(-1e3, 1e3))
    def test_half_angle_identity(self, re, im):
        d = complex(re, im)
        if abs(d) < 1e-300:
            return
        lhs = np.exp(2j * half_angle(d))
        assert abs(lhs - d / abs(d)) < 1e-12


class TestBaselines:
    def test_mean_amplitude_noiseless(self):
        acc, _ = noisy_acc(1.0, 0.0)
        np.testing.assert_allclose(mean_amplitude(acc).at_bins([3, 7, 11]), 1.0, atol=1e-14)

    def test_mean_amplitude_arithmetic(self):
        N = 5
        acc = acc_from_bins(np.full(N, 2.0), np.full(N, 4.0))
        assert mean_amplitude(acc).values[0] == pytest.approx(3.0)

    def test_mean_amplitude_noise_only_positive(self):
        # rectified noise: recorded minimum 0.1002 (Nyquist bin) for seed 7, L = 64, N = 256
        g = SamplingGrid(64.0, 64, 256)
        ms = MultisineSpec((), 1.0, (), g)
        pair = synth_channel_pair(ms, NoiseSpec(1.0, 7), g)
        m = mean_amplitude(accumulate_recordings(pair.channel_a, pair.channel_b)).values
        assert np.all(m > 0.09)

    def test_mean_phase_noiseless(self):
        acc, _ = noisy_acc(1.0, 0.0, phases=(0.3, 0.3, 0.3))
        np.testing.assert_allclose(mean_phase(acc).at_bins([3, 7, 11]), 0.3, atol=1e-12)

    def test_mean_phase_arithmetic(self):
        A = np.exp(1j * np.array([0.1, 0.3]))
        acc = acc_from_bins(A, A)
        assert mean_phase(acc).values[0] == pytest.approx(0.2 + np.pi / 2, abs=1e-15)

    def test_mean_phase_wraps_like_arithmetic_mean(self):
        # args 3.0 and -3.0 average to 0, not to pi
        A = np.exp(1j * np.array([3.0, -3.0]))
        acc = acc_from_bins(A, A)
        assert mean_phase(acc).values[0] == pytest.approx(np.pi / 2, abs=1e-15)

    def test_empty_rejected(self):
        empty = SpectralAccumulator.empty(SamplingGrid(4.0, 4, 1))
        for f in (mean_amplitude, mean_phase, coherent_phase, coherent_amplitude):
            with pytest.raises(ValueError):
                f(empty)


class TestDeviation:
    g = SamplingGrid(8.0, 8, 1)

    def truth(self, amp=1.0, phases=(0.5,)):
        return ToneTruth(np.array([2]), amp, np.array(phases))

    def amp(self, v):
        return RealSpectrum(np.array([0.0, v, 0.0, 0.0]), self.g, "amplitude")

    def phase(self, v):
        return RealSpectrum(np.array([0.0, v, 0.0, 0.0]), self.g, "phase_radians")

    def test_amplitude(self):
        assert amplitude_deviation(self.amp(1.1), self.truth())[0] == pytest.approx(0.1)
        assert amplitude_deviation(self.amp(1.0), self.truth())[0] == 0

    def test_amplitude_rejects_zero_truth_and_wrong_kind(self):
        with pytest.raises(ValueError):
            amplitude_deviation(self.amp(1.0), self.truth(amp=0.0))
        with pytest.raises(ValueError):
            amplitude_deviation(self.phase(1.0), self.truth())

    def test_phase(self):
        t = self.truth()
        assert phase_deviation(self.phase(0.5), t)[0] == 0
        assert phase_deviation(self.phase(0.5 + 2 * np.pi), t)[0] == pytest.approx(0, abs=1e-15)
        assert phase_deviation(self.phase(0.5 + np.pi), t)[0] == pytest.approx(np.pi)
        assert np.isnan(phase_deviation(self.phase(np.nan), t)[0])

    def test_truth_validation(self):
        with pytest.raises(ValueError):
            ToneTruth(np.array([3, 2]), 1.0, np.array([0.0, 0.0]))


class TestInvariants:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31), c=st.floats(0.01, 100.0))
    def test_scaling(self, seed, c):
        acc, pair = noisy_acc(0.5, 1.0, seed=seed, N=8, L=32)
        sc = accumulate_recordings(
            SegmentedRecording(c * pair.channel_a.data, pair.grid),
            SegmentedRecording(c * pair.channel_b.data, pair.grid),
        )
        np.testing.assert_allclose(coherent_power(sc).values, c**2 * coherent_power(acc).values, rtol=1e-12)
        np.testing.assert_allclose(coherent_amplitude(sc).values, c * coherent_amplitude(acc).values, rtol=1e-12)
        for f in (coherent_phase, mean_phase):
            diff = wrap_phase(f(sc).values - f(acc).values)
            assert np.nanmax(np.abs(diff)) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_channel_swap(self, seed):
        acc, pair = noisy_acc(0.3, 1.0, seed=seed, N=8, L=32)
        sw = accumulate_recordings(pair.channel_b, pair.channel_a)
        np.testing.assert_array_equal(sw.sum_nonconj, acc.sum_nonconj)
        np.testing.assert_allclose(coherent_power(sw).values, coherent_power(acc).values, rtol=1e-12)
        np.testing.assert_array_equal(coherent_phase(sw).values, coherent_phase(acc).values)
        np.testing.assert_array_equal(mean_phase(sw).values, mean_phase(acc).values)

    @pytest.mark.parametrize("N", [1, 2, 17])
    def test_noiseless_exactness_any_N(self, N):
        rng = np.random.default_rng(N)
        phases = tuple(np.pi / 2 - rng.uniform(0, np.pi, 3))
        acc, _ = noisy_acc(0.7, 0.0, N=N, phases=phases)
        truth = ToneTruth(np.array([3, 7, 11]), 0.7, np.array(phases))
        assert amplitude_deviation(coherent_amplitude(acc), truth).max() < 1e-9
        assert phase_deviation(coherent_phase(acc), truth).max() < 1e-9
