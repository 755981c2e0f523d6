"""Dual-channel coherent power (COP) and coherent phase (COA) estimation."""

__version__ = "0.1.0"

from .estimators import (
    RealSpectrum,
    ToneTruth,
    amplitude_deviation,
    coherent_amplitude,
    coherent_phase,
    coherent_power,
    mean_amplitude,
    mean_phase,
    phase_deviation,
)
from .signal_synth import (
    ChannelPair,
    MultisineSpec,
    NoiseSpec,
    OffGridFrequencyError,
    snr,
    synth_channel_pair,
    synth_multisine,
    synth_noise,
    validate_bin_sync,
)
from .sim_harness import DESK_GRID, PAPER_GRID, ExperimentConfig, run_fixed_snr, run_snr_sweep
from .spectral_core import (
    ComplexSpectrum,
    SamplingGrid,
    SegmentedRecording,
    SpectralAccumulator,
    TimeSegment,
    accumulate_recordings,
    accumulator_merge,
    accumulator_update,
    cross_spectrum,
    dft_forward,
    nonconj_cross_spectrum,
    segment_recording,
)
