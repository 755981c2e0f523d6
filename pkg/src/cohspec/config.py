"""INI-style experiment configuration.

Example::

    [grid]
    preset = paper            ; or sample_rate_hz / segment_len / num_segments

    [multisine]
    tone_frequencies_hz = 0.01, 0.1, 1.0
    phases = 0.3, -0.2, 1.1
    amplitude = 1.0

    [noise]
    amplitude = 1.0
    master_seed = 2024

    [experiment]
    snr = 0.32
    num_snr_points = 25
    trials_per_point = 4

Unknown sections and keys are errors.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

import numpy as np

from .signal_synth import MultisineSpec, NoiseSpec, validate_bin_sync
from .sim_harness import PRESETS, ExperimentConfig, default_snr_points
from .spectral_core import SamplingGrid

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]

SCHEMA = {
    "grid": {"preset", "sample_rate_hz", "segment_len", "num_segments"},
    "multisine": {"tone_frequencies_hz", "tone_bins", "num_tones", "phases", "phase_seed", "amplitude"},
    "noise": {"amplitude", "master_seed"},
    "experiment": {"snr", "snr_points", "snr_min", "snr_max", "num_snr_points", "trials_per_point"},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Parsed configuration.

    ``signal_amplitude`` is ``U0`` for synthesis; when ``snr`` is set it takes
    precedence and ``U0 = snr * noise_amplitude``.
    """

    experiment: ExperimentConfig
    signal_amplitude: float = 1.0
    noise_amplitude: float = 1.0
    snr: float | None = None
    raw: dict = field(default_factory=dict)

    @property
    def grid(self) -> SamplingGrid:
        return self.experiment.grid

    def resolved_signal_amplitude(self) -> float:
        if self.snr is None:
            return self.signal_amplitude
        if self.noise_amplitude == 0:
            raise ConfigError("an SNR cannot be realized with zero noise amplitude")
        return self.snr * self.noise_amplitude

    def multisine(self) -> MultisineSpec:
        return self.experiment.multisine(self.resolved_signal_amplitude())

    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.noise_amplitude, self.experiment.master_seed)

    def with_overrides(self, seed: int | None = None, snr: float | None = None) -> "RunConfig":
        out = self
        if seed is not None:
            out = replace(out, experiment=replace(out.experiment, master_seed=int(seed)))
        if snr is not None:
            out = replace(out, snr=float(snr))
        return out

    def echo(self) -> dict:
        return {
            "experiment": self.experiment.echo(),
            "signal_amplitude": self.resolved_signal_amplitude(),
            "noise_amplitude": self.noise_amplitude,
            "noise_distribution": "gaussian, std = noise_amplitude",
            "snr": self.snr,
        }


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _get(section, key, conv):
    try:
        return conv(section[key])
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: {exc}") from None


def parse_config(text: str, preset: str | None = None, source: str = "<config>") -> RunConfig:
    """Parse config text; an explicit ``preset`` overrides ``[grid] preset``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{name}]")
        unknown = set(cp[name]) - SCHEMA[name]
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    sec = {name: (cp[name] if cp.has_section(name) else {}) for name in SCHEMA}
    g, m, n, e = sec["grid"], sec["multisine"], sec["noise"], sec["experiment"]

    preset = preset or g.get("preset") or "paper"
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    base = PRESETS[preset]
    try:
        grid = SamplingGrid(
            _get(g, "sample_rate_hz", float) if "sample_rate_hz" in g else base.sample_rate_hz,
            _get(g, "segment_len", int) if "segment_len" in g else base.segment_len,
            _get(g, "num_segments", int) if "num_segments" in g else base.num_segments,
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: [grid] {exc}") from None

    kw = {"grid": grid}
    if "tone_frequencies_hz" in m and "tone_bins" in m:
        raise ConfigError(f"{source}: give either tone_frequencies_hz or tone_bins, not both")
    if "tone_frequencies_hz" in m:
        # OffGridFrequencyError propagates with the validator's message
        kw["tone_bins"] = tuple(validate_bin_sync(_get(m, "tone_frequencies_hz", _floats), grid))
    elif "tone_bins" in m:
        kw["tone_bins"] = tuple(int(k) for k in _get(m, "tone_bins", _floats))
    if "num_tones" in m:
        kw["num_tones"] = _get(m, "num_tones", int)
    if "phases" in m:
        kw["phases"] = _get(m, "phases", _floats)
    if "phase_seed" in m:
        kw["phase_seed"] = _get(m, "phase_seed", int)
    if "master_seed" in n:
        kw["master_seed"] = _get(n, "master_seed", int)
    if "trials_per_point" in e:
        kw["trials_per_point"] = _get(e, "trials_per_point", int)
    if "snr_points" in e:
        kw["snr_points"] = _get(e, "snr_points", _floats)
    elif {"snr_min", "snr_max", "num_snr_points"} & set(e):
        kw["snr_points"] = default_snr_points(
            _get(e, "num_snr_points", int) if "num_snr_points" in e else 25,
            _get(e, "snr_min", float) if "snr_min" in e else 0.01,
            _get(e, "snr_max", float) if "snr_max" in e else 10.0,
        )

    noise_amp = _get(n, "amplitude", float) if "amplitude" in n else 1.0
    if noise_amp < 0:
        raise ConfigError(f"{source}: [noise] amplitude must be >= 0")
    try:
        # the harness always scales U0 against a positive noise floor
        experiment = ExperimentConfig(noise_amplitude=noise_amp if noise_amp > 0 else 1.0, **kw)
        cfg = RunConfig(
            experiment,
            signal_amplitude=_get(m, "amplitude", float) if "amplitude" in m else 1.0,
            noise_amplitude=noise_amp,
            snr=_get(e, "snr", float) if "snr" in e else None,
            raw={name: dict(cp[name]) for name in cp.sections()},
        )
        cfg.multisine()  # validate tones and phases eagerly
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if cfg.snr is not None and not cfg.snr > 0:
        raise ConfigError(f"{source}: [experiment] snr must be > 0")
    if not np.all(np.asarray(experiment.snr_points) > 0):
        raise ConfigError(f"{source}: snr points must be positive")
    return cfg


def load_config(path, preset: str | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, preset=preset, source=str(path))
