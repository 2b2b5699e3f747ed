"""Experiment configuration: JSON documents with units spelled out in the keys."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chaos import REFERENCE_BANDWIDTH_HZ, CircuitParams
from .entangle import MODELS, PROJECTION
from .errors import ConfigError, QcdmaError
from .spectral import SPEED_OF_LIGHT, Band, EomParams, band_for_bandwidth


@dataclass(frozen=True)
class CircuitSection:
    resistance_ohm: float = 27.99
    inductance_h: float = 17.5e-9
    c1_f: float = 13.1e-12
    c2_f: float = 12.7e-12
    vcc_v: float = 15.0
    bias_current_a: float = 5e-3
    threshold_v: float = 0.75
    on_conductance_s: float = 0.54
    transistor: str = "pwl"
    reference_bandwidth_hz: float = REFERENCE_BANDWIDTH_HZ

    def params(self):
        return CircuitParams(self.resistance_ohm, self.inductance_h, self.c1_f, self.c2_f,
                             self.vcc_v, self.bias_current_a, self.threshold_v,
                             self.on_conductance_s, self.transistor)


@dataclass(frozen=True)
class EomSection:
    wavelength_m: float = 1550e-9
    refractive_index: float = 2.2
    eo_coefficient_m_per_v: float = 30.8e-12
    length_m: float = 20e-3
    thickness_m: float = 5.0e-6
    round_trip_time_s: float | None = None
    # per-channel multipliers on the voltage-to-detuning gain
    channel_gain_scale: tuple = (1.0, 1.0)

    def params(self):
        return EomParams(2 * math.pi * SPEED_OF_LIGHT / self.wavelength_m, self.refractive_index,
                         self.eo_coefficient_m_per_v, self.length_m, self.thickness_m,
                         self.round_trip_time_s)

    def channel(self, k):
        base = self.params()
        return dataclasses.replace(base, thickness=base.thickness / self.channel_gain_scale[k])


@dataclass(frozen=True)
class BandSection:
    lower_fraction: float = 0.05
    upper_fraction: float = 1.0
    lower_rad_s: float | None = None
    upper_rad_s: float | None = None

    def band(self, bandwidth_hz):
        b = band_for_bandwidth(bandwidth_hz, self.lower_fraction, self.upper_fraction)
        return Band(self.lower_rad_s if self.lower_rad_s is not None else b.lower,
                    self.upper_rad_s if self.upper_rad_s is not None else b.upper)


@dataclass(frozen=True)
class SimulationSection:
    """Durations in periods of the (scaled) circuit's linear resonance."""

    steps_per_cycle: int = 200
    transient_cycles: float = 2000.0
    record_samples: int = 2 ** 21
    psd_segment_samples: int | None = None
    lyapunov_transient_cycles: float = 500.0
    lyapunov_cycles: float = 5000.0
    lyapunov_renorm_cycles: float = 0.05
    sync_cycles: float = 2000.0
    sync_transient_cycles: float = 100.0
    sync_output_stride: int = 10
    portrait_samples: int = 20000
    portrait_bandwidths_hz: tuple = (100e6, 500e6)


@dataclass(frozen=True)
class ProtocolSection:
    mean_photon_number: float = 10.0
    phi_rad: float = math.pi / 3
    m1: float = 0.0
    m2: float = 0.0
    eta: float = 0.0
    measurement_model: str = PROJECTION


@dataclass(frozen=True)
class SweepSection:
    bandwidth_hz: tuple = (50e6, 80e6, 100e6, 200e6, 300e6, 400e6, 450e6, 500e6)
    m_grid: tuple = (0.0, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0)
    mean_photon_number_grid: tuple = (1.0, 3.0, 10.0, 30.0, 100.0)
    eta_grid: tuple = tuple(round(0.1 * k, 1) for k in range(10))
    no_eom_m: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: CircuitSection = field(default_factory=CircuitSection)
    eom: EomSection = field(default_factory=EomSection)
    band: BandSection = field(default_factory=BandSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    sweeps: SweepSection = field(default_factory=SweepSection)
    bandwidth_hz: float = REFERENCE_BANDWIDTH_HZ
    seed: int = 20240501
    output_dir: str = "out"

    def __post_init__(self):
        validate(self)

    def circuit_at(self, bandwidth_hz=None):
        from .chaos import scale_to_bandwidth
        bw = self.bandwidth_hz if bandwidth_hz is None else bandwidth_hz
        return scale_to_bandwidth(self.circuit.params(), bw, self.circuit.reference_bandwidth_hz)

    def with_overrides(self, **top):
        return dataclasses.replace(self, **top)

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def validate(cfg):
    if not (isinstance(cfg.seed, int) and 0 <= cfg.seed < 2 ** 64):
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {cfg.seed!r}")
    if cfg.protocol.measurement_model not in MODELS:
        raise ConfigError(f"unknown measurement model {cfg.protocol.measurement_model!r}")
    for name in ("bandwidth_hz", "m_grid", "mean_photon_number_grid", "eta_grid"):
        if len(getattr(cfg.sweeps, name)) == 0:
            raise ConfigError(f"sweep grid {name} is empty")
    if len(cfg.eom.channel_gain_scale) != 2 or min(cfg.eom.channel_gain_scale) <= 0:
        raise ConfigError("channel_gain_scale needs two positive entries")
    sim = cfg.simulation
    if sim.steps_per_cycle < 100:
        raise ConfigError("steps_per_cycle below 100 violates the step-size guard")
    if sim.record_samples < 256 or sim.sync_output_stride < 1:
        raise ConfigError("record_samples >= 256 and sync_output_stride >= 1 required")
    try:
        cfg.circuit.params()
        cfg.eom.params()
        cfg.band.band(cfg.bandwidth_hz)
    except (QcdmaError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where or 'config'}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default
        if default is dataclasses.MISSING:
            default = known[name].default_factory()
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}".lstrip("."))
        elif isinstance(default, tuple):
            if not isinstance(value, list):
                raise ConfigError(f"{where}.{name} must be a list")
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def from_dict(data):
    return _build(ExperimentConfig, data, "")


def load_config(path=None, seed=None, output_dir=None):
    """Read a JSON config (or use defaults) and apply CLI overrides."""
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} does not exist")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: {exc}") from exc
    if seed is not None:
        data["seed"] = seed
    if output_dir is not None:
        data["output_dir"] = str(output_dir)
    return from_dict(data)


def point_rng(seed, index, channel=0):
    """Generator for sweep point ``index``, independent of scheduling order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, channel)))
