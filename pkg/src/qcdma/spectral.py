"""Voltage-to-detuning conversion, chaotic phase and spectral correction factors.

Densities are one-sided and expressed per unit angular frequency, normalised
so that ``integral S(w) dw`` over ``[0, pi/dt]`` equals the signal variance.
In these units the accumulated phase of a de-meaned detuning restricted to a
band has variance ``integral_band S(w) / w**2 dw``, and the correction factor
is the Gaussian-phase attenuation ``M = exp(-integral_band S(w) / w**2 dw)``,
so that ``|<exp(i theta)>| = sqrt(M)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sint
from scipy import signal

from .errors import ConfigError, DomainError

log = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0


def _frozen(values, name):
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EomParams:
    """Bulk electro-optic phase modulator.

    The defaults describe a lithium-niobate-like crystal at 1550 nm; the
    thickness is picked so the default circuit yields a correction factor of
    order 1e-2 to 1e-3 around 450-500 MHz.  ``round_trip_time`` defaults to
    ``2 n L / c``.
    """

    carrier_angular_frequency: float = 2 * math.pi * SPEED_OF_LIGHT / 1550e-9
    refractive_index: float = 2.2
    eo_coefficient: float = 30.8e-12
    length: float = 20e-3
    thickness: float = 5.0e-6
    round_trip_time: float | None = None

    def __post_init__(self):
        if self.round_trip_time is None:
            object.__setattr__(self, "round_trip_time",
                               2 * self.refractive_index * self.length / SPEED_OF_LIGHT)
        for name in ("carrier_angular_frequency", "refractive_index", "eo_coefficient",
                     "length", "thickness", "round_trip_time"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    @property
    def phase_per_volt(self):
        """Single-pass phase per volt, ``w n^3 r L / (c d)``."""
        return (self.carrier_angular_frequency * self.refractive_index ** 3
                * self.eo_coefficient * self.length / (SPEED_OF_LIGHT * self.thickness))

    @property
    def gain(self):
        """Detuning per volt in rad/(s V); negative by the sign convention."""
        return -self.phase_per_volt / self.round_trip_time


@dataclass(frozen=True)
class SignalTrace:
    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        object.__setattr__(self, "values", _frozen(self.values, "values"))

    def __len__(self):
        return len(self.values)

    @property
    def times(self):
        return self.dt * np.arange(len(self.values))


@dataclass(frozen=True)
class PhaseTrace(SignalTrace):
    def __post_init__(self):
        super().__post_init__()
        if len(self.values) and self.values[0] != 0.0:
            raise DomainError("phase traces start at zero")


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided density ``density[k]`` at angular frequency ``omega[k]``."""

    omega: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        omega = _frozen(self.omega, "omega")
        density = _frozen(self.density, "density")
        if omega.shape != density.shape or len(omega) < 2:
            raise ConfigError("omega and density must match and have >= 2 points")
        if np.any(np.diff(omega) <= 0):
            raise ConfigError("omega must be strictly ascending")
        if np.any(density < 0):
            raise DomainError("negative spectral density")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "density", density)

    def total_power(self):
        return float(np.trapezoid(self.density, self.omega))


@dataclass(frozen=True)
class Band:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower > 0:
            raise DomainError(f"lower band edge must be positive, got {self.lower!r}")
        if not self.upper > self.lower:
            raise DomainError("upper band edge must exceed the lower one")


def detuning_from_voltage(voltage, dt, e):
    """Map a modulator voltage trace to the optical detuning ``gain * V``."""
    return SignalTrace(dt, e.gain * np.asarray(voltage, dtype=np.float64))


def remove_mean(s):
    return SignalTrace(s.dt, s.values - s.values.mean())


def band_limit(s, band):
    """Ideal (brick-wall) band-pass of ``s`` to ``band`` via the FFT."""
    spec = np.fft.rfft(s.values)
    w = 2 * np.pi * np.fft.rfftfreq(len(s.values), s.dt)
    spec[(w < band.lower) | (w > band.upper)] = 0.0
    return SignalTrace(s.dt, np.fft.irfft(spec, n=len(s.values)))


def accumulate_phase(s):
    """Trapezoidal running integral of the detuning, starting at zero."""
    if len(s) < 2:
        raise ConfigError("need at least two samples")
    return PhaseTrace(s.dt, sint.cumulative_trapezoid(s.values, dx=s.dt, initial=0.0))


def estimate_psd(s, segment_length=None, overlap=0.5, window="hann"):
    """Welch estimate converted to a one-sided angular-frequency density.

    Parameters
    ----------
    segment_length : int, optional
        Samples per segment; defaults to ``len(s) // 32`` (rounded down to a
        power of two, at least 256 or the whole trace).
    overlap : float
        Fraction of a segment shared with the next one, in ``[0, 1)``.
    """
    n = len(s)
    if segment_length is None:
        segment_length = min(n, max(256, 1 << max(0, (n // 32).bit_length() - 1)))
    segment_length = int(segment_length)
    if not 2 <= segment_length <= n:
        raise ConfigError(f"segment length {segment_length} incompatible with {n} samples")
    if not 0 <= overlap < 1:
        raise ConfigError("overlap must lie in [0, 1)")
    f, pxx = signal.welch(s.values, fs=1.0 / s.dt, window=window, nperseg=segment_length,
                          noverlap=int(overlap * segment_length), detrend=False,
                          return_onesided=True, scaling="density")
    return PowerSpectrum(2 * np.pi * f, pxx / (2 * np.pi))


def _band_slice(S, band):
    # Grid points strictly inside the band plus linearly interpolated endpoints.
    w, d = S.omega, S.density
    if band.lower < w[0] or band.upper > w[-1]:
        raise DomainError(f"band [{band.lower:g}, {band.upper:g}] outside spectrum support")
    inside = (w > band.lower) & (w < band.upper)
    ww = np.concatenate([[band.lower], w[inside], [band.upper]])
    dd = np.concatenate([[np.interp(band.lower, w, d)], d[inside], [np.interp(band.upper, w, d)]])
    return ww, dd


def phase_variance(S, band):
    """``integral_band S(w) / w**2 dw``: variance of the band-limited phase."""
    if band.lower <= 0:
        raise DomainError("lower band edge must be positive")
    w, d = _band_slice(S, band)
    return float(np.trapezoid(d / w ** 2, w))


def correction_factor(S, band):
    """Crosstalk attenuation ``M = exp(-integral_band S / w**2 dw)`` in ``(0, 1]``."""
    return math.exp(-phase_variance(S, band))


def bandwidth_20db(S):
    """Highest frequency (Hz) whose density is within 20 dB of the peak."""
    d = S.density
    if not np.any(d > 0):
        return 0.0
    k = np.nonzero(d >= d.max() / 100.0)[0][-1]
    return float(S.omega[k] / (2 * np.pi))


def peak_frequency(S):
    return float(S.omega[np.argmax(S.density)] / (2 * np.pi))


def band_for_bandwidth(bandwidth_hz, lower_fraction=0.05, upper_fraction=1.0):
    """Integration band ``[2 pi lower_fraction BW, 2 pi upper_fraction BW]``."""
    return Band(2 * np.pi * lower_fraction * bandwidth_hz, 2 * np.pi * upper_fraction * bandwidth_hz)


def empirical_phase_average(theta, transient=0.0):
    """Time average of ``exp(i theta)`` after discarding ``transient`` seconds."""
    k = int(round(transient / theta.dt))
    if k >= len(theta):
        raise ConfigError("trace shorter than transient")
    return complex(np.mean(np.exp(1j * theta.values[k:])))


@dataclass(frozen=True)
class ChaoticPhase:
    """Detuning, its spectrum and the band-limited phase of one channel."""

    detuning: SignalTrace
    spectrum: PowerSpectrum
    band: Band
    phase: PhaseTrace

    @property
    def correction(self):
        return correction_factor(self.spectrum, self.band)

    @property
    def phase_average(self):
        return empirical_phase_average(self.phase)


def chaotic_phase(voltage, dt, e, band, segment_length=None):
    """De-meaned detuning from ``voltage``, its PSD and band-limited phase."""
    delta = remove_mean(detuning_from_voltage(voltage, dt, e))
    S = estimate_psd(delta, segment_length)
    theta = accumulate_phase(band_limit(delta, band))
    log.debug("phase variance %.4g over band [%.4g, %.4g] rad/s",
              phase_variance(S, band), band.lower, band.upper)
    return ChaoticPhase(delta, S, band, theta)
