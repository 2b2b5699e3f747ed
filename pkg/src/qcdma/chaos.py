"""Colpitts oscillator dynamics, Lyapunov spectra and Pecora-Carroll receivers.

State variables are the voltages across the two tank capacitors and the
inductor current.  The transistor is reduced to its emitter driving-point
characteristic; the default is piecewise linear (cut-off below ``threshold``,
slope ``on_conductance`` above it), with an exponential junction available via
``transistor="exp"``::

    C1 dv_c1/dt = i_l - I_E(v_c2)
    C2 dv_c2/dt = i_l - I0
    L  di_l/dt  = Vcc - v_c1 - v_c2 - R i_l

with the base held at AC ground so that ``v_be = -v_c2``.

The hot loops are compiled with numba; everything else is plain numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numba
import numpy as np

from .errors import ConfigError, DivergenceError, DomainError

#: Bandwidth of the default circuit values, used as the scaling reference.
REFERENCE_BANDWIDTH_HZ = 500e6

_MODELS = {"pwl": 0, "exp": 1}


class CircuitState(NamedTuple):
    v_c1: float
    v_c2: float
    i_l: float


@dataclass(frozen=True)
class CircuitParams:
    """Component values of a single-transistor Colpitts oscillator.

    The tank values default to a broadband chaotic circuit.  ``bias_current`` and
    ``on_conductance`` are free transistor parameters; the defaults put the
    circuit in a chaotic window.
    """

    resistance: float = 27.99
    inductance: float = 17.5e-9
    c1: float = 13.1e-12
    c2: float = 12.7e-12
    vcc: float = 15.0
    bias_current: float = 5e-3
    threshold: float = 0.75
    on_conductance: float = 0.54
    transistor: str = "pwl"
    thermal_voltage: float = 0.02585

    def __post_init__(self):
        for name in ("resistance", "inductance", "c1", "c2", "vcc",
                     "bias_current", "on_conductance", "thermal_voltage"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        if not 0 < self.threshold < self.vcc:
            raise DomainError(f"threshold must lie in (0, vcc), got {self.threshold!r}")
        if self.transistor not in _MODELS:
            raise DomainError(f"unknown transistor model {self.transistor!r}")

    @property
    def series_capacitance(self):
        return self.c1 * self.c2 / (self.c1 + self.c2)

    @property
    def resonance_frequency(self):
        """Linear LC resonance ``1 / (2 pi sqrt(L C1 C2 / (C1 + C2)))`` in Hz."""
        return 1.0 / (2 * math.pi * math.sqrt(self.inductance * self.series_capacitance))

    @property
    def default_step(self):
        return 1.0 / (200.0 * self.resonance_frequency)

    @property
    def saturation_current(self):
        # Matches the exponential slope to on_conductance at v_be = threshold.
        vt = self.thermal_voltage
        return self.on_conductance * vt * math.exp(-self.threshold / vt)

    @property
    def voltage_bound(self):
        return 10.0 * self.vcc

    @property
    def current_bound(self):
        return 10.0 * self.vcc / self.resistance

    def _packed(self):
        return np.array([self.resistance, self.inductance, self.c1, self.c2,
                         self.vcc, self.bias_current, self.threshold,
                         self.on_conductance, self.thermal_voltage,
                         self.saturation_current], dtype=np.float64)

    def _model(self):
        return _MODELS[self.transistor]


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled circuit trajectory.

    ``samples`` has shape ``(n + 1, 3)`` with columns ``v_c1, v_c2, i_l``.
    ``drive_stages`` optionally holds, for every step, the ``v_c1`` values
    seen by RK4 stages 2-4; a receiver replaying them reproduces the
    transmitter's arithmetic exactly.
    """

    t0: float
    dt: float
    samples: np.ndarray
    drive_stages: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != 3 or len(samples) == 0:
            raise ConfigError("samples must be a non-empty (n, 3) array")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.drive_stages is not None:
            stages = np.array(self.drive_stages, dtype=np.float64)
            if stages.shape != (len(samples) - 1, 3):
                raise ConfigError("drive_stages must have shape (n - 1, 3)")
            stages.setflags(write=False)
            object.__setattr__(self, "drive_stages", stages)

    def __len__(self):
        return len(self.samples)

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def v_c1(self):
        return self.samples[:, 0]

    @property
    def v_c2(self):
        return self.samples[:, 1]

    @property
    def i_l(self):
        return self.samples[:, 2]

    @property
    def final(self):
        return CircuitState(*map(float, self.samples[-1]))

    def state(self, index):
        return CircuitState(*map(float, self.samples[index]))

    def after(self, duration):
        """Drop the first ``duration`` seconds (a transient)."""
        k = int(round(duration / self.dt))
        if k >= len(self.samples):
            raise ConfigError("transient longer than trajectory")
        stages = None if self.drive_stages is None else self.drive_stages[k:]
        return Trajectory(self.t0 + k * self.dt, self.dt, self.samples[k:], stages)


@dataclass(frozen=True)
class LyapunovOptions:
    """Benettin estimator settings, all in seconds."""

    transient: float
    duration: float
    renorm_interval: float

    def __post_init__(self):
        if self.transient < 0 or self.duration <= 0 or self.renorm_interval <= 0:
            raise ConfigError("transient >= 0, duration > 0 and renorm_interval > 0 required")
        if self.renorm_interval > self.duration:
            raise ConfigError("renorm_interval exceeds duration")

    @classmethod
    def in_cycles(cls, p, transient=2000, duration=20000, renorm=0.05):
        """Options expressed in periods of the linear resonance of ``p``."""
        period = 1.0 / p.resonance_frequency
        return cls(transient * period, duration * period, renorm * period)


# -- compiled kernels ---------------------------------------------------------

@numba.njit(cache=True)
def _emitter_current(v2, p, model):
    if model == 0:
        drive = -v2 - p[6]
        return p[7] * drive if drive > 0.0 else 0.0
    return p[9] * (math.exp(-v2 / p[8]) - 1.0)


@numba.njit(cache=True)
def _emitter_slope(v2, p, model):
    # d I_E / d v_be
    if model == 0:
        return p[7] if -v2 - p[6] > 0.0 else 0.0
    return p[9] / p[8] * math.exp(-v2 / p[8])


@numba.njit(cache=True)
def _rhs(v1, v2, i, p, model):
    ie = _emitter_current(v2, p, model)
    return ((i - ie) / p[2], (i - p[5]) / p[3], (p[4] - v1 - v2 - p[0] * i) / p[1])


@numba.njit(cache=True)
def _out_of_bounds(v1, v2, i, vmax, imax):
    ok = abs(v1) <= vmax and abs(v2) <= vmax and abs(i) <= imax
    return not ok


@numba.njit(cache=True)
def _rk4_kernel(y0, p, model, dt, n, vmax, imax, keep_stages):
    out = np.empty((n + 1, 3))
    stages = np.empty((n if keep_stages else 0, 3))
    v1, v2, i = y0[0], y0[1], y0[2]
    out[0, 0] = v1
    out[0, 1] = v2
    out[0, 2] = i
    h2 = 0.5 * dt
    for k in range(n):
        a1, a2, a3 = _rhs(v1, v2, i, p, model)
        s1 = v1 + h2 * a1
        b1, b2, b3 = _rhs(s1, v2 + h2 * a2, i + h2 * a3, p, model)
        s2 = v1 + h2 * b1
        c1, c2, c3 = _rhs(s2, v2 + h2 * b2, i + h2 * b3, p, model)
        s3 = v1 + dt * c1
        d1, d2, d3 = _rhs(s3, v2 + dt * c2, i + dt * c3, p, model)
        v1 = v1 + dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        v2 = v2 + dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        i = i + dt / 6.0 * (a3 + 2.0 * b3 + 2.0 * c3 + d3)
        if _out_of_bounds(v1, v2, i, vmax, imax) or not (
                math.isfinite(v1) and math.isfinite(v2) and math.isfinite(i)):
            return out[:k + 1], stages, k + 1
        out[k + 1, 0] = v1
        out[k + 1, 1] = v2
        out[k + 1, 2] = i
        if keep_stages:
            stages[k, 0] = s1
            stages[k, 1] = s2
            stages[k, 2] = s3
    return out, stages, -1


@numba.njit(cache=True)
def _response_rhs(v1, v2, i, p):
    return (i - p[5]) / p[3], (p[4] - v1 - v2 - p[0] * i) / p[1]


@numba.njit(cache=True)
def _response_kernel(drive, stages, y0, p, dt, vmax, imax):
    # stages[k] = v_c1 seen by RK4 stages 2, 3, 4 of step k
    n = len(drive) - 1
    out = np.empty((n + 1, 2))
    v2, i = y0[0], y0[1]
    out[0, 0] = v2
    out[0, 1] = i
    h2 = 0.5 * dt
    for k in range(n):
        a2, a3 = _response_rhs(drive[k], v2, i, p)
        b2, b3 = _response_rhs(stages[k, 0], v2 + h2 * a2, i + h2 * a3, p)
        c2, c3 = _response_rhs(stages[k, 1], v2 + h2 * b2, i + h2 * b3, p)
        d2, d3 = _response_rhs(stages[k, 2], v2 + dt * c2, i + dt * c3, p)
        v2 = v2 + dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        i = i + dt / 6.0 * (a3 + 2.0 * b3 + 2.0 * c3 + d3)
        if abs(v2) > vmax or abs(i) > imax or not (math.isfinite(v2) and math.isfinite(i)):
            return out[:k + 1], k + 1
        out[k + 1, 0] = v2
        out[k + 1, 1] = i
    return out, -1


@numba.njit(cache=True)
def _jacobian_into(J, v2, p, model):
    J[0, 0] = 0.0
    J[0, 1] = _emitter_slope(v2, p, model) / p[2]
    J[0, 2] = 1.0 / p[2]
    J[1, 0] = 0.0
    J[1, 1] = 0.0
    J[1, 2] = 1.0 / p[3]
    J[2, 0] = -1.0 / p[1]
    J[2, 1] = -1.0 / p[1]
    J[2, 2] = -p[0] / p[1]


@numba.njit(cache=True)
def _gram_schmidt(Q, sums):
    m = Q.shape[1]
    for j in range(m):
        for k in range(j):
            dot = 0.0
            for r in range(Q.shape[0]):
                dot += Q[r, k] * Q[r, j]
            for r in range(Q.shape[0]):
                Q[r, j] -= dot * Q[r, k]
        nrm = 0.0
        for r in range(Q.shape[0]):
            nrm += Q[r, j] * Q[r, j]
        nrm = math.sqrt(nrm)
        sums[j] += math.log(nrm)
        for r in range(Q.shape[0]):
            Q[r, j] /= nrm


@numba.njit(cache=True)
def _tangent_kernel(y0, p, model, dt, n_transient, n, renorm, vmax, imax):
    y = y0.copy()
    h2 = 0.5 * dt
    for k in range(n_transient):
        a1, a2, a3 = _rhs(y[0], y[1], y[2], p, model)
        b1, b2, b3 = _rhs(y[0] + h2 * a1, y[1] + h2 * a2, y[2] + h2 * a3, p, model)
        c1, c2, c3 = _rhs(y[0] + h2 * b1, y[1] + h2 * b2, y[2] + h2 * b3, p, model)
        d1, d2, d3 = _rhs(y[0] + dt * c1, y[1] + dt * c2, y[2] + dt * c3, p, model)
        y[0] += dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        y[1] += dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        y[2] += dt / 6.0 * (a3 + 2.0 * b3 + 2.0 * c3 + d3)
        if _out_of_bounds(y[0], y[1], y[2], vmax, imax):
            return np.zeros(3), k + 1
    Q = np.eye(3)
    sums = np.zeros(3)
    J = np.empty((3, 3))
    K1 = np.empty((3, 3))
    K2 = np.empty((3, 3))
    K3 = np.empty((3, 3))
    K4 = np.empty((3, 3))
    for k in range(n):
        a1, a2, a3 = _rhs(y[0], y[1], y[2], p, model)
        u2 = y[1] + h2 * a2
        b1, b2, b3 = _rhs(y[0] + h2 * a1, u2, y[2] + h2 * a3, p, model)
        w2 = y[1] + h2 * b2
        c1, c2, c3 = _rhs(y[0] + h2 * b1, w2, y[2] + h2 * b3, p, model)
        z2 = y[1] + dt * c2
        d1, d2, d3 = _rhs(y[0] + dt * c1, z2, y[2] + dt * c3, p, model)
        # variational equation integrated with the same RK4 stages
        _jacobian_into(J, y[1], p, model)
        K1[:, :] = J @ Q
        _jacobian_into(J, u2, p, model)
        K2[:, :] = J @ (Q + h2 * K1)
        _jacobian_into(J, w2, p, model)
        K3[:, :] = J @ (Q + h2 * K2)
        _jacobian_into(J, z2, p, model)
        K4[:, :] = J @ (Q + dt * K3)
        Q += dt / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        y[0] += dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        y[1] += dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        y[2] += dt / 6.0 * (a3 + 2.0 * b3 + 2.0 * c3 + d3)
        if _out_of_bounds(y[0], y[1], y[2], vmax, imax):
            return np.zeros(3), n_transient + k + 1
        if (k + 1) % renorm == 0:
            _gram_schmidt(Q, sums)
    if n % renorm != 0:
        _gram_schmidt(Q, sums)
    return sums / (n * dt), -1


@numba.njit(cache=True)
def _response_tangent_kernel(p, dt, n, renorm):
    # The response subsystem is linear in (v_c2, i_l): its Jacobian is constant.
    A = np.array([[0.0, 1.0 / p[3]], [-1.0 / p[1], -p[0] / p[1]]])
    Q = np.eye(2)
    sums = np.zeros(2)
    h2 = 0.5 * dt
    for k in range(n):
        K1 = A @ Q
        K2 = A @ (Q + h2 * K1)
        K3 = A @ (Q + h2 * K2)
        K4 = A @ (Q + dt * K3)
        Q = Q + dt / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        if (k + 1) % renorm == 0:
            _gram_schmidt(Q, sums)
    if n % renorm != 0:
        _gram_schmidt(Q, sums)
    return sums / (n * dt)


# -- public API ---------------------------------------------------------------

def _check_state(s):
    values = tuple(float(x) for x in s)
    if len(values) != 3 or not all(math.isfinite(x) for x in values):
        raise DomainError(f"state must be three finite numbers, got {s!r}")
    return values


def vector_field(p, s):
    """Time derivative ``(dv_c1/dt, dv_c2/dt, di_l/dt)`` at state ``s``."""
    v1, v2, i = _check_state(s)
    return CircuitState(*_rhs(v1, v2, i, p._packed(), p._model()))


def emitter_current(p, v_c2):
    return _emitter_current(float(v_c2), p._packed(), p._model())


def jacobian(p, s):
    _, v2, _ = _check_state(s)
    J = np.empty((3, 3))
    _jacobian_into(J, v2, p._packed(), p._model())
    return J


def equilibrium(p):
    """The unique fixed point: ``i_l = I0`` and ``I_E(v_c2) = I0``."""
    if p.transistor == "pwl":
        v2 = -p.threshold - p.bias_current / p.on_conductance
    else:
        v2 = -p.thermal_voltage * math.log1p(p.bias_current / p.saturation_current)
    v1 = p.vcc - v2 - p.resistance * p.bias_current
    return CircuitState(v1, v2, p.bias_current)


def perturbed_initial_state(p, rng, spread=0.05):
    """Equilibrium plus a seeded random kick of ``spread`` volts on ``v_c2``."""
    eq = equilibrium(p)
    kick = rng.uniform(-spread, spread)
    if kick == 0.0:
        kick = spread
    return CircuitState(eq.v_c1, eq.v_c2 + kick, eq.i_l)


def integrate(p, init, dt=None, n=0, t0=0.0, keep_drive_stages=False):
    """Fixed-step classical RK4 integration of the oscillator.

    Parameters
    ----------
    p : CircuitParams
    init : CircuitState or sequence of 3 floats
    dt : float, optional
        Step in seconds, at most ``1 / (100 f0)``.  Defaults to
        ``p.default_step``.
    n : int
        Number of steps; the trajectory has ``n + 1`` samples.
    keep_drive_stages : bool
        Record the intermediate ``v_c1`` stage values so the result can
        drive :func:`pecora_carroll_receive` exactly.

    Raises
    ------
    DivergenceError
        If the state leaves ``|v| <= 10 Vcc``, ``|i_l| <= 10 Vcc / R``.
    """
    y0 = np.array(_check_state(init))
    dt = p.default_step if dt is None else float(dt)
    if not dt > 0:
        raise ConfigError("dt must be positive")
    if dt > 1.0 / (100.0 * p.resonance_frequency) * (1 + 1e-12):
        raise ConfigError(f"dt={dt:g} exceeds 1/(100 f0) = {1 / (100 * p.resonance_frequency):g}")
    n = int(n)
    if n < 0:
        raise ConfigError("n must be non-negative")
    if _out_of_bounds(*y0, p.voltage_bound, p.current_bound):
        raise DivergenceError(0, "initial state outside the bounding box")
    out, stages, fail = _rk4_kernel(y0, p._packed(), p._model(), dt, n,
                                    p.voltage_bound, p.current_bound, keep_drive_stages)
    if fail >= 0:
        raise DivergenceError(fail)
    return Trajectory(t0, dt, out, stages if keep_drive_stages else None)


def lyapunov_spectrum(p, init, opts, dt=None):
    """Benettin estimate of the three Lyapunov exponents (1/s), descending.

    The tangent flow is advanced with the same RK4 stages as the state and
    re-orthonormalised by Gram-Schmidt every ``opts.renorm_interval``.
    """
    y0 = np.array(_check_state(init))
    dt = p.default_step if dt is None else float(dt)
    n_transient = int(round(opts.transient / dt))
    n = max(1, int(round(opts.duration / dt)))
    renorm = max(1, int(round(opts.renorm_interval / dt)))
    exps, fail = _tangent_kernel(y0, p._packed(), p._model(), dt, n_transient, n, renorm,
                                 p.voltage_bound, p.current_bound)
    if fail >= 0:
        raise DivergenceError(fail)
    return np.sort(exps)[::-1]


def scale_to_bandwidth(p, target_bw, reference_bw=REFERENCE_BANDWIDTH_HZ):
    """Rescale the reactive components so the circuit runs at ``target_bw``.

    L, C1 and C2 are all multiplied by ``reference_bw / target_bw``.  The tank
    impedance ``sqrt(L / C)`` is unchanged, so the dynamics are the reference
    dynamics with time stretched by the same factor.
    """
    if not (target_bw > 0 and reference_bw > 0):
        raise DomainError("bandwidths must be positive")
    s = reference_bw / target_bw
    if s == 1.0:
        return p
    return replace(p, inductance=p.inductance * s, c1=p.c1 * s, c2=p.c2 * s)


def _interpolated_stages(v):
    # Four-point Lagrange midpoints; the last stage is the next sample.
    n = len(v) - 1
    mid = np.empty(n)
    if n == 0:
        return np.empty((0, 3))
    if len(v) < 4:
        mid[:] = 0.5 * (v[:-1] + v[1:])
    else:
        mid[1:n - 1] = (-v[:n - 2] + 9 * v[1:n - 1] + 9 * v[2:n] - v[3:n + 1]) / 16
        mid[0] = (5 * v[0] + 15 * v[1] - 5 * v[2] + v[3]) / 16
        mid[n - 1] = (v[n - 3] - 5 * v[n - 2] + 15 * v[n - 1] + 5 * v[n]) / 16
    return np.column_stack([mid, mid, v[1:]])


def pecora_carroll_receive(p, drive, init, dt=None):
    """Integrate the ``(v_c2, i_l)`` response subsystem driven by ``v_c1``.

    ``drive`` is the transmitter trajectory; only its ``v_c1`` column (and
    its recorded RK4 stage values, when present) is used.  Without stage
    values the half-step drive is interpolated from the samples.

    Returns the reconstructed trajectory with ``v_c1`` copied from the drive.
    """
    if dt is not None and not math.isclose(dt, drive.dt, rel_tol=1e-12):
        raise ConfigError(f"receiver step {dt!r} does not match drive sampling {drive.dt!r}")
    y = _check_state(init)
    v = np.ascontiguousarray(drive.v_c1)
    stages = drive.drive_stages if drive.drive_stages is not None else _interpolated_stages(v)
    out, fail = _response_kernel(v, np.ascontiguousarray(stages), np.array(y[1:]), p._packed(),
                                 drive.dt, p.voltage_bound, p.current_bound)
    if fail >= 0:
        raise DivergenceError(fail)
    return Trajectory(drive.t0, drive.dt, np.column_stack([v, out]))


def conditional_lyapunov(p, dt=None, duration=None, renorm_interval=None):
    """Conditional (sub-system) Lyapunov exponents of the response, 1/s."""
    dt = p.default_step if dt is None else float(dt)
    period = 1.0 / p.resonance_frequency
    duration = 200 * period if duration is None else duration
    renorm_interval = 0.05 * period if renorm_interval is None else renorm_interval
    n = max(1, int(round(duration / dt)))
    renorm = max(1, int(round(renorm_interval / dt)))
    return np.sort(_response_tangent_kernel(p._packed(), dt, n, renorm))[::-1]


def sync_error(tx, rx, transient=0.0):
    """Pointwise ``|v_c2 - v~_c2|`` and its supremum after ``transient`` seconds."""
    if len(tx) != len(rx) or not math.isclose(tx.dt, rx.dt, rel_tol=1e-12):
        raise ConfigError("trajectories differ in length or sampling")
    err = np.abs(tx.v_c2 - rx.v_c2)
    k = int(round(transient / tx.dt))
    if k >= len(err):
        raise ConfigError("transient longer than trajectory")
    return err, float(err[k:].max())
