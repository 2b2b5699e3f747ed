"""Entanglement distribution with coherent probes over the shared network.

A :class:`BranchState` is a superposition of branches, each a product of
qubit basis states and coherent states of the tracked optical modes.  Branch
kets with different qubit configurations are orthogonal; kets with the same
configuration overlap through their coherent amplitudes, so norms and
reduced densities are computed with the coherent-state Gram matrix.
"""

from __future__ import annotations

import cmath
import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .optics import NetworkFactors

log = logging.getLogger(__name__)

GROUND, EXCITED = 0, 1
IDEALIZED = "idealized-orthogonal"
PROJECTION = "coherent-projection"
MODELS = (IDEALIZED, PROJECTION)

_S = 1 / math.sqrt(2)
BELL_STATES = {
    "phi+": np.array([_S, 0, 0, _S], dtype=complex),
    "phi-": np.array([_S, 0, 0, -_S], dtype=complex),
    "psi+": np.array([0, _S, _S, 0], dtype=complex),
    "psi-": np.array([0, _S, -_S, 0], dtype=complex),
}


@dataclass(frozen=True)
class DispersiveCoupling:
    """Far-detuned qubit-cavity coupling, all rates in rad/s.

    ``phi = 2 g^2 tau / Delta`` is the conditional pointer phase.
    """

    cavity_frequency: float
    qubit_frequency: float
    coupling: float
    interaction_time: float
    min_detuning_ratio: float = 10.0

    def __post_init__(self):
        if self.coupling <= 0 or self.interaction_time <= 0:
            raise DomainError("coupling and interaction time must be positive")
        if abs(self.detuning) < self.min_detuning_ratio * self.coupling:
            raise DomainError(
                f"|detuning| = {abs(self.detuning):g} is below "
                f"{self.min_detuning_ratio:g} x coupling; not dispersive")
        if not 0 < self.phase < math.pi:
            raise DomainError(f"pointer phase {self.phase:g} outside (0, pi)")

    @property
    def detuning(self):
        return self.cavity_frequency - self.qubit_frequency

    @property
    def shift(self):
        """Dispersive frequency shift ``g^2 / Delta``."""
        return self.coupling ** 2 / self.detuning

    @property
    def phase(self):
        return 2 * self.shift * self.interaction_time


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BranchState:
    """Superposition ``sum_b coeffs[b] |configs[b]> prod_m |amps[b, m]>``.

    ``configs`` has shape ``(B, n_qubits)`` with entries 0 (g) or 1 (e);
    ``amps`` has shape ``(B, n_modes)``.
    """

    qubits: tuple
    modes: tuple
    configs: np.ndarray
    coeffs: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "modes", tuple(self.modes))
        configs = _readonly(self.configs, np.int8).reshape(-1, len(self.qubits))
        coeffs = _readonly(self.coeffs, complex)
        amps = _readonly(self.amps, complex).reshape(len(coeffs), len(self.modes))
        if len(configs) != len(coeffs):
            raise ConfigError("configs and coeffs disagree on branch count")
        if len(coeffs) > 2 ** len(self.qubits):
            raise ConfigError("more branches than qubit configurations")
        if len(set(self.qubits)) != len(self.qubits) or len(set(self.modes)) != len(self.modes):
            raise ConfigError("duplicate qubit or mode id")
        if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(amps))):
            raise DomainError("non-finite coefficient or amplitude")
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "amps", amps)

    def __len__(self):
        return len(self.coeffs)

    def qubit_index(self, q):
        try:
            return self.qubits.index(q)
        except ValueError:
            raise ConfigError(f"unknown qubit {q!r}") from None

    def mode_index(self, m):
        try:
            return self.modes.index(m)
        except ValueError:
            raise ConfigError(f"unknown mode {m!r}") from None

    def gram(self):
        """Matrix of branch-ket inner products ``<b|b'>``."""
        same = np.all(self.configs[:, None, :] == self.configs[None, :, :], axis=-1)
        return same * _field_overlaps(self.amps)

    def norm(self):
        c = self.coeffs
        return float(np.real(c.conj() @ self.gram() @ c))

    def normalized(self):
        return _with(self, coeffs=self.coeffs / math.sqrt(self.norm()))


def _with(state, **changes):
    fields = dict(qubits=state.qubits, modes=state.modes, configs=state.configs,
                  coeffs=state.coeffs, amps=state.amps)
    fields.update(changes)
    return BranchState(**fields)


def _field_overlaps(amps):
    # prod over modes of <a_b|a_b'>, computed in log form
    a = amps[:, None, :]
    b = amps[None, :, :]
    log_ov = -0.5 * np.abs(a) ** 2 - 0.5 * np.abs(b) ** 2 + a.conj() * b
    return np.exp(log_ov.sum(axis=-1))


def prepare_plus(n_qubits, names=None):
    """Product of ``(|g> + |e>)/sqrt 2`` over ``n_qubits`` qubits, no fields."""
    if n_qubits < 1:
        raise ConfigError("need at least one qubit")
    names = tuple(names) if names is not None else tuple(f"q{k + 1}" for k in range(n_qubits))
    if len(names) != n_qubits:
        raise ConfigError("one name per qubit required")
    configs = list(itertools.product((GROUND, EXCITED), repeat=n_qubits))
    coeffs = np.full(len(configs), 2.0 ** (-n_qubits / 2), dtype=complex)
    return BranchState(names, (), configs, coeffs, np.zeros((len(configs), 0)))


def attach_probe(state, mode, alpha):
    if mode in state.modes:
        raise ConfigError(f"mode {mode!r} already attached")
    col = np.full((len(state), 1), complex(alpha))
    return _with(state, modes=state.modes + (mode,), amps=np.hstack([state.amps, col]))


def dispersive_interact(state, qubit, mode, phi):
    """Rotate the mode amplitude by ``-phi/2`` (g) or ``+phi/2`` (e)."""
    q = state.qubit_index(qubit)
    m = state.mode_index(mode)
    sign = np.where(state.configs[:, q] == EXCITED, 1.0, -1.0)
    amps = state.amps.copy()
    amps[:, m] *= np.exp(0.5j * phi * sign)
    return _with(state, amps=amps)


def propagate_network(state, modes, f, rename=None):
    """Send the mode pair through the averaged network with factors ``f``.

    ``rename`` optionally relabels the pair as the receiver-side modes.
    """
    i, j = (state.mode_index(m) for m in modes)
    amps = state.amps.copy()
    a1, a2 = state.amps[:, i], state.amps[:, j]
    amps[:, i] = f.direct * a1 + f.cross * a2
    amps[:, j] = f.direct * a2 + f.cross * a1
    names = list(state.modes)
    if rename is not None:
        names[i], names[j] = rename
    return _with(state, modes=tuple(names), amps=amps)


def pointer_outcomes(beta, phi):
    """The three pointer amplitudes ``beta``, ``beta e^{-i phi}``, ``beta e^{i phi}``.

    Coincident values (``beta = 0``) are merged.
    """
    out = []
    for z in (beta, beta * cmath.exp(-1j * phi), beta * cmath.exp(1j * phi)):
        if all(abs(z - w) > 1e-12 for w in out):
            out.append(complex(z))
    return out


def _project(state, m, beta):
    # apply <beta| to mode m and drop it
    ov = np.exp(-0.5 * abs(beta) ** 2 - 0.5 * np.abs(state.amps[:, m]) ** 2
                + np.conj(beta) * state.amps[:, m])
    keep = [k for k in range(len(state.modes)) if k != m]
    return _with(state, modes=tuple(state.modes[k] for k in keep),
                 coeffs=state.coeffs * ov, amps=state.amps[:, keep])


def _snap(state, m, outcomes, k):
    # branches whose amplitude is nearest to outcome k; measured mode dropped
    z = np.asarray(outcomes)
    nearest = np.argmin(np.abs(state.amps[:, m, None] - z[None, :]), axis=1)
    sel = nearest == k
    keep = [j for j in range(len(state.modes)) if j != m]
    return _with(state, modes=tuple(state.modes[j] for j in keep), configs=state.configs[sel],
                 coeffs=state.coeffs[sel], amps=state.amps[sel][:, keep])


def pointer_distribution(state, mode, outcomes, model=PROJECTION):
    """All outcomes with probabilities and normalised conditional states.

    Returns a list of ``(probability, state)`` aligned with ``outcomes``;
    a zero-probability outcome carries ``None``.
    """
    if not outcomes:
        raise ConfigError("empty outcome list")
    if model not in MODELS:
        raise ConfigError(f"unknown measurement model {model!r}")
    for a, b in itertools.combinations(outcomes, 2):
        if abs(complex(a) - complex(b)) <= 1e-12:
            raise DomainError("outcomes must be pairwise distinct")
    m = state.mode_index(mode)
    if model == PROJECTION:
        parts = [_project(state, m, complex(b)) for b in outcomes]
    else:
        parts = [_snap(state, m, outcomes, k) for k in range(len(outcomes))]
    weights = np.array([p.norm() if len(p) else 0.0 for p in parts])
    total = weights.sum()
    if not total > 0:
        raise DomainError("outcome set has zero total weight")
    probs = weights / total
    if model == IDEALIZED and abs(probs.sum() - 1) > 1e-6:
        raise DomainError("idealized outcome probabilities do not sum to 1")
    return [(float(p), part.normalized() if p > 0 else None) for p, part in zip(probs, parts)]


def measure_pointer(state, mode, outcomes, model=PROJECTION, seed=None, select=None):
    """Measure ``mode`` against the pointer ``outcomes``.

    With ``select`` the given outcome index is post-selected; otherwise one is
    drawn with a generator seeded by ``seed``.

    Returns
    -------
    (index, probability, conditional state)
    """
    dist = pointer_distribution(state, mode, outcomes, model)
    if select is None:
        probs = np.array([p for p, _ in dist])
        select = int(np.random.default_rng(seed).choice(len(dist), p=probs / probs.sum()))
    p, cond = dist[select]
    if cond is None:
        raise DomainError(f"outcome {select} has zero probability")
    return select, p, cond


@dataclass(frozen=True)
class TwoQubitDensityMatrix:
    """Density matrix in the basis ``gg, ge, eg, ee``."""

    matrix: np.ndarray

    def __post_init__(self):
        rho = _readonly(self.matrix, complex)
        if rho.shape != (4, 4):
            raise DomainError("two-qubit density matrix must be 4x4")
        if not np.allclose(rho, rho.conj().T, atol=1e-10):
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > 1e-10:
            raise DomainError(f"trace {np.trace(rho).real!r} differs from 1")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise DomainError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def pure(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def purity(self):
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def reduced_density(state, pair):
    """Two-qubit state of ``pair`` with every other qubit and mode traced out."""
    a, b = (state.qubit_index(q) for q in pair)
    rest = [k for k in range(len(state.qubits)) if k not in (a, b)]
    # <rest_b'|rest_b> and field overlaps <fields_b'|fields_b>
    same_rest = np.all(state.configs[:, None, rest] == state.configs[None, :, rest], axis=-1)
    weight = same_rest * _field_overlaps(state.amps).T
    idx = 2 * state.configs[:, a] + state.configs[:, b]
    c = state.coeffs
    rho = np.zeros((4, 4), dtype=complex)
    np.add.at(rho, (idx[:, None], idx[None, :]), c[:, None] * c.conj()[None, :] * weight)
    rho /= np.trace(rho).real
    rho = 0.5 * (rho + rho.conj().T)
    return TwoQubitDensityMatrix(rho)


def fidelity(rho, target="psi+"):
    """``<target|rho|target>`` for a named Bell state."""
    if not isinstance(rho, TwoQubitDensityMatrix):
        rho = TwoQubitDensityMatrix(rho)
    try:
        psi = BELL_STATES[target]
    except KeyError:
        raise ConfigError(f"unknown Bell state {target!r}") from None
    return float(np.clip(np.real(psi.conj() @ rho.matrix @ psi), 0.0, 1.0))


def closed_form_fidelity(mean_photon_number, phi, eta=0.0):
    """Post-selected fidelity without crosstalk, ``1/(1 + exp(-(1-eta) n sin^2(phi/2)))``."""
    return 1.0 / (1.0 + math.exp(-(1 - eta) * mean_photon_number * math.sin(phi / 2) ** 2))


@dataclass(frozen=True)
class DistributionConfig:
    mean_photon_number: float = 10.0
    phi: float = math.pi / 3
    m1: float = 0.0
    m2: float = 0.0
    eta: float = 0.0
    model: str = PROJECTION
    seed: int = 0

    def __post_init__(self):
        if not self.mean_photon_number >= 0:
            raise DomainError("mean photon number must be non-negative")
        if not 0 < self.phi < math.pi:
            raise DomainError("phi must lie in (0, pi)")
        if self.model not in MODELS:
            raise ConfigError(f"unknown measurement model {self.model!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        NetworkFactors(self.m1, self.m2, self.eta)

    @property
    def factors(self):
        return NetworkFactors(self.m1, self.m2, self.eta)

    @property
    def alpha(self):
        return math.sqrt(self.mean_photon_number)


@dataclass(frozen=True)
class DistributionResult:
    config: DistributionConfig
    f1: float
    f2: float
    p_success: float
    rho13: TwoQubitDensityMatrix = field(repr=False)
    rho24: TwoQubitDensityMatrix = field(repr=False)
    sampled_outcomes: tuple = ()
    approximation: str = "pure-coherent-state"

    def to_dict(self):
        def pairs(rho):
            return [[float(z.real), float(z.imag)] for z in rho.matrix.ravel()]
        return {
            "config": asdict(self.config),
            "F1": self.f1,
            "F2": self.f2,
            "p_success": self.p_success,
            "model": self.config.model,
            "seed": self.config.seed,
            "approximation": self.approximation,
            "sampled_outcomes": list(self.sampled_outcomes),
            "rho13": pairs(self.rho13),
            "rho24": pairs(self.rho24),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def prepare_network_state(cfg):
    """Four qubits and two probes after both interactions, before measurement."""
    s = prepare_plus(4, ("q1", "q2", "q3", "q4"))
    s = attach_probe(s, "a1", cfg.alpha)
    s = attach_probe(s, "a2", cfg.alpha)
    s = dispersive_interact(s, "q1", "a1", cfg.phi)
    s = dispersive_interact(s, "q2", "a2", cfg.phi)
    s = propagate_network(s, ("a1", "a2"), cfg.factors, rename=("a3", "a4"))
    s = dispersive_interact(s, "q3", "a3", cfg.phi)
    return dispersive_interact(s, "q4", "a4", cfg.phi)


def distribute(cfg):
    """Run the protocol and post-select both probes on the unshifted pointer.

    The success pointer is ``sqrt(1 - eta) alpha / 2``; each probe is
    measured against it and its two ``e^{-+i phi}`` rotations, a3 first.
    A seeded draw of the unconditioned outcomes is also recorded.
    """
    s = prepare_network_state(cfg)
    outcomes = pointer_outcomes(math.sqrt(1 - cfg.eta) * cfg.alpha / 2, cfg.phi)
    _, p3, s3 = measure_pointer(s, "a3", outcomes, cfg.model, select=0)
    _, p4, s34 = measure_pointer(s3, "a4", outcomes, cfg.model, select=0)
    rho13 = reduced_density(s34, ("q1", "q3"))
    rho24 = reduced_density(s34, ("q2", "q4"))

    rng = np.random.default_rng(cfg.seed)
    k3, _, t3 = measure_pointer(s, "a3", outcomes, cfg.model, seed=rng)
    k4, _, _ = measure_pointer(t3, "a4", outcomes, cfg.model, seed=rng)

    res = DistributionResult(cfg, fidelity(rho13), fidelity(rho24), p3 * p4, rho13, rho24,
                             (k3, k4))
    log.debug("distribute %s -> F1=%.6f F2=%.6f p=%.6f", cfg, res.f1, res.f2, res.p_success)
    return res
