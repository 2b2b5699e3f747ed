"""Truncated number-basis reference simulator for small probe amplitudes.

Everything here works on explicit state vectors over (qubits) x (modes),
with each mode truncated at ``cutoff`` photons.  Linear optics is built from
the single-photon mode matrix by expanding the transformed creation
operators, so nothing here relies on the coherent-amplitude shortcuts of the
main simulator.  Meant for ``|alpha| <= 2`` or so; cost grows as cutoff^3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, TruncationError

NORM_TOL = 1e-8


def cutoff_for(*amplitudes):
    """Smallest cutoff satisfying ``N >= 10 |alpha|^2 + 10`` for all amplitudes."""
    return int(math.ceil(10 * max(abs(a) ** 2 for a in amplitudes) + 10)) if amplitudes else 10


@dataclass
class FockVector:
    """State array of shape ``(2**n_qubits, N, ..., N)``, one axis per mode.

    Qubit configurations are indexed with the first qubit as the most
    significant bit, ``0 = g`` and ``1 = e``.
    """

    n_qubits: int
    modes: tuple
    cutoff: int
    data: np.ndarray

    def axis(self, mode):
        try:
            return 1 + self.modes.index(mode)
        except ValueError:
            raise DomainError(f"unknown mode {mode!r}") from None

    def norm(self):
        return float(np.vdot(self.data, self.data).real)

    def copy_with(self, data, modes=None):
        return FockVector(self.n_qubits, self.modes if modes is None else tuple(modes),
                          self.cutoff, data)


def coherent_fock(alpha, cutoff):
    """Number-basis coefficients ``exp(-|a|^2/2) a^n / sqrt(n!)``, ``n < cutoff``."""
    alpha = complex(alpha)
    c = np.empty(cutoff, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, cutoff):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    deficit = 1.0 - float(np.vdot(c, c).real)
    if deficit > NORM_TOL:
        raise TruncationError(f"cutoff {cutoff} loses {deficit:.2e} of |{alpha}>")
    return c


def vacuum_plus(n_qubits, cutoff, modes=()):
    """Uniform qubit superposition with every mode in vacuum."""
    data = np.zeros((2 ** n_qubits,) + (cutoff,) * len(modes), dtype=complex)
    data[(slice(None),) + (0,) * len(modes)] = 2.0 ** (-n_qubits / 2)
    return FockVector(n_qubits, tuple(modes), cutoff, data)


def with_coherent_modes(n_qubits, amplitudes, cutoff):
    """``|+>^n`` times a product of coherent states, one per named mode."""
    data = np.full(2 ** n_qubits, 2.0 ** (-n_qubits / 2), dtype=complex)
    for a in amplitudes.values():
        data = np.multiply.outer(data, coherent_fock(a, cutoff))
    return FockVector(n_qubits, tuple(amplitudes), cutoff, data)


@lru_cache(maxsize=None)
def _block(s00, s01, s10, s11, k):
    """Matrix of a two-mode linear optical map on the ``k``-photon block.

    The mode matrix ``S`` sends input amplitudes ``x`` to ``S x``, i.e.
    ``a_j^dagger -> sum_i S[i, j] a_i^dagger``.  Rows and columns are
    indexed by the photon number of the first mode.
    """
    U = np.zeros((k + 1, k + 1), dtype=complex)
    fact = [math.factorial(j) for j in range(k + 1)]
    for n in range(k + 1):
        m = k - n
        norm_in = math.sqrt(fact[n] * fact[m])
        for j in range(n + 1):
            a = math.comb(n, j) * s00 ** j * s10 ** (n - j)
            for i in range(m + 1):
                p = j + i
                b = math.comb(m, i) * s01 ** i * s11 ** (m - i)
                U[p, n] += a * b * math.sqrt(fact[p] * fact[k - p]) / norm_in
    return U


def _apply_two_mode(data, ax1, ax2, S, cutoff):
    # Move the two mode axes last, act blockwise on fixed total photon number.
    x = np.moveaxis(data, (ax1, ax2), (-2, -1))
    out = np.zeros_like(x)
    dropped = 0.0
    s = tuple(complex(v) for v in np.asarray(S).ravel())
    for k in range(2 * cutoff - 1):
        n = np.arange(max(0, k - cutoff + 1), min(k, cutoff - 1) + 1)
        v = x[..., n, k - n]
        if k >= cutoff:
            # block only partially representable
            dropped += float(np.vdot(v, v).real)
            continue
        out[..., n, k - n] = v @ _block(*s, k).T
    if dropped > NORM_TOL:
        raise TruncationError(f"cutoff {cutoff} too small: {dropped:.2e} weight above it")
    return np.moveaxis(out, (-2, -1), (ax1, ax2))


def beamsplitter_fock(state, modes, angle=math.pi / 4):
    """Mode mixing ``(a, b) -> (cos a + sin b, sin a - cos b)``.

    At the default angle this is the balanced splitter
    ``((a + b)/sqrt 2, (a - b)/sqrt 2)``.
    """
    c, s = math.cos(angle), math.sin(angle)
    S = np.array([[c, s], [s, -c]])
    ax1, ax2 = (state.axis(m) for m in modes)
    return state.copy_with(_apply_two_mode(state.data, ax1, ax2, S, state.cutoff))


def dispersive_fock(state, qubit, mode, phi):
    """``exp(-+ i (phi/2) n)`` on ``mode`` for qubit ``qubit`` in ``g`` / ``e``.

    ``qubit`` is a zero-based index.
    """
    if not 0 <= qubit < state.n_qubits:
        raise DomainError(f"unknown qubit {qubit!r}")
    ax = state.axis(mode)
    nq = state.n_qubits
    excited = (np.arange(2 ** nq) >> (nq - 1 - qubit)) & 1
    sign = np.where(excited == 1, 1.0, -1.0)
    n = np.arange(state.cutoff)
    phase = np.exp(0.5j * phi * np.multiply.outer(sign, n))
    shape = [1] * state.data.ndim
    shape[0], shape[ax] = len(sign), state.cutoff
    return state.copy_with(state.data * phase.reshape(shape))


def loss_fock(state, mode, transmission):
    """Beam-splitter loss to a vacuum ancilla with amplitude transmission ``t``.

    For every qubit configuration the joint (fields, ancilla) vector is
    reduced to its leading Schmidt component, phased so that the ancilla's
    vacuum coefficient is real and positive.  This keeps each branch pure;
    a full partial trace would additionally record which-branch information
    carried off by the ancilla.
    """
    if not 0.0 <= transmission <= 1.0:
        raise DomainError("amplitude transmission must lie in [0, 1]")
    theta = math.acos(transmission)
    c, s = math.cos(theta), math.sin(theta)
    S = np.array([[c, -s], [s, c]])
    N = state.cutoff
    joint = np.zeros(state.data.shape + (N,), dtype=complex)
    joint[..., 0] = state.data
    joint = _apply_two_mode(joint, state.axis(mode), joint.ndim - 1, S, N)
    out = np.empty_like(state.data)
    residual = 0.0
    for q in range(joint.shape[0]):
        M = joint[q].reshape(-1, N)
        U, sv, Vh = np.linalg.svd(M, full_matrices=False)
        if sv[0] == 0:
            out[q] = 0
            continue
        vac = Vh[0, 0]
        ph = vac / abs(vac) if abs(vac) > 0 else 1.0
        out[q] = (sv[0] * U[:, 0] * ph).reshape(state.data.shape[1:])
        residual += float(np.sum(sv[1:] ** 2))
    if residual > NORM_TOL:
        raise DomainError(f"branch fields are not product states (residual {residual:.2e})")
    return state.copy_with(out)


def network_fock(state, modes, direct, cross):
    """Averaged two-pair network with amplitude matrix ``[[d, c], [c, d]]``.

    Realised as balanced splitter, per-mode loss ``d + c`` and ``d - c``,
    balanced splitter.
    """
    if not 0 <= cross <= direct or direct + cross > 1 + 1e-15:
        raise DomainError("network factors must satisfy 0 <= cross <= direct, direct + cross <= 1")
    s = beamsplitter_fock(state, modes)
    s = loss_fock(s, modes[0], min(1.0, direct + cross))
    s = loss_fock(s, modes[1], direct - cross)
    return beamsplitter_fock(s, modes)


def project_coherent(state, mode, beta):
    """Apply ``<beta|`` to ``mode`` and remove it; result is unnormalised."""
    ax = state.axis(mode)
    bra = coherent_fock(beta, state.cutoff).conj()
    data = np.tensordot(state.data, bra, axes=([ax], [0]))
    modes = [m for m in state.modes if m != mode]
    return state.copy_with(data, modes)


def _pointer_set(beta, phi):
    pts = []
    for z in (beta, beta * np.exp(-1j * phi), beta * np.exp(1j * phi)):
        if all(abs(z - w) > 1e-12 for w in pts):
            pts.append(complex(z))
    return pts


def _select_success(state, mode, beta, phi):
    branches = [project_coherent(state, mode, b) for b in _pointer_set(beta, phi)]
    weights = [b.norm() for b in branches]
    return branches[0], weights[0] / sum(weights)


def _pair_density(psi, a, b, n_qubits):
    t = psi.reshape((2,) * n_qubits)
    rest = [k for k in range(n_qubits) if k not in (a, b)]
    t = np.transpose(t, [a, b] + rest).reshape(4, -1)
    rho = t @ t.conj().T
    return rho / np.trace(rho).real


def _psi_plus_fidelity(rho):
    v = np.array([0, 1, 1, 0]) / math.sqrt(2)
    return float(np.real(v @ rho @ v))


def pipeline_fock(mean_photon_number, phi, m1=0.0, m2=0.0, eta=0.0, cutoff=None):
    """Four-qubit, two-probe protocol in the number basis.

    Returns a dict with ``F1``, ``F2`` and ``p_success`` for post-selection
    of both probes on the unshifted pointer.
    """
    alpha = math.sqrt(mean_photon_number)
    N = cutoff_for(alpha) if cutoff is None else int(cutoff)
    state = with_coherent_modes(4, {"a1": alpha, "a2": alpha}, N)
    state = dispersive_fock(state, 0, "a1", phi)
    state = dispersive_fock(state, 1, "a2", phi)
    direct = math.sqrt(1 - eta) / 2
    cross = math.sqrt((1 - eta) * m1 * m2) / 2
    state = network_fock(state, ("a1", "a2"), direct, cross)
    state = dispersive_fock(state, 2, "a1", phi)
    state = dispersive_fock(state, 3, "a2", phi)
    beta = math.sqrt(1 - eta) * alpha / 2
    s3, p3 = _select_success(state, "a1", beta, phi)
    s34, p4 = _select_success(s3, "a2", beta, phi)
    psi = s34.data / math.sqrt(s34.norm())
    return {
        "F1": _psi_plus_fidelity(_pair_density(psi, 0, 2, 4)),
        "F2": _psi_plus_fidelity(_pair_density(psi, 1, 3, 4)),
        "p_success": p3 * p4,
    }
