"""Coherent-state amplitude algebra for the two-pair network.

Coherent and vacuum inputs stay coherent through phase shifters, beam
splitters and beam-splitter loss, so each mode is tracked by one complex
amplitude.  Vacuum ports contribute nothing to the mean field and are left
implicit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DomainError

_SQRT1_2 = 1 / math.sqrt(2)


@dataclass(frozen=True)
class NetworkFactors:
    """Chaos-averaged transfer factors of the network.

    ``m1`` and ``m2`` are the correction factors of the two chaotic phase
    shifter pairs; ``eta`` is the fraction of power lost in the channel.
    """

    m1: float = 0.0
    m2: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        # M = 0 is the infinite-bandwidth limit and is accepted.
        for name in ("m1", "m2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta!r}")

    @property
    def direct(self):
        """Amplitude transmission of a pair's own path, ``sqrt(1 - eta) / 2``."""
        return math.sqrt(1.0 - self.eta) / 2

    @property
    def cross(self):
        """Residual crosstalk amplitude, ``sqrt((1 - eta) M1 M2) / 2``."""
        return math.sqrt((1.0 - self.eta) * self.m1 * self.m2) / 2

    def swapped(self):
        return NetworkFactors(self.m2, self.m1, self.eta)


def phase_shift(alpha, theta):
    """Phase shifter: ``alpha * exp(-i theta)``."""
    return complex(alpha) * cmath.exp(-1j * theta)


def beam_splitter_5050(a, b):
    """Balanced beam splitter ``(a, b) -> ((a + b)/sqrt 2, (a - b)/sqrt 2)``."""
    a, b = complex(a), complex(b)
    return (a + b) * _SQRT1_2, (a - b) * _SQRT1_2


def loss(alpha, eta):
    """Amplitude after a beam splitter that diverts a fraction ``eta`` of the power."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1], got {eta!r}")
    return math.sqrt(1.0 - eta) * complex(alpha)


def network_transfer(alpha1, alpha2, f):
    """Output amplitudes ``(alpha3, alpha4)`` of the averaged network."""
    a1, a2 = complex(alpha1), complex(alpha2)
    t, c = f.direct, f.cross
    return t * a1 + c * a2, t * a2 + c * a1


def encoded_transfer(alpha1, alpha2, theta1, theta2, eta=0.0):
    """One realisation of the network for given chaotic phases.

    Each sender encodes with its own phase, the shared channel is one output
    port of the combining splitter, and each receiver decodes with the
    synchronised inverse phase after the distributing splitter.  Averaging the
    returned amplitudes over independent chaotic phases gives
    :func:`network_transfer` with ``M_i`` replaced by ``|<exp(i theta_i)>|^2``.
    """
    channel, _ = beam_splitter_5050(phase_shift(alpha1, theta1), phase_shift(alpha2, theta2))
    channel = loss(channel, eta)
    out3, out4 = beam_splitter_5050(channel, 0.0)
    return phase_shift(out3, -theta1), phase_shift(out4, -theta2)


def coherent_overlap(alpha, beta):
    """``<alpha|beta> = exp(-|alpha|^2/2 - |beta|^2/2 + conj(alpha) beta)``."""
    a, b = complex(alpha), complex(beta)
    return cmath.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + a.conjugate() * b)
