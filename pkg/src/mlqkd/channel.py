"""Honest channel model and the observable statistics it produces."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .protocol import ProtocolParams
from .source import AngularWeights


@dataclass(frozen=True)
class ChannelModel:
    """Transmission ``eta`` plus a random polarization rotation with probability ``eps``."""

    eta: float
    eps: float = 0.0

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"transmission must be in (0, 1], got {self.eta}")
        if not 0 <= self.eps <= 1:
            raise ValueError(f"rotation probability must be in [0, 1], got {self.eps}")


@dataclass(frozen=True)
class ObservedStats:
    """Detection rate per pulse and per-detected-event fractions.

    ``r_con`` and ``r_bit`` are fractions of detected events that are
    conclusive and conclusive with a bit error, respectively.
    """

    eta_d: float
    X: float
    r_con: float
    r_bit: float

    def __post_init__(self):
        if not 0 <= self.eta_d <= 1:
            raise ValueError(f"eta_d must be in [0, 1], got {self.eta_d}")
        if not -1 - 1e-12 <= self.X <= 1 + 1e-12:
            raise ValueError(f"X must be in [-1, 1], got {self.X}")
        if not 0 <= self.r_bit <= self.r_con + 1e-15 or self.r_con > 1:
            raise ValueError("need 0 <= r_bit <= r_con <= 1")

    @classmethod
    def from_rates(cls, params: ProtocolParams, eta_d: float, r_con: float,
                   r_bit: float) -> "ObservedStats":
        """Build from measured fractions; X is taken from the bit-error rate."""
        return cls(eta_d, 1 - 2 * params.M * r_bit, r_con, r_bit)


def stats_from_X(params: ProtocolParams, X: float, eta_d: float) -> ObservedStats:
    """Conclusive and bit-error fractions implied by ``X``."""
    M = params.M
    r_bit = (1 - X) / (2 * M)
    r_con = (1 - X * math.cos(params.theta) ** 2) / M
    return ObservedStats(eta_d, X, r_con, r_bit)


def detection_rate(mu: float, eta: float) -> float:
    """Probability that exactly one photon of a Poisson pulse survives the channel."""
    m = mu * eta
    return m * math.exp(-m)


def honest_stats(params: ProtocolParams, mu: float, channel: ChannelModel) -> ObservedStats:
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    return stats_from_X(params, 1 - channel.eps, detection_rate(mu, channel.eta))


def X_from_r_con(params: ProtocolParams, r_con: float) -> float:
    """Cross-check route for X; undefined when ``cos Theta == 0``."""
    c2 = math.cos(params.theta) ** 2
    if c2 < 1e-15:
        raise ValueError("r_con carries no information on X when Theta = pi/2")
    return (1 - params.M * r_con) / c2


def zeta(K: int) -> float:
    """Limiting loss budget constant ``1 / (2^K (K+1)!)``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return 1.0 / (2 ** K * math.factorial(K + 1))


def K_valid(M: int, L: int, K: int) -> bool:
    return 1 <= K and (K == 1 or (K <= M - 2 and 2 * L * (K - 1) < M))


def max_K(M: int, L: int) -> int:
    """Largest K with ``K <= M - 2`` and ``2L(K-1) < M``."""
    K = 1
    while K_valid(M, L, K + 1):
        K += 1
    return K


def loss_constraint_rhs(weights: AngularWeights, eta_d: float) -> np.ndarray:
    """Per-subspace loss budget ``2 T_k / eta_d``, clipped at 2."""
    if eta_d <= 0:
        raise ValueError("detection rate must be positive")
    return np.minimum(2.0 * np.asarray(weights.T) / eta_d, 2.0)
