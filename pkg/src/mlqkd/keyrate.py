"""Key rates from error rates: entropies, finite gain, asymptotic gain, thresholds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .channel import ChannelModel, K_valid, honest_stats, max_K
from .phase_bound import (AsymptoticProblem, PhaseErrorBound, choose_phi_prime, golden_max,
                          phase_error_bound_finite)
from .protocol import ProtocolParams
from .source import angular_weights, poisson_dist

GAMMA_FLOOR = 1e-12
N_PHI_SCAN = 64


@dataclass(frozen=True)
class KeyRateResult:
    e_bit: float
    e_ph: float
    bracket: float
    gain: float
    mode: str
    gamma: float | None = None
    K: int | None = None
    mu: float | None = None

    def __post_init__(self):
        if not (0 <= self.e_bit <= 0.5 and 0 <= self.e_ph <= 0.5):
            raise ValueError("error rates must lie in [0, 1/2]")
        if self.gain < 0:
            raise ValueError("gain must be nonnegative")
        if self.mode not in ("finite", "asymptotic"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def binary_entropy(x: float) -> float:
    if not 0 <= x <= 1:
        raise ValueError(f"entropy argument must be in [0, 1], got {x}")
    if x == 0 or x == 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(hi, max(lo, x))


def _bracket(e_bit: float, e_ph: float) -> float:
    return 1 - binary_entropy(e_bit) - binary_entropy(e_ph)


def key_length_finite(N: int, r_con: float, r_err: float, r_ph_bar: float) -> KeyRateResult:
    """``N r_con [1 - h(r_err/r_con) - h(r_ph_bar/r_con)]``, clamped at zero.

    With ``N = 1`` the gain is per detected event.
    """
    if r_con <= 0:
        raise ValueError("no conclusive events")
    if not 0 <= r_err <= r_con * (1 + 1e-12) or r_ph_bar < 0:
        raise ValueError("need 0 <= r_err <= r_con and r_ph_bar >= 0")
    e_bit = _clamp(r_err / r_con, 0.0, 1.0)
    e_ph = _clamp(r_ph_bar / r_con, 0.0, 0.5)
    if e_bit > 0.5:
        # more than half the bits flipped: nothing to distill
        return KeyRateResult(0.5, e_ph, _bracket(0.5, e_ph), 0.0, "finite")
    br = _bracket(e_bit, e_ph)
    gain = N * r_con * br if br > 0 and e_ph < 0.5 else 0.0
    return KeyRateResult(e_bit, e_ph, br, gain, "finite")


@lru_cache(maxsize=64)
def _problem(K: int, Theta: float) -> AsymptoticProblem:
    return AsymptoticProblem(K, Theta)


def beta(Theta: float, eps: float) -> float:
    """``M r_con = 1 - cos^2(Theta)(1 - eps)``."""
    return 1 - math.cos(Theta) ** 2 * (1 - eps)


def asymptotic_bracket(K: int, Theta: float, gamma: float, eps: float) -> tuple[float, float, float]:
    """``(e_bit, e_ph, bracket)`` of the scaling-limit key rate."""
    b = beta(Theta, eps)
    g = _problem(K, Theta).solve(gamma, eps).g_value
    e_bit = _clamp(eps / (2 * b), 0.0, 0.5)
    e_ph = _clamp(0.5 + g / (2 * b), 0.0, 0.5)
    return e_bit, e_ph, _bracket(e_bit, e_ph)


def _check_K(M: int, L: int, K: int) -> None:
    if not K_valid(M, L, K):
        raise ValueError(f"K={K} is not valid for (M, L) = ({M}, {L})")


def asymptotic_gain(M: int, L: int, K: int, gamma: float, eps: float,
                    double: bool = False) -> KeyRateResult:
    """Normalized gain ``G / eta^((K+1)/K)`` in the limit ``eta -> 0``."""
    ProtocolParams(M, L, double)
    _check_K(M, L, K)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    Theta = math.pi * L / M
    e_bit, e_ph, br = asymptotic_bracket(K, Theta, gamma, eps)
    gain = gamma ** (1 / K) * beta(Theta, eps) / M * br if br > 0 and e_ph < 0.5 else 0.0
    if double:
        gain *= 2
    return KeyRateResult(e_bit, e_ph, br, gain, "asymptotic", gamma, K)


def optimize_gamma(M: int, L: int, K: int, eps: float,
                   double: bool = False) -> tuple[float, KeyRateResult]:
    """Maximize :func:`asymptotic_gain` over ``gamma``.

    The bracket is nonincreasing in ``gamma``; scan a log grid up to the first
    nonpositive bracket, then refine on ``log gamma`` by golden section.
    """
    gain = lambda lg: asymptotic_gain(M, L, K, math.exp(lg), eps, double).gain
    first = asymptotic_gain(M, L, K, GAMMA_FLOOR, eps, double)
    if first.bracket <= 0:
        return 0.0, asymptotic_gain(M, L, K, 0.0, eps, double)
    lgs = [math.log(GAMMA_FLOOR)]
    vals = [first.gain]
    lg = lgs[0]
    while vals[-1] > 0 and lg < math.log(1e8):
        lg += math.log(2.0)
        lgs.append(lg)
        vals.append(gain(lg))
    i = int(np.argmax(vals))
    lo, hi = lgs[max(i - 1, 0)], lgs[min(i + 1, len(lgs) - 1)]
    lg_star, _ = golden_max(gain, lo, hi, tol=1e-9)
    g_star = math.exp(lg_star)
    return g_star, asymptotic_gain(M, L, K, g_star, eps, double)


def threshold_eps(K: int, Theta: float, tol: float = 1e-5) -> float:
    """Largest ``eps`` with positive optimized asymptotic gain.

    The bracket only shrinks as ``gamma`` grows, so positivity at any
    ``gamma > 0`` is decided at ``GAMMA_FLOOR``.
    """
    if K < 1 or math.cos((K - 1) * Theta) <= 0:
        raise ValueError("need K >= 1 and cos((K-1) Theta) > 0")

    def positive(eps):
        _, e_ph, br = asymptotic_bracket(K, Theta, GAMMA_FLOOR, eps)
        return br > 0 and e_ph < 0.5

    if not positive(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    if positive(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo


def scan_eps(M: int, L: int, K: int, eps_values: Sequence[float],
             double: bool = False) -> list[dict]:
    """Optimized gain at each ``eps``; rows keep the raw bracket next to the gain."""
    rows = []
    for eps in eps_values:
        g_star, res = optimize_gamma(M, L, K, float(eps), double)
        rows.append({"eps": float(eps), "gamma_star": g_star,
                     "bracket": res.bracket, "gain": res.gain})
    return rows


def _finite_at_mu(params: ProtocolParams, mu: float, channel: ChannelModel, K: int,
                  scan_phi: bool) -> tuple[KeyRateResult, PhaseErrorBound]:
    stats = honest_stats(params, mu, channel)
    weights = angular_weights(poisson_dist(mu), params.M)
    if scan_phi:
        phis = -np.pi / 2 + np.pi * np.arange(N_PHI_SCAN) / N_PHI_SCAN
        bounds = [phase_error_bound_finite(params, float(ph), stats, weights) for ph in phis]
        bound = min(bounds, key=lambda b: b.r_ph_bar)
    else:
        bound = phase_error_bound_finite(params, choose_phi_prime(K, params.theta), stats, weights)
    per_event = key_length_finite(1, stats.r_con, stats.r_bit, bound.r_ph_bar)
    scale = stats.eta_d * (2 if params.double_even else 1)
    res = KeyRateResult(per_event.e_bit, per_event.e_ph, per_event.bracket,
                        per_event.gain * scale, "finite", None, K, mu)
    return res, bound


def finite_rate(params: ProtocolParams, mu: float, channel: ChannelModel, K: int | None = None,
                scan_phi: bool = False) -> KeyRateResult:
    """Per-pulse key gain at finite loss with honest channel statistics."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    K = max_K(params.M, params.L) if K is None else K
    _check_K(params.M, params.L, K)
    return _finite_at_mu(params, mu, channel, K, scan_phi)[0]


def optimize_mu(params: ProtocolParams, channel: ChannelModel, K: int | None = None,
                scan_phi: bool = False, tol: float = 1e-3) -> KeyRateResult:
    """Golden section on ``log mu`` around the scaling-limit optimum ``(gamma* eta)^(1/K)``."""
    K = max_K(params.M, params.L) if K is None else K
    _check_K(params.M, params.L, K)
    g_star, _ = optimize_gamma(params.M, params.L, K, channel.eps)
    if g_star <= 0:
        g_star = 1.0
    centre = math.log(min(1.0, (g_star * channel.eta) ** (1 / K)))
    rate = lambda lm: finite_rate(params, math.exp(lm), channel, K, scan_phi).gain
    lm, _ = golden_max(rate, centre - 2.0, min(centre + 2.0, math.log(5.0)), tol=tol)
    return finite_rate(params, math.exp(lm), channel, K, scan_phi)
