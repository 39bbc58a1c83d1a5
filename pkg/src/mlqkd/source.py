"""Photon-number source and the virtual state rho_AC.

The weights ``T_k = Tr[rho_AC |2k><2k|]`` have the closed form
``sum_n mu_n 2^-n sum_{k' = k mod M, k' <= n} C(n, k')``; the Fock-space
construction in :func:`fock_oracle_weights` checks it independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc

from .protocol import ProtocolParams, xi_state_A

FOCK_NMAX_LIMIT = 8


@dataclass(frozen=True)
class PhotonNumberDist:
    weights: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d sequence")
        if np.any(w < 0) or self.tail_mass < 0:
            raise ValueError("photon-number weights must be nonnegative")
        if abs(w.sum() + self.tail_mass - 1.0) > 1e-12:
            raise ValueError("weights plus tail mass must sum to 1")
        object.__setattr__(self, "weights", w)

    @property
    def n_max(self) -> int:
        return self.weights.size - 1

    @classmethod
    def single(cls, n: int) -> "PhotonNumberDist":
        """Distribution concentrated on exactly ``n`` photons."""
        w = np.zeros(n + 1)
        w[n] = 1.0
        return cls(w, 0.0)


@dataclass(frozen=True)
class AngularWeights:
    T: np.ndarray
    truncation_error_bound: float

    def __post_init__(self):
        if np.any(np.asarray(self.T) < 0):
            raise ValueError("angular weights must be nonnegative")


def default_nmax(mu: float) -> int:
    return max(20, math.ceil(10 * mu + 10))


def poisson_dist(mu: float, n_max: int | None = None) -> PhotonNumberDist:
    """Truncated Poisson distribution; the tail is kept exactly, not as 1 - sum."""
    if mu < 0:
        raise ValueError(f"mean photon number must be nonnegative, got {mu}")
    if n_max is None:
        n_max = default_nmax(mu)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    n = np.arange(n_max + 1)
    if mu == 0:
        w = (n == 0).astype(float)
        tail = 0.0
    else:
        w = np.exp(-mu + n * math.log(mu) - np.array([math.lgamma(k + 1) for k in n]))
        tail = float(gammainc(n_max + 1, mu))
    return PhotonNumberDist(w, tail)


def angular_weights(dist: PhotonNumberDist, M: int) -> AngularWeights:
    if M < 3:
        raise ValueError("M must be >= 3")
    T = np.zeros(M)
    for n, mu_n in enumerate(dist.weights):
        if mu_n == 0:
            continue
        denom = 2 ** n
        for kp in range(n + 1):
            T[kp % M] += mu_n * (math.comb(n, kp) / denom)
    return AngularWeights(T, float(dist.tail_mass))


def _creation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), -1).astype(complex)


class _FockSpace:
    """Two optical modes (|-1>, |+1>), each truncated at ``n_max`` photons."""

    def __init__(self, n_max: int):
        if n_max > FOCK_NMAX_LIMIT:
            raise ValueError(f"Fock oracle limited to n_max <= {FOCK_NMAX_LIMIT}")
        self.n_max = n_max
        d = n_max + 1
        a = _creation(d)
        eye = np.eye(d)
        self.a_minus = np.kron(a, eye)
        self.a_plus = np.kron(eye, a)
        self.vac = np.zeros(d * d, dtype=complex)
        self.vac[0] = 1.0
        n = np.arange(d)
        self.n_minus = np.repeat(n, d)
        self.n_plus = np.tile(n, d)

    @property
    def dim(self) -> int:
        return self.vac.size

    def polarized(self, theta: float, n: int) -> np.ndarray:
        """``|theta, n>``: n photons linearly polarized at ``theta``."""
        op = (np.exp(1j * theta) * self.a_minus + np.exp(-1j * theta) * self.a_plus)
        v = self.vac
        for _ in range(n):
            v = op @ v
        return v / math.sqrt(2 ** n * math.factorial(n))

    def rotation(self, theta: float) -> np.ndarray:
        return np.exp(-1j * theta * (self.n_plus - self.n_minus))


def phi_state(M: int, n: int, fock: _FockSpace, perturb: float = 0.0) -> np.ndarray:
    """``|Phi_n>_AC`` built by applying creation operators to the vacuum.

    Layout is A (x) C with A the slow index.
    """
    out = np.zeros((M, fock.dim), dtype=complex)
    pref = math.sqrt(math.factorial(n) / 2 ** n)
    for k in range(n + 1):
        v = fock.vac
        for _ in range(n - k):
            v = fock.a_plus @ v
        for _ in range(k):
            v = fock.a_minus @ v
        out[k % M] += pref / (math.factorial(k) * math.factorial(n - k)) * v
    if perturb:
        nz = np.flatnonzero(np.abs(out.ravel()) > 0)
        out.ravel()[nz[0]] += perturb
    return out.ravel()


def rho_AC(dist: PhotonNumberDist, M: int, n_max: int,
           perturb_n: int | None = None, perturb: float = 0.0) -> tuple[np.ndarray, _FockSpace]:
    fock = _FockSpace(n_max)
    rho = np.zeros((M * fock.dim, M * fock.dim), dtype=complex)
    for n, mu_n in enumerate(dist.weights[: n_max + 1]):
        if mu_n == 0:
            continue
        v = phi_state(M, n, fock, perturb if n == perturb_n else 0.0)
        rho += mu_n * np.outer(v, v.conj())
    return rho, fock


def fock_oracle_weights(dist: PhotonNumberDist, M: int, n_max: int = 6) -> AngularWeights:
    """Angular weights read off an explicitly assembled ``rho_AC``."""
    if n_max > FOCK_NMAX_LIMIT:
        raise ValueError(f"Fock oracle limited to n_max <= {FOCK_NMAX_LIMIT}")
    n_max = min(n_max, dist.n_max)
    rho, fock = rho_AC(dist, M, n_max)
    d = fock.dim
    diag = np.real(np.diag(rho)).reshape(M, d)
    dropped = float(dist.weights[n_max + 1:].sum()) + dist.tail_mass
    return AngularWeights(diag.sum(axis=1), dropped)


@dataclass
class StateReport:
    projection_deviation: dict = field(default_factory=dict)  # theta -> dev
    rotation_deviation: dict = field(default_factory=dict)
    tol: float = 1e-10

    @property
    def max_deviation(self) -> float:
        vals = list(self.projection_deviation.values()) + list(self.rotation_deviation.values())
        return max(vals, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


def verify_state_consistency(params: ProtocolParams, dist: PhotonNumberDist, n_max: int = 6,
                             perturb: float = 0.0) -> StateReport:
    """Check that projecting A onto ``xi_theta`` yields the polarized source state.

    The projection carries the probability ``1/M`` of that outcome, so the
    comparison is ``M <xi|rho_AC|xi> == rho(theta)``. ``perturb`` shifts one
    amplitude of ``|Phi_2>`` (detector sanity check).
    """
    M = params.M
    n_max = min(n_max, dist.n_max)
    rho, fock = rho_AC(dist, M, n_max, perturb_n=2, perturb=perturb)
    d = fock.dim
    rho4 = rho.reshape(M, d, M, d)
    report = StateReport()
    for l, th in enumerate(params.angles()):
        xi = xi_state_A(params, th)
        projected = M * np.einsum("a,aibj,b->ij", xi.conj(), rho4, xi)
        direct = np.zeros((d, d), dtype=complex)
        for n, mu_n in enumerate(dist.weights[: n_max + 1]):
            v = fock.polarized(th, n)
            direct += mu_n * np.outer(v, v.conj())
        report.projection_deviation[l] = float(np.max(np.abs(projected - direct)))
        u = np.kron(np.exp(-2j * np.arange(M) * th), fock.rotation(th))
        rotated = (u[:, None] * rho) * u.conj()[None, :]
        report.rotation_deviation[l] = float(np.max(np.abs(rotated - rho)))
    return report
