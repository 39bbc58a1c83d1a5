"""Upper bound on the phase-error rate.

Two routes:

* :func:`phase_error_bound_finite` maximizes the bound over the adversary's
  subspace decomposition ``{p_k, X_k}`` for finite loss. For fixed ``X`` the
  problem is a linear program in ``p``. The outer search over ``X`` solves
  a multi-column LP over sampled ``(k, X_k)`` pairs with adaptive refinement,
  then polishes by coordinate ascent.
* :func:`g_asymptotic` solves the two-parameter reduction valid as
  ``eta -> 0`` with ``mu = (gamma eta)^(1/K)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import ObservedStats, loss_constraint_rhs, zeta
from .envelope import GoodEnvelope, f_phi
from .protocol import ProtocolParams
from .simplex import Infeasible, linprog_max
from .source import AngularWeights

INVPHI = (math.sqrt(5) - 1) / 2
FEAS_TOL = 1e-9
WITNESS_TOL = 1e-10


@dataclass(frozen=True)
class SubspaceAssignment:
    p: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        p, X = np.asarray(self.p, float), np.asarray(self.X, float)
        if p.shape != X.shape:
            raise ValueError("p and X must have the same length")
        if np.any(p < -FEAS_TOL) or abs(p.sum() - 1) > FEAS_TOL:
            raise ValueError("p must be a probability vector")
        if np.any(np.abs(X) > 1 + FEAS_TOL):
            raise ValueError("X_k must lie in [-1, 1]")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "X", X)


@dataclass(frozen=True)
class PhaseErrorBound:
    r_ph_bar: float
    witness: SubspaceAssignment
    phi_prime: float
    method: str = "finite"


@dataclass(frozen=True)
class AsymptoticWitness:
    q: float
    X_prime: float
    X_dprime: float
    g_value: float


def choose_phi_prime(K: int, Theta: float) -> float:
    """Phase offset that makes subspaces ``0..K-1`` the good ones."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return -(K - 1) * Theta / 2


def subspace_phases(M: int, Theta: float, phi_prime: float) -> np.ndarray:
    return 2 * (np.arange(M) * Theta + phi_prime)


def w_cost(x):
    """Minimum diagonal weight (times 2) of a qubit state with ``<X> = x``."""
    return 1 - np.sqrt(np.clip(1 - np.square(x), 0.0, None))


def golden_max(fun: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-9, max_iter: int = 200) -> tuple[float, float]:
    """Golden-section search for a maximum on ``[lo, hi]``; endpoints included."""
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = fun(d)
    best_x, best_f = (c, fc) if fc >= fd else (d, fd)
    for x in (lo, hi):
        fx = fun(x)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


class FiniteProblem:
    """Maximize ``sum_k p_k f_k(X_k) / 2M`` subject to the loss constraints.

    Constraint rows with budget ``R_k >= 1`` are dropped: the left-hand side
    never exceeds ``p_k + p_{k-1} <= 1``.
    """

    def __init__(self, params: ProtocolParams, phi_prime: float, X_obs: float, R: np.ndarray):
        self.M = params.M
        self.Theta = params.theta
        self.phases = subspace_phases(self.M, self.Theta, phi_prime)
        self.X_obs = float(X_obs)
        self.R = np.asarray(R, dtype=float)
        self.active = [k for k in range(self.M) if self.R[k] < 1.0]
        self._cos = np.cos(self.phases)
        self._amp = 0.5 * math.sin(2 * self.Theta) * np.abs(np.sin(self.phases))
        self._c2 = math.cos(self.Theta) ** 2

    def coefficients(self, X: np.ndarray) -> np.ndarray:
        s = np.sqrt(np.clip(1 - X * X, 0.0, None))
        return (self._cos * (self._c2 - X) + self._amp * s) / (2 * self.M)

    def constraint_matrix(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        M = self.M
        w = w_cost(X)
        A = np.zeros((len(self.active), M))
        for r, k in enumerate(self.active):
            A[r, k] += w[k]
            A[r, (k - 1) % M] += w[(k - 1) % M]
        return A, self.R[self.active]

    def solve_p(self, X: np.ndarray) -> tuple[float, np.ndarray | None]:
        A_ub, b_ub = self.constraint_matrix(X)
        A_eq = np.vstack([np.ones(self.M), X])
        b_eq = np.array([1.0, self.X_obs])
        try:
            p, val = linprog_max(self.coefficients(X), A_ub if len(b_ub) else None,
                                 b_ub if len(b_ub) else None, A_eq, b_eq)
        except Infeasible:
            return -math.inf, None
        return val, p

    def value(self, X: np.ndarray) -> float:
        return self.solve_p(X)[0]

    def violations(self, p: np.ndarray, X: np.ndarray) -> float:
        """Largest constraint violation of ``(p, X)``, all rows included."""
        M = self.M
        w = w_cost(X)
        loss = [w[k] * p[k] + w[(k - 1) % M] * p[(k - 1) % M] - self.R[k] for k in range(M)]
        return max(0.0, max(loss), float(-p.min()), abs(p.sum() - 1), abs(p @ X - self.X_obs),
                   float(np.max(np.abs(X)) - 1))


def _line_max(prob: FiniteProblem, X: np.ndarray, k: int, n_coarse: int = 17):
    """Maximize over coordinate ``X_k`` with ``p`` re-optimized by the LP."""
    def along(t):
        Y = X.copy()
        Y[k] = t
        return prob.value(Y)

    pts = np.unique(np.append(np.linspace(-1.0, 1.0, n_coarse), X[k]))
    vals = np.array([along(t) for t in pts])
    i = int(np.argmax(vals))
    lo, hi = pts[max(i - 1, 0)], pts[min(i + 1, len(pts) - 1)]
    t_best, f_best = golden_max(along, lo, hi, tol=1e-10)
    if vals[i] > f_best:
        t_best, f_best = pts[i], vals[i]
    return t_best, f_best


def _coordinate_ascent(prob: FiniteProblem, X0: np.ndarray, f0: float,
                       tol: float = 1e-9, max_sweeps: int = 20):
    X, fx = X0.copy(), f0
    for _ in range(max_sweeps):
        start = fx
        for k in range(prob.M):
            t, ft = _line_max(prob, X, k)
            if ft > fx:
                X[k], fx = t, ft
        if fx - start < tol:
            break
    return X, fx


def _column_lp(prob: FiniteProblem, ks: np.ndarray, xs: np.ndarray):
    """LP over candidate columns ``(k, x)``; returns column weights and value."""
    M = prob.M
    c = (prob._cos[ks] * (prob._c2 - xs)
         + prob._amp[ks] * np.sqrt(np.clip(1 - xs * xs, 0.0, None))) / (2 * M)
    w = w_cost(xs)
    A_ub = np.array([np.where((ks == k) | (ks == (k - 1) % M), w, 0.0) for k in prob.active])
    b_ub = prob.R[prob.active]
    A_eq = np.vstack([np.ones_like(xs), xs])
    b_eq = np.array([1.0, prob.X_obs])
    if not prob.active:
        A_ub, b_ub = None, None
    return linprog_max(c, A_ub, b_ub, A_eq, b_eq)


def _merge(M: int, ks: np.ndarray, xs: np.ndarray, lam: np.ndarray, X_default: float):
    p = np.bincount(ks, weights=lam, minlength=M)
    y = np.bincount(ks, weights=lam * xs, minlength=M)
    X = np.full(M, min(1.0, max(-1.0, X_default)))
    used = p > 0
    X[used] = np.clip(y[used] / p[used], -1.0, 1.0)
    return p, X


def column_search(prob: FiniteProblem, n_grid: int = 41, h_min: float = 1e-9,
                  max_iter: int = 60) -> tuple[np.ndarray, np.ndarray, float]:
    """Global maximization by adaptively refined columns.

    Splitting one subspace into several ``(p, x)`` columns never helps (the
    objective is concave and the loss cost convex in ``x``), so the LP over a
    column grid equals the continuous problem restricted to that grid. Columns
    are refined around those the LP uses; merging them per subspace gives a
    feasible single-column witness at least as good as the LP value.
    """
    M = prob.M
    base = np.linspace(-1.0, 1.0, n_grid)
    extra = [np.array([prob.X_obs])] * M
    h = (base[1] - base[0]) / 2
    best = None
    for _ in range(max_iter):
        ks = np.concatenate([np.full(len(base) + len(extra[k]), k) for k in range(M)])
        xs = np.concatenate([np.concatenate([base, extra[k]]) for k in range(M)])
        try:
            lam, val = _column_lp(prob, ks, xs)
        except Infeasible:
            if best is None:
                raise
            break
        if best is None or val >= best[2]:
            best = (ks, xs, val, lam)
        used = lam > 0
        extra = []
        for k in range(M):
            centers = xs[used & (ks == k)]
            pts = np.concatenate([centers, centers - h, centers + h, [prob.X_obs]])
            extra.append(np.unique(np.clip(pts, -1.0, 1.0)))
        h /= 2
        if h < h_min:
            break
    ks, xs, val, lam = best
    p, X = _merge(M, ks, xs, lam, prob.X_obs)
    return p, X, val


def phase_error_bound_finite(params: ProtocolParams, phi_prime: float, stats: ObservedStats,
                             weights: AngularWeights, polish: bool = True) -> PhaseErrorBound:
    """Maximized phase-error bound ``r_ph_bar`` with its witness.

    The witness is always feasible, so the value is a certified lower bound on
    the maximum; global optimality is checked in tests against exhaustive grids.
    """
    R = loss_constraint_rhs(weights, stats.eta_d)
    prob = FiniteProblem(params, phi_prime, stats.X, R)
    p, X, _ = column_search(prob)
    cands = [(p, X)]
    f_lp, p_lp = prob.solve_p(X)
    if p_lp is not None:
        cands.append((p_lp, X.copy()))
        if polish:
            X2, _ = _coordinate_ascent(prob, X, f_lp)
            f2, p2 = prob.solve_p(X2)
            if p2 is not None:
                cands.append((p2, X2))
    # the simplex accepts residuals up to its own tolerance; witnesses need a margin
    def score(c):
        q = np.clip(c[0], 0.0, None)
        q = q / q.sum()
        ok = prob.violations(q, c[1]) <= WITNESS_TOL
        return (ok, float(prob.coefficients(c[1]) @ q) if ok else -prob.violations(q, c[1]))
    p, X = max(cands, key=score)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    r_ph_bar = stats.r_con / 2 + float(prob.coefficients(X) @ p)
    return PhaseErrorBound(r_ph_bar, SubspaceAssignment(p, X), phi_prime, "finite")


def verify_witness(params: ProtocolParams, bound: PhaseErrorBound, stats: ObservedStats,
                   weights: AngularWeights) -> tuple[float, float]:
    """``(max constraint violation, |objective - r_ph_bar|)`` recomputed from scratch."""
    M, Th = params.M, params.theta
    p, X = bound.witness.p, bound.witness.X
    R = loss_constraint_rhs(weights, stats.eta_d)
    phases = subspace_phases(M, Th, bound.phi_prime)
    obj = stats.r_con / 2 + sum(p[k] * f_phi(phases[k], Th, X[k]) for k in range(M)) / (2 * M)
    prob = FiniteProblem(params, bound.phi_prime, stats.X, R)
    return prob.violations(p, X), abs(obj - bound.r_ph_bar)


class AsymptoticProblem:
    """``max q f_{(K+1)Theta}(X') + (1-q) f(X'')`` under the bad-subspace budget.

    The objective is jointly concave in ``(q, q X')`` and the constraints are
    convex, so nested golden sections (over ``X'`` at fixed ``q``, then over
    ``q``) reach the global maximum.
    """

    def __init__(self, K: int, Theta: float, envelope: GoodEnvelope | None = None):
        if K < 1 or math.cos((K - 1) * Theta) <= 0:
            raise ValueError("need K >= 1 and cos((K-1) Theta) > 0")
        self.K, self.Theta = K, Theta
        self.env = envelope if envelope is not None else GoodEnvelope(K, Theta)
        phi_b = (K + 1) * Theta
        self._ba = math.cos(phi_b)
        self._bA = 0.5 * math.sin(2 * Theta) * abs(math.sin(phi_b))
        self._c2 = math.cos(Theta) ** 2

    def bad(self, x: float) -> float:
        return self._ba * (self._c2 - x) + self._bA * math.sqrt(max(0.0, 1 - x * x))

    def objective(self, q: float, Xp: float, eps: float) -> float:
        if q >= 1.0:
            return self.bad(Xp)
        Xpp = (1 - eps - q * Xp) / (1 - q)
        Xpp = min(1.0, max(-1.0, Xpp))
        return q * self.bad(Xp) + (1 - q) * self.env(Xpp)

    @staticmethod
    def xp_interval(q: float, budget: float, eps: float) -> tuple[float, float] | None:
        """Feasible ``X'`` at weight ``q``, or ``None``."""
        if q <= 0:
            return (-1.0, 1.0)
        if q >= 1:
            x = 1 - eps
            ok = w_cost(x) <= budget + 1e-15
            return (x, x) if ok else None
        ratio = budget / q
        a = 1.0 if ratio >= 1 else math.sqrt(max(0.0, 1 - (1 - ratio) ** 2))
        lo = max(-a, (q - eps) / q, -1.0)
        hi = min(a, (2 - eps - q) / q, 1.0)
        return (lo, hi) if lo <= hi else None

    def inner(self, q: float, budget: float, eps: float) -> tuple[float, float]:
        iv = self.xp_interval(q, budget, eps)
        if iv is None:
            return -math.inf, math.nan
        lo, hi = iv
        if q <= 0:
            return self.env(1 - eps), 1.0
        if hi - lo < 1e-15:
            return self.objective(q, lo, eps), lo
        x, v = golden_max(lambda t: self.objective(q, t, eps), lo, hi, tol=1e-11)
        return v, x

    def q_max(self, budget: float, eps: float) -> float:
        if self.xp_interval(1.0, budget, eps) is not None:
            return 1.0
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.xp_interval(mid, budget, eps) is not None:
                lo = mid
            else:
                hi = mid
        return lo

    def solve(self, gamma: float, eps: float, grid: int = 41) -> AsymptoticWitness:
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if not 0 <= eps <= 1:
            raise ValueError("eps must be in [0, 1]")
        budget = zeta(self.K) * gamma
        qm = self.q_max(budget, eps)
        # coarse scan picks the bracket; concavity in q makes the refinement global
        qs = np.linspace(0.0, qm, grid)
        vals = [self.inner(q, budget, eps)[0] for q in qs]
        i = int(np.argmax(vals))
        lo, hi = qs[max(i - 1, 0)], qs[min(i + 1, grid - 1)]
        q, g = golden_max(lambda t: self.inner(t, budget, eps)[0], lo, hi, tol=1e-12)
        if vals[i] > g:
            q, g = qs[i], vals[i]
        _, Xp = self.inner(q, budget, eps)
        if q >= 1.0:
            Xpp = 1 - eps
        else:
            Xpp = min(1.0, max(-1.0, (1 - eps - q * Xp) / (1 - q)))
        return AsymptoticWitness(float(q), float(Xp), float(Xpp), float(g))


def g_asymptotic(K: int, Theta: float, gamma: float, eps: float) -> AsymptoticWitness:
    return AsymptoticProblem(K, Theta).solve(gamma, eps)
