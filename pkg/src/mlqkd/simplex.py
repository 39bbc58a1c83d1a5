"""Small dense two-phase simplex with Bland's rule.

Solves ``max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``. This is the
revised form: every iteration re-solves with the current basis matrix from the
original data, so round-off does not accumulate across pivots. Problems here
have at most a dozen rows, which keeps each solve trivial.
"""

from __future__ import annotations

import numpy as np

OPT_TOL = 1e-9
# smaller column entries are treated as rounding noise, never pivoted on
PIV_TOL = 1e-9
FEAS_TOL = 1e-9
TIE_TOL = 1e-12


class Infeasible(ValueError):
    """No point satisfies the constraints."""


class Unbounded(ValueError):
    """The objective is unbounded above on the feasible set."""


def _iterate(A: np.ndarray, b: np.ndarray, c: np.ndarray, basis: list[int], ncols: int) -> None:
    """Maximize ``c.x`` over ``A x = b, x >= 0`` from a feasible ``basis`` (in place).

    Only the first ``ncols`` columns may enter.
    """
    m = len(basis)
    seen = set()
    for _ in range(50 * (ncols + m) + 100):
        key = tuple(sorted(basis))
        if key in seen:
            return  # only round-off can revisit a basis; the current one is feasible
        seen.add(key)
        B = A[:, basis]
        xB = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, c[basis])
        d = c[:ncols] - A[:, :ncols].T @ y
        # reduced costs are only as accurate as the terms they are built from
        noise = OPT_TOL * (1 + np.abs(c[:ncols]) + np.abs(A[:, :ncols]).T @ np.abs(y))
        in_basis = set(basis)
        cand = [j for j in np.flatnonzero(d > noise) if j not in in_basis]
        if not cand:
            return
        col = int(cand[0])  # Bland: lowest index
        u = np.linalg.solve(B, A[:, col])
        pos = u > PIV_TOL
        if not pos.any():
            raise Unbounded("objective unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xB[pos], 0.0) / u[pos]
        best = ratios.min()
        # a tie may overshoot another row by at most ~TIE_TOL, whatever the size of u
        ties = np.flatnonzero((ratios - best) * u[pos].max() <= TIE_TOL)
        row = int(min(ties, key=lambda r: basis[r]))
        basis[row] = col
    raise RuntimeError("simplex iteration limit reached")


def linprog_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None):
    """Return ``(x, value)`` of the maximum; raise :class:`Infeasible`/:class:`Unbounded`."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # columns: x (n), slacks (m_ub), artificials (m)
    nv = n + m_ub
    A = np.zeros((m, nv + m))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:nv] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1
    b = np.where(neg, -b, b)
    A[:, nv:] = np.eye(m)
    if m == 0:
        if np.any(c > 0):
            raise Unbounded("objective unbounded")
        return np.zeros(n), 0.0

    # slack rows with b >= 0 start from their slack; the rest need an artificial
    basis = [n + i if i < m_ub and not neg[i] else nv + i for i in range(m)]
    c1 = np.zeros(nv + m)
    c1[nv:] = -1.0
    _iterate(A, b, c1, basis, nv)
    xB = np.linalg.solve(A[:, basis], b)
    if c1[basis] @ xB < -FEAS_TOL * (1 + np.abs(b).max()):
        raise Infeasible("constraints cannot be satisfied")

    # swap remaining artificials for real columns, or drop their rows as redundant
    rows = list(range(m))
    r = 0
    while r < len(basis):
        if basis[r] < nv:
            r += 1
            continue
        B = A[np.ix_(rows, basis)]
        row_r = np.linalg.solve(B.T, np.eye(len(basis))[r]) @ A[rows, :nv]
        row_r[[j for j in basis if j < nv]] = 0.0
        j = int(np.argmax(np.abs(row_r)))
        if abs(row_r[j]) > PIV_TOL:
            basis[r] = j
            r += 1
        else:
            art_row = basis[r] - nv
            rows.remove(art_row)
            del basis[r]

    A2, b2 = A[rows][:, :nv], b[rows]
    c2 = np.zeros(nv)
    c2[:n] = c
    x = np.zeros(nv)
    if basis:
        _iterate(A2, b2, c2, basis, nv)
        x[basis] = np.linalg.solve(A2[:, basis], b2)
    elif np.any(c > 0):
        raise Unbounded("objective unbounded")
    x = x[:n]
    scale = 1.0 + max(np.abs(b_ub).max(initial=0.0), np.abs(b_eq).max(initial=0.0))
    if (x.min(initial=0.0) < -FEAS_TOL * scale
            or np.max(A_ub @ x - b_ub, initial=0.0) > FEAS_TOL * scale
            or np.max(np.abs(A_eq @ x - b_eq), initial=0.0) > FEAS_TOL * scale):
        raise Infeasible("solution violates the constraints beyond tolerance")
    x = np.clip(x, 0.0, None)
    return x, float(c @ x)
