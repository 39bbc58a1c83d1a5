"""Phase-error auxiliary functions and the good-subspace concave envelope."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


def f_phi(phi: float, Theta: float, x):
    """``cos(phi)(cos^2 Theta - x) + sin(2 Theta)|sin(phi)| sqrt(1 - x^2) / 2``.

    Accepts scalars or arrays; ``|x| > 1`` raises.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1 + 1e-12):
        raise ValueError("f_phi defined only for |x| <= 1")
    xa = np.clip(xa, -1.0, 1.0)
    val = (math.cos(phi) * (math.cos(Theta) ** 2 - xa)
           + 0.5 * math.sin(2 * Theta) * abs(math.sin(phi)) * np.sqrt(1 - xa * xa))
    return float(val) if np.ndim(x) == 0 else val


@dataclass(frozen=True)
class _Member:
    """``a (c2 - x) + A sqrt(1 - x^2)`` with ``A >= 0``."""

    a: float
    A: float
    c2: float

    def value(self, x: float) -> float:
        return self.a * (self.c2 - x) + self.A * math.sqrt(max(0.0, 1 - x * x))

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.a * (self.c2 - x) + self.A * np.sqrt(np.clip(1 - x * x, 0.0, None))

    def tangent(self, s: float) -> float:
        """Point where the slope equals ``s`` (support point of the conjugate)."""
        if self.A == 0.0:
            return 1.0 if s < -self.a else -1.0
        u = -(s + self.a) / self.A
        if math.isinf(u):
            return math.copysign(1.0, u)
        return u / math.sqrt(1 + u * u)

    def conjugate(self, s: float) -> float:
        """``max_x value(x) - s x`` over ``[-1, 1]``."""
        t = self.tangent(s)
        return self.value(t) - s * t


class GoodEnvelope:
    """Upper concave envelope of ``max_m f_{(K-1-2m) Theta}`` on ``[-1, 1]``.

    Stored as ordered pieces; each is either an exact member curve or a
    bitangent line segment.
    """

    def __init__(self, K: int, Theta: float):
        if K < 1:
            raise ValueError("K must be >= 1")
        if math.cos((K - 1) * Theta) <= 0:
            raise ValueError("need cos((K-1) Theta) > 0")
        self.K = K
        self.Theta = Theta
        self.phases = [(K - 1 - 2 * m) * Theta for m in range((K - 1) // 2 + 1)]
        c2 = math.cos(Theta) ** 2
        s2 = 0.5 * math.sin(2 * Theta)
        self.members = [_Member(math.cos(p), s2 * abs(math.sin(p)), c2) for p in self.phases]
        self._build()

    def _winner(self, s: float) -> int:
        vals = [m.conjugate(s) for m in self.members]
        best = max(vals)
        return next(i for i, v in enumerate(vals) if v >= best - 1e-15)

    def _build(self):
        # slopes from +inf to -inf; tangent points sweep from x=-1 to x=+1
        tau = np.linspace(0, 1, 4003)[1:-1]
        slopes = np.tan(np.pi * (0.5 - tau))
        winners = [self._winner(s) for s in slopes]
        runs = [(winners[0], math.inf)]  # (member, slope where its reign starts)
        for i in range(1, len(slopes)):
            if winners[i] != runs[-1][0]:
                a, b = runs[-1][0], winners[i]
                ma, mb = self.members[a], self.members[b]
                s_star = brentq(lambda s: ma.conjugate(s) - mb.conjugate(s),
                                slopes[i], slopes[i - 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
                runs.append((b, s_star))
        pieces = []  # (x_left, x_right, kind, payload)
        for r, (mi, s_hi) in enumerate(runs):
            s_lo = runs[r + 1][1] if r + 1 < len(runs) else -math.inf
            m = self.members[mi]
            xl, xr = m.tangent(s_hi), m.tangent(s_lo)
            if xr > xl:
                pieces.append((xl, xr, "member", mi))
            if r + 1 < len(runs):
                nb = self.members[runs[r + 1][0]]
                s_star = s_lo
                x0, x1 = m.tangent(s_star), nb.tangent(s_star)
                if x1 > x0:
                    pieces.append((x0, x1, "line", (s_star, m.conjugate(s_star))))
        self.pieces = pieces
        self._lefts = [p[0] for p in pieces]

    @property
    def breakpoints(self) -> list[float]:
        return self._lefts[1:]

    def __call__(self, x: float) -> float:
        if not -1 - 1e-12 <= x <= 1 + 1e-12:
            raise ValueError("envelope defined only on [-1, 1]")
        x = min(1.0, max(-1.0, x))
        i = max(0, bisect.bisect_right(self._lefts, x) - 1)
        _, _, kind, payload = self.pieces[i]
        if kind == "member":
            return self.members[payload].value(x)
        s, c = payload
        return s * x + c

    def evaluate(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
        idx = np.clip(np.searchsorted(self._lefts, x, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty_like(x)
        for i, (_, _, kind, payload) in enumerate(self.pieces):
            sel = idx == i
            if not sel.any():
                continue
            if kind == "member":
                out[sel] = self.members[payload].values(x[sel])
            else:
                s, c = payload
                out[sel] = s * x[sel] + c
        return out

    def member_values(self, x) -> np.ndarray:
        """Array of shape ``(n_members, len(x))``."""
        x = np.asarray(x, dtype=float)
        return np.array([m.values(x) for m in self.members])
