"""Hilbert-space objects of the (M, L) polarization protocols.

Basis conventions used everywhere in the package:

* single photon space B: ``(|-1>, |+1>)`` (circular polarizations),
* virtual space A: ``(|0>, |2>, ..., |2(M-1)>)``,
* joint space A (x) B with A as the slow index, so ``|2k>_A |m>_B`` sits at
  row ``2k + (0 if m == -1 else 1)``.

The qubit subspace ``H_k`` is spanned by ``|0>_k = |2k>|+1>`` and
``|1>_k = |2(k+1 mod M)>|-1>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# exact algebraic identities
ATOL_EXACT = 1e-12
# closed-form regression, allows accumulation over the j-sums
ATOL_CLOSED = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class ProtocolParams:
    """The ``(M, L)`` protocol: ``M`` polarization angles, bit separation ``L``."""

    M: int
    L: int
    double_even: bool = False

    def __post_init__(self):
        if int(self.M) != self.M or int(self.L) != self.L:
            raise ValueError("M and L must be integers")
        if self.M < 3:
            raise ValueError(f"M must be >= 3, got {self.M}")
        if self.L < 1 or 2 * self.L > self.M:
            raise ValueError(f"need 1 <= L and 2L <= M, got M={self.M}, L={self.L}")
        if self.double_even and self.M % 2:
            raise ValueError("even-M doubling requires even M")

    @property
    def theta(self) -> float:
        """Bit separation angle pi L / M."""
        return math.pi * self.L / self.M

    def angles(self) -> np.ndarray:
        """The angle set {pi l / M : l = 0..M-1}."""
        return np.pi * np.arange(self.M) / self.M


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: np.ndarray  # shape (M, 2, 2)
    leakage: float

    def __post_init__(self):
        if self.blocks.ndim != 3 or self.blocks.shape[1:] != (2, 2):
            raise ValueError("blocks must have shape (M, 2, 2)")
        if self.leakage < 0:
            raise ValueError("leakage must be nonnegative")


@dataclass
class ClosedFormReport:
    """Deviation of brute-force blocks from the closed forms."""

    entries: list = field(default_factory=list)  # (operator, phi, k, deviation)
    leakages: list = field(default_factory=list)  # (operator, phi, leakage)
    tol: float = ATOL_CLOSED
    leak_tol: float = ATOL_EXACT

    @property
    def max_deviation(self) -> float:
        return max((e[3] for e in self.entries), default=0.0)

    @property
    def max_leakage(self) -> float:
        return max((e[2] for e in self.leakages), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol and self.max_leakage <= self.leak_tol


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def is_hermitian(op: np.ndarray, atol: float = ATOL_EXACT) -> bool:
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= atol)


def is_psd(op: np.ndarray, atol: float = ATOL_EXACT) -> bool:
    return is_hermitian(op, atol) and bool(np.linalg.eigvalsh(op).min() >= -atol)


def xi_state_A(params: ProtocolParams, theta: float) -> np.ndarray:
    """Virtual-system state with amplitude ``M^-1/2 exp(-2ik theta)`` on ``|2k>``."""
    k = np.arange(params.M)
    return np.exp(-2j * k * theta) / math.sqrt(params.M)


def xi_bar_state_B(theta: float) -> np.ndarray:
    """Photon state orthogonal to linear polarization ``theta``.

    ``(e^{i theta}|-1> - e^{-i theta}|+1>) / sqrt(2)``.
    """
    return np.array([np.exp(1j * theta), -np.exp(-1j * theta)]) / math.sqrt(2)


def polarization_state_B(theta: float) -> np.ndarray:
    """Single photon linearly polarized at angle ``theta``."""
    return np.array([np.exp(1j * theta), np.exp(-1j * theta)]) / math.sqrt(2)


def alice_povm(params: ProtocolParams) -> dict[tuple[int, int], np.ndarray]:
    """Alice's measurement ``P(|xi_theta>)/2`` with ``theta = a Theta + pi j / M``."""
    out = {}
    for a in (0, 1):
        for j in range(params.M):
            th = a * params.theta + math.pi * j / params.M
            out[(a, j)] = projector(xi_state_A(params, th)) / 2
    return out


def alice_povm_x(params: ProtocolParams, phi: float) -> dict[tuple[int, int], np.ndarray]:
    """Alice's alternative measurement used to predict Bob's x-basis outcome."""
    out = {}
    for a in (0, 1):
        for j in range(params.M):
            v = (np.exp(1j * phi) * xi_state_A(params, math.pi * j / params.M)
                 - (-1) ** a * np.exp(-1j * phi)
                 * xi_state_A(params, params.theta + math.pi * j / params.M))
            out[(a, j)] = projector(v) / 4
    return out


def bob_povm(params: ProtocolParams, j: int, b: int) -> np.ndarray:
    """Conclusive POVM element of Bob for announced ``j`` and bit ``b``."""
    if not 0 <= j < params.M:
        raise ValueError(f"j out of range: {j}")
    if b not in (0, 1):
        raise ValueError(f"b must be 0 or 1, got {b}")
    th = math.pi * j / params.M + (params.theta if b == 0 else 0.0)
    return projector(xi_bar_state_B(th)) / params.M


def filter_op(params: ProtocolParams, j: int) -> np.ndarray:
    """Kraus operator from the photon space onto the virtual qubit D.

    Rows are the D z-basis ``(|0_z>, |1_z>)``.
    """
    if not 0 <= j < params.M:
        raise ValueError(f"j out of range: {j}")
    th = params.theta
    shift = math.pi * j / params.M
    zero_x = np.array([1, 1], dtype=complex) / math.sqrt(2)
    one_x = np.array([1, -1], dtype=complex) / math.sqrt(2)
    bra1 = xi_bar_state_B((th + math.pi) / 2 + shift).conj()
    bra0 = xi_bar_state_B(th / 2 + shift).conj()
    return math.sqrt(2 / params.M) * (
        math.sin(th / 2) * np.outer(one_x, bra1) + math.cos(th / 2) * np.outer(zero_x, bra0)
    )


def bob_povm_x(params: ProtocolParams, j: int, b: int) -> np.ndarray:
    """Bob's hypothetical x-basis outcome after the filter."""
    F = filter_op(params, j)
    bx = np.array([1, (-1) ** b], dtype=complex) / math.sqrt(2)
    return F.conj().T @ projector(bx) @ F


def build_R(params: ProtocolParams, which: str, phi: float = 0.0) -> np.ndarray:
    """Rotation-invariant event operator on A (x) B, summed over ``j``.

    ``which`` is one of ``"con"`` (conclusive), ``"bit"`` (bit error) or
    ``"ph"`` (phase error; depends on ``phi``).
    """
    M = params.M
    R = np.zeros((2 * M, 2 * M), dtype=complex)
    if which in ("con", "bit"):
        A = alice_povm(params)
        for j in range(M):
            B0, B1 = bob_povm(params, j, 0), bob_povm(params, j, 1)
            if which == "con":
                R += np.kron(A[(0, j)] + A[(1, j)], B0 + B1)
            else:
                R += np.kron(A[(0, j)], B1) + np.kron(A[(1, j)], B0)
    elif which == "ph":
        A = alice_povm_x(params, phi)
        for j in range(M):
            R += (np.kron(A[(0, j)], bob_povm_x(params, j, 1))
                  + np.kron(A[(1, j)], bob_povm_x(params, j, 0)))
    else:
        raise ValueError(f"unknown operator {which!r}")
    return R


def block_indices(M: int, k: int) -> tuple[int, int]:
    """Rows of ``|0>_k`` and ``|1>_k`` in the A (x) B ordering."""
    return 2 * k + 1, 2 * ((k + 1) % M)


def block_decompose(R: np.ndarray, params: ProtocolParams) -> BlockDecomposition:
    M = params.M
    R = np.asarray(R)
    if R.shape != (2 * M, 2 * M):
        raise ValueError(f"expected a {2 * M}x{2 * M} operator, got {R.shape}")
    blocks = np.empty((M, 2, 2), dtype=complex)
    mask = np.ones(R.shape, dtype=bool)
    for k in range(M):
        idx = block_indices(M, k)
        blocks[k] = R[np.ix_(idx, idx)]
        mask[np.ix_(idx, idx)] = False
    leakage = float(np.max(np.abs(R[mask]), initial=0.0))
    return BlockDecomposition(blocks, leakage)


def rotation_unitary(params: ProtocolParams, theta: float) -> np.ndarray:
    """Joint rotation ``exp(-i theta J)`` with J the total angular momentum.

    Phase ``e^{-2ik theta}`` on ``|2k>_A`` and ``e^{-im theta}`` on ``|m>_B``.
    """
    ua = np.exp(-2j * np.arange(params.M) * theta)
    ub = np.exp(-1j * np.array([-1, 1]) * theta)
    return np.diag(np.kron(ua, ub))


def closed_form_blocks(params: ProtocolParams, which: str, phi: float = 0.0) -> np.ndarray:
    M, th = params.M, params.theta
    c2 = math.cos(th) ** 2
    con = np.array([(ID2 - c2 * PAULI_X) / M] * M)
    if which == "con":
        return con
    if which == "bit":
        return np.array([(ID2 - PAULI_X) / (2 * M)] * M)
    if which == "ph":
        phi_p = phi + th / 2
        out = np.empty((M, 2, 2), dtype=complex)
        for k in range(M):
            ang = 2 * (k * th + phi_p)
            out[k] = (math.cos(ang) * (c2 * ID2 - PAULI_X)
                      + 0.5 * math.sin(2 * th) * math.sin(ang) * PAULI_Z) / (2 * M) + con[k] / 2
        return out
    raise ValueError(f"unknown operator {which!r}")


def verify_closed_forms(params: ProtocolParams, phi_samples: Sequence[float],
                        perturb: float = 0.0) -> ClosedFormReport:
    """Compare brute-force operators against the block closed forms.

    ``perturb`` adds a constant to one matrix element of every brute-force
    operator; it exists to check that the comparison actually detects errors.
    """
    report = ClosedFormReport()
    jobs = [("con", 0.0), ("bit", 0.0)] + [("ph", float(p)) for p in phi_samples]
    for which, phi in jobs:
        R = build_R(params, which, phi)
        if perturb:
            i0, i1 = block_indices(params.M, 0)
            R[i0, i0] += perturb
        dec = block_decompose(R, params)
        ref = closed_form_blocks(params, which, phi)
        for k in range(params.M):
            dev = float(np.max(np.abs(dec.blocks[k] - ref[k])))
            report.entries.append((which, phi, k, dev))
        report.leakages.append((which, phi, dec.leakage))
    return report
