"""Exact fermionic Fock-space reference on at most 12 modes.

Jordan-Wigner construction: basis state index b has mode j occupied when bit
(n-1-j) of b is set, i.e. mode 0 is the leftmost tensor factor, and

    a_j = Z x ... x Z x sigma^- x 1 x ... x 1   (j parity factors).

Generalized operators: A_i = a_i for i < n and A_i = a*_{i-n} for i >= n, so
that Gamma[i, j] = <A_j* A_i> reproduces [[gamma, alpha], [-conj alpha, 1 - conj gamma]].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DegenerateGroundState, InvalidConfiguration, NotPure, TooManyModes
from .geometry import proj_quasifree
from .lattice import _vmat
from .quasifree import BdGState, PURITY_TOL, assemble, constraint_report

__all__ = [
    "MAX_MODES",
    "FockOperatorSet",
    "build_car",
    "build_h_many_body",
    "quasifree_vector",
    "reduce",
    "exact_evolve",
    "wick_check",
    "wick_sweep",
    "mb_tangent",
    "ReductionReport",
    "verify_reduction_theorem",
    "vacuum",
]

MAX_MODES = 12
DENSE_MODES = 8


@dataclass(frozen=True)
class FockOperatorSet:
    n_modes: int
    annihilators: tuple

    @cached_property
    def creators(self) -> tuple:
        return tuple(a.conj().T.tocsr() for a in self.annihilators)

    @cached_property
    def number(self) -> sp.csr_matrix:
        occ = np.array([bin(b).count("1") for b in range(self.dim)], dtype=float)
        return sp.diags(occ).tocsr()

    @property
    def dim(self) -> int:
        return 2**self.n_modes

    def generalized(self) -> list:
        """A_0..A_{2n-1}: annihilators followed by creators."""
        return list(self.annihilators) + list(self.creators)


def build_car(n: int) -> FockOperatorSet:
    if n > MAX_MODES:
        raise TooManyModes(f"n = {n} exceeds the {MAX_MODES}-mode guard")
    if n < 1:
        raise InvalidConfiguration("need at least one mode")
    lower = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    z = sp.diags([1.0, -1.0])
    eye = sp.identity(2, format="csr")
    ops = []
    for j in range(n):
        factors = [z] * j + [lower] + [eye] * (n - j - 1)
        op = factors[0]
        for f in factors[1:]:
            op = sp.kron(op, f, format="csr")
        ops.append(op.astype(complex).tocsr())
    return FockOperatorSet(n, tuple(ops))


def vacuum(ops: FockOperatorSet) -> np.ndarray:
    psi = np.zeros(ops.dim, dtype=complex)
    psi[0] = 1.0
    return psi


def build_h_many_body(ops: FockOperatorSet, h, V) -> sp.csr_matrix:
    """dGamma(h) + 1/2 sum_{x,y} V(x-y) a*_x a*_y a_y a_x."""
    n = ops.n_modes
    Vm = _vmat(V)
    if np.shape(h) != (n, n) or Vm.shape != (n, n):
        raise InvalidConfiguration("dimension mismatch between oracle and one-body data")
    a, c = ops.annihilators, ops.creators
    H = sp.csr_matrix((ops.dim, ops.dim), dtype=complex)
    for x in range(n):
        for y in range(n):
            if h[x, y] != 0:
                H = H + h[x, y] * (c[x] @ a[y])
    nums = [c[x] @ a[x] for x in range(n)]
    for x in range(n):
        for y in range(n):
            if x != y and Vm[x, y] != 0:
                # a*_x a*_y a_y a_x = n_x n_y for x != y; the x = y term vanishes
                H = H + 0.5 * Vm[x, y] * (nums[x] @ nums[y])
    return H.tocsr()


def reduce(psi: np.ndarray, ops: FockOperatorSet):
    """(gamma, alpha, Gamma) with gamma[x,y] = <a*_y a_x>, alpha[x,y] = <a_y a_x>."""
    n = ops.n_modes
    a, c = ops.annihilators, ops.creators
    apsi = [op @ psi for op in a]
    gamma = np.empty((n, n), dtype=complex)
    alpha = np.empty((n, n), dtype=complex)
    for x in range(n):
        for y in range(n):
            gamma[x, y] = np.vdot(apsi[y], apsi[x])          # <a_y psi, a_x psi>
            alpha[x, y] = np.vdot(psi, a[y] @ apsi[x])
    st = BdGState(gamma, alpha)
    return gamma, alpha, assemble(st, check=False)


def quasifree_vector(Gamma: np.ndarray, ops: FockOperatorSet, tol: float = PURITY_TOL,
                     check_tol: float = 1e-10) -> np.ndarray:
    """Fock vector of the pure quasifree state with generalized density Gamma.

    Ground state of Q = 1/2 sum_ij K_ij A_i* A_j with K = 1 - 2 Gamma, which in
    terms of a, a* reads sum (1-2gamma)_xy a*_x a_y - sum (alpha_xy a*_x a*_y + h.c.)
    up to a constant. For pure Gamma the first excitation gap is 2.
    """
    n = ops.n_modes
    rep = constraint_report(Gamma)
    if abs(rep.purity_defect) > tol:
        raise NotPure(f"purity defect {rep.purity_defect:.3e}")
    K = np.eye(2 * n) - 2 * Gamma
    A = ops.generalized()
    Ad = [op.conj().T for op in A]
    Q = sp.csr_matrix((ops.dim, ops.dim), dtype=complex)
    for i in range(2 * n):
        for j in range(2 * n):
            if K[i, j] != 0:
                Q = Q + 0.5 * K[i, j] * (Ad[i] @ A[j])
    if n <= DENSE_MODES:
        w, U = np.linalg.eigh(Q.toarray())
        w, psi = w[:2], U[:, 0]
    else:
        w, U = spla.eigsh(Q, k=2, which="SA", tol=1e-14)
        order = np.argsort(w)
        w, psi = w[order], U[:, order[0]]
    if w[1] - w[0] < 1e-8:
        raise DegenerateGroundState(f"Fock gap {w[1] - w[0]:.3e}")
    # fix the global phase: largest component real positive
    k = int(np.argmax(np.abs(psi)))
    psi = psi * (abs(psi[k]) / psi[k])
    psi = psi / np.linalg.norm(psi)
    g, a, _ = reduce(psi, ops)
    n_ = Gamma.shape[0] // 2
    err = max(np.abs(g - Gamma[:n_, :n_]).max(), np.abs(a - Gamma[:n_, n_:]).max())
    if err > check_tol:
        raise DegenerateGroundState(f"reduce round-trip failed ({err:.3e})")
    return psi


def exact_evolve(psi0: np.ndarray, H, t: float) -> np.ndarray:
    """exp(-iHt) psi0; dense eigendecomposition up to 8 modes, Krylov beyond."""
    dim = psi0.shape[0]
    n = int(round(np.log2(dim)))
    if n > MAX_MODES:
        raise TooManyModes(f"n = {n} exceeds the {MAX_MODES}-mode guard")
    if t == 0:
        return psi0.copy()
    if n <= DENSE_MODES:
        Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
        w, U = np.linalg.eigh(Hd)
        return U @ (np.exp(-1j * t * w) * (U.conj().T @ psi0))
    return spla.expm_multiply(-1j * t * sp.csr_matrix(H), psi0)


def _op(ops: FockOperatorSet, tag: str, mode: int):
    if tag in ("c", "+", "create"):
        return ops.creators[mode]
    if tag in ("a", "-", "annihilate"):
        return ops.annihilators[mode]
    raise InvalidConfiguration(f"unknown operator tag {tag!r}")


def wick_check(psi: np.ndarray, ops: FockOperatorSet, indices):
    """Compare <b1 b2 b3 b4> with <b1b2><b3b4> - <b1b3><b2b4> + <b1b4><b2b3>.

    indices is a 4-tuple of (tag, mode) pairs, tag 'c' for a* and 'a' for a.
    """
    b = [_op(ops, t, m) for t, m in indices]

    def two(i, j):
        return np.vdot(psi, b[i] @ (b[j] @ psi))

    lhs = np.vdot(psi, b[0] @ (b[1] @ (b[2] @ (b[3] @ psi))))
    rhs = two(0, 1) * two(2, 3) - two(0, 2) * two(1, 3) + two(0, 3) * two(1, 2)
    return complex(lhs), complex(rhs), float(abs(lhs - rhs))


def wick_sweep(psi: np.ndarray, ops: FockOperatorSet) -> float:
    """Max Wick gap over all 4-tuples of creation/annihilation operators."""
    n = ops.n_modes
    # precompute b|psi> and two-point tables for speed
    B = [("c", m) for m in range(n)] + [("a", m) for m in range(n)]
    mats = [_op(ops, t, m) for t, m in B]
    m2 = len(B)
    two = np.empty((m2, m2), dtype=complex)
    vec1 = [op @ psi for op in mats]
    for i in range(m2):
        for j in range(m2):
            two[i, j] = np.vdot(psi, mats[i] @ vec1[j])
    vec2 = {}
    for k in range(m2):
        for l in range(m2):
            vec2[k, l] = mats[k] @ vec1[l]
    bra2 = {}
    for i in range(m2):
        for j in range(m2):
            # <psi| b_i b_j = (b_j* b_i* psi)*
            bra2[i, j] = mats[j].conj().T @ (mats[i].conj().T @ psi)
    gap = 0.0
    for i, j, k, l in product(range(m2), repeat=4):
        lhs = np.vdot(bra2[i, j], vec2[k, l])
        rhs = two[i, j] * two[k, l] - two[i, k] * two[j, l] + two[i, l] * two[j, k]
        gap = max(gap, abs(lhs - rhs))
    return float(gap)


def mb_tangent(psi: np.ndarray, H, ops: FockOperatorSet) -> np.ndarray:
    """Xi[i, j] = <psi, [A_j* A_i, -iH] psi>, the many-body derivative of Gamma."""
    A = ops.generalized()
    Hpsi = H @ psi
    X = [op @ psi for op in A]
    Y = [op @ Hpsi for op in A]
    m = len(A)
    Xi = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            # <psi, A_j* A_i H psi> - <psi, H A_j* A_i psi> = <X_j, Y_i> - <Y_j, X_i>
            Xi[i, j] = -1j * (np.vdot(X[j], Y[i]) - np.vdot(Y[j], X[i]))
    return Xi


@dataclass(frozen=True)
class ReductionReport:
    mb_vs_proj: float
    mb_vs_bdg: float
    proj_vs_bdg: float

    @property
    def max_gap(self) -> float:
        return max(self.mb_vs_proj, self.mb_vs_bdg, self.proj_vs_bdg)


def verify_reduction_theorem(Gamma: np.ndarray, h, V, ops: FockOperatorSet | None = None) -> ReductionReport:
    """Three-way comparison of many-body, projected and BdG tangents at Gamma."""
    from .dynamics_fermi import rhs_generalized
    from .quasifree import extract

    n = Gamma.shape[0] // 2
    if ops is None:
        ops = build_car(n)
    psi = quasifree_vector(Gamma, ops)
    H = build_h_many_body(ops, h, V)
    Xi_mb = mb_tangent(psi, H, ops)
    Xi_proj = proj_quasifree(Gamma, Xi_mb)
    Xi_bdg = rhs_generalized(extract(Gamma), h, V)
    return ReductionReport(
        mb_vs_proj=float(np.linalg.norm(Xi_mb - Xi_proj)),
        mb_vs_bdg=float(np.linalg.norm(Xi_mb - Xi_bdg)),
        proj_vs_bdg=float(np.linalg.norm(Xi_proj - Xi_bdg)),
    )
