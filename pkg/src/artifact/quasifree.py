"""Fermionic reduced densities, generalized densities and Bogoliubov maps.

Conventions: gamma[x, y] = <a*_y a_x>, alpha[x, y] = <a_y a_x>, and

    Gamma = [[gamma, alpha], [-conj(alpha), 1 - conj(gamma)]].

The antiunitary J acts on C^n + C^n as (u, v) -> (conj v, conj u), so for a
block matrix X = [[a, b], [c, d]] one has J X J = [[conj d, conj c], [conj b, conj a]].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidConfiguration, NotPure

__all__ = [
    "BdGState",
    "ConstraintReport",
    "STRUCT_TOL",
    "SPECTRAL_TOL",
    "PURITY_TOL",
    "assemble",
    "extract",
    "gamma_vac",
    "j_conj",
    "j_vec",
    "constraint_report",
    "bogoliubov_diagonalize",
    "random_quasifree",
    "random_mixed",
    "random_unitary",
    "random_hermitian",
    "to_snapshot",
    "from_snapshot",
]

STRUCT_TOL = 1e-12
SPECTRAL_TOL = 1e-9
PURITY_TOL = 1e-8


@dataclass(frozen=True)
class BdGState:
    gamma: np.ndarray
    alpha: np.ndarray

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    def check(self, tol: float = STRUCT_TOL) -> "BdGState":
        g, a = self.gamma, self.alpha
        if g.ndim != 2 or g.shape[0] != g.shape[1] or a.shape != g.shape:
            raise InvalidConfiguration(f"bad shapes gamma {g.shape}, alpha {a.shape}")
        if np.abs(g - g.conj().T).max(initial=0.0) > tol:
            raise InvalidConfiguration("gamma is not Hermitian")
        if np.abs(a + a.T).max(initial=0.0) > tol:
            raise InvalidConfiguration("alpha is not antisymmetric")
        return self

    @classmethod
    def vacuum(cls, n: int) -> "BdGState":
        z = np.zeros((n, n), dtype=complex)
        return cls(z, z.copy())

    def __sub__(self, other: "BdGState") -> "BdGState":
        return BdGState(self.gamma - other.gamma, self.alpha - other.alpha)

    def __add__(self, other: "BdGState") -> "BdGState":
        return BdGState(self.gamma + other.gamma, self.alpha + other.alpha)


def assemble(state: BdGState, check: bool = True) -> np.ndarray:
    if check:
        state.check()
    g, a = state.gamma, state.alpha
    n = g.shape[0]
    return np.block([[g, a], [-a.conj(), np.eye(n) - g.conj()]])


def extract(Gamma: np.ndarray) -> BdGState:
    n = Gamma.shape[0] // 2
    return BdGState(Gamma[:n, :n].copy(), Gamma[:n, n:].copy())


def gamma_vac(n: int) -> np.ndarray:
    return np.diag(np.r_[np.zeros(n), np.ones(n)]).astype(complex)


def j_conj(X: np.ndarray) -> np.ndarray:
    """J X J for a 2n x 2n matrix X."""
    n = X.shape[0] // 2
    a, b, c, d = X[:n, :n], X[:n, n:], X[n:, :n], X[n:, n:]
    return np.block([[d.conj(), c.conj()], [b.conj(), a.conj()]])


def j_vec(W: np.ndarray) -> np.ndarray:
    """J applied to the columns of W (shape 2n x m)."""
    n = W.shape[0] // 2
    return np.concatenate([W[n:].conj(), W[:n].conj()], axis=0)


@dataclass(frozen=True)
class ConstraintReport:
    block_residual: float
    hermiticity_residual: float
    positivity_violation: float
    purity_defect: float
    quasifree_residual_1: float
    quasifree_residual_2: float


def constraint_report(Gamma: np.ndarray) -> ConstraintReport:
    Gamma = np.asarray(Gamma)
    if Gamma.ndim != 2 or Gamma.shape[0] != Gamma.shape[1] or Gamma.shape[0] % 2:
        raise InvalidConfiguration(f"Gamma must be 2n x 2n, got {Gamma.shape}")
    n = Gamma.shape[0] // 2
    herm = np.linalg.norm(Gamma - Gamma.conj().T)
    block = np.linalg.norm(Gamma + j_conj(Gamma) - np.eye(2 * n))
    w = np.linalg.eigvalsh(0.5 * (Gamma + Gamma.conj().T))
    pos = max(0.0, -w[0], w[-1] - 1.0)
    purity = np.trace(Gamma @ Gamma - Gamma).real
    g, a = Gamma[:n, :n], Gamma[:n, n:]
    q1 = np.linalg.norm(g @ g - g - a @ a.conj())
    q2 = np.linalg.norm(a.conj() @ g - g.conj() @ a.conj())
    return ConstraintReport(float(block), float(herm), float(pos), float(purity),
                            float(q1), float(q2))


def bogoliubov_diagonalize(Gamma: np.ndarray, tol: float = PURITY_TOL) -> np.ndarray:
    """Unitary V = [[u, conj v], [v, conj u]] with V* Gamma V = Gamma_vac.

    The first n columns span ker Gamma. A deterministic basis is obtained by
    choosing the n columns of the kernel projector with the largest overlap
    (column-pivoted QR), keeping them in index order and orthonormalizing
    them. The last n columns are J of the first n.
    """
    Gamma = np.asarray(Gamma)
    rep = constraint_report(Gamma)
    if abs(rep.purity_defect) > tol:
        raise NotPure(f"purity defect {rep.purity_defect:.3e} exceeds {tol:.1e}")
    n = Gamma.shape[0] // 2
    w, U = np.linalg.eigh(0.5 * (Gamma + Gamma.conj().T))
    U0 = U[:, w < 0.5]
    if U0.shape[1] != n:
        raise NotPure(f"kernel of Gamma has dimension {U0.shape[1]}, expected {n}")
    P0 = U0 @ U0.conj().T
    _, piv = sla.qr(P0, pivoting=True, mode="r")
    cols = np.sort(piv[:n])
    W, r = np.linalg.qr(P0[:, cols])
    d = np.diag(r)
    W = W * np.where(d == 0, 1.0, d / np.abs(np.where(d == 0, 1.0, d))).conj()
    return np.concatenate([W, j_vec(W)], axis=1)


# random generators ---------------------------------------------------------

def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (Z + Z.conj().T)


def _random_generator_k(n: int, rng: np.random.Generator, scale: float) -> np.ndarray:
    A = random_hermitian(n, rng, scale)
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    B = scale * 0.5 * (Z - Z.T)
    return np.block([[A, B], [B.conj().T, -A.conj()]])


def _clean(Gamma: np.ndarray) -> BdGState:
    s = extract(Gamma)
    g = 0.5 * (s.gamma + s.gamma.conj().T)
    a = 0.5 * (s.alpha - s.alpha.T)
    return BdGState(g, a)


def random_quasifree(n: int, seed: int, kind: str = "paired", N: int | None = None,
                     scale: float = 1.0) -> BdGState:
    """Random pure quasifree state on n modes.

    kind="slater" needs N (0 <= N <= n) and gives the projector onto N random
    orthonormal vectors; kind="paired" conjugates Gamma_vac by exp(-iK) with K
    Hermitian and J K J = -K.
    """
    rng = np.random.default_rng(seed)
    if kind == "slater":
        if N is None or not 0 <= N <= n:
            raise InvalidConfiguration(f"slater needs 0 <= N <= n, got N={N!r}, n={n}")
        U = random_unitary(n, rng)[:, :N]
        g = U @ U.conj().T
        g = 0.5 * (g + g.conj().T)
        return BdGState(g, np.zeros((n, n), dtype=complex))
    if kind == "paired":
        V = sla.expm(-1j * _random_generator_k(n, rng, scale))
        return _clean(V @ gamma_vac(n) @ V.conj().T)
    raise InvalidConfiguration(f"unknown kind {kind!r}")


def random_mixed(n: int, seed: int, scale: float = 1.0) -> BdGState:
    """Random state with 0 <= Gamma <= 1 (generically not pure)."""
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.0, 1.0, n)
    V = sla.expm(-1j * _random_generator_k(n, rng, scale))
    D = np.diag(np.r_[lam, 1.0 - lam]).astype(complex)
    return _clean(V @ D @ V.conj().T)


# snapshot format -----------------------------------------------------------

def _pairs(A: np.ndarray) -> list:
    A = np.asarray(A, dtype=complex).ravel()
    return [[float(z.real), float(z.imag)] for z in A]


def _unpairs(data, n: int) -> np.ndarray:
    arr = np.asarray(data, dtype=float).reshape(n * n, 2)
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n)


def to_snapshot(state: BdGState, grid, t: float | None = None) -> dict:
    snap = {"n": int(state.n), "dim": int(grid.dim), "box_length": float(grid.box_length),
            "n_per_dim": int(grid.n_per_dim)}
    if t is not None:
        snap["t"] = float(t)
    snap["gamma"] = _pairs(state.gamma)
    snap["alpha"] = _pairs(state.alpha)
    return snap


def from_snapshot(snap: dict) -> BdGState:
    n = int(snap["n"])
    return BdGState(_unpairs(snap["gamma"], n), _unpairs(snap["alpha"], n))
