"""Periodic lattice discretization of the one-particle space.

Positions are integer coordinates x in {0, ..., n_per_dim-1}^dim with spacing
box_length / n_per_dim; the flat mode index is the C-order ravel of x. Momenta
follow the FFT convention (negative frequencies in the upper half), and the
transform matrix is the unitary ("ortho") DFT. Units: hbar = 1, 2m = 1, so the
kinetic symbol is |k|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidConfiguration

__all__ = [
    "Grid",
    "PairPotential",
    "NormReport",
    "build_grid",
    "build_kinetic",
    "build_multiplier",
    "fourier_multiplier",
    "derivatives",
    "make_potential",
    "potential_from_values",
    "compute_cv",
    "mean_field_ops",
    "calv",
    "pi_v",
    "spectral_projector",
    "trace_norm",
    "hs_norm",
    "h1_kernel",
    "norms",
    "pair_norm",
    "z_norm",
]


@dataclass(frozen=True)
class Grid:
    n_per_dim: int
    dim: int
    box_length: float

    @property
    def n(self) -> int:
        return self.n_per_dim**self.dim

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_per_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_per_dim,) * self.dim

    @cached_property
    def positions(self) -> np.ndarray:
        """Integer coordinates, shape (n, dim)."""
        idx = np.indices(self.shape).reshape(self.dim, -1).T
        return np.ascontiguousarray(idx)

    @cached_property
    def momenta(self) -> np.ndarray:
        """Momentum vectors, shape (n, dim)."""
        k1 = 2 * np.pi * np.fft.fftfreq(self.n_per_dim, d=self.spacing)
        grids = np.meshgrid(*([k1] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.momenta**2, axis=1)

    @cached_property
    def dft(self) -> np.ndarray:
        """Unitary DFT matrix F with F[k, x] = exp(-i k.x) / sqrt(n)."""
        f1 = np.fft.fft(np.eye(self.n_per_dim), axis=0, norm="ortho")
        F = np.ones((1, 1), dtype=complex)
        for _ in range(self.dim):
            F = np.kron(F, f1)
        return F

    def displacement_index(self) -> np.ndarray:
        """Flat index of the periodic displacement x - y, shape (n, n)."""
        pos = self.positions
        d = (pos[:, None, :] - pos[None, :, :]) % self.n_per_dim
        return np.ravel_multi_index(tuple(np.moveaxis(d, -1, 0)), self.shape)

    def torus_distance(self) -> np.ndarray:
        """Minimal-image length |r| of every displacement r, shape (n,)."""
        r = np.minimum(self.positions, self.n_per_dim - self.positions)
        return self.spacing * np.sqrt(np.sum(r.astype(float) ** 2, axis=1))


def build_grid(n_per_dim: int, dim: int = 1, box_length: float = 2 * np.pi) -> Grid:
    if int(n_per_dim) != n_per_dim or n_per_dim < 2:
        raise InvalidConfiguration(f"n_per_dim must be an integer >= 2, got {n_per_dim!r}")
    if dim not in (1, 2, 3):
        raise InvalidConfiguration(f"dim must be 1, 2 or 3, got {dim!r}")
    if not np.isfinite(box_length) or box_length <= 0:
        raise InvalidConfiguration(f"box_length must be positive, got {box_length!r}")
    return Grid(int(n_per_dim), int(dim), float(box_length))


def fourier_multiplier(grid: Grid, symbol: np.ndarray) -> np.ndarray:
    """Position-space matrix of the operator diagonal in momentum space."""
    F = grid.dft
    return F.conj().T @ (symbol[:, None] * F)


def _real_if_even(A: np.ndarray) -> np.ndarray:
    # even symbols have real kernels; drop the rounding-level imaginary part
    return np.ascontiguousarray(A.real)


def build_kinetic(grid: Grid) -> np.ndarray:
    """h = -Laplacian, spectral definition."""
    return _real_if_even(fourier_multiplier(grid, grid.k2))


def build_multiplier(grid: Grid, power: float = 1.0) -> np.ndarray:
    """M^power with M = (1 - Laplacian)^(1/2)."""
    return _real_if_even(fourier_multiplier(grid, (1.0 + grid.k2) ** (0.5 * power)))


def derivatives(grid: Grid, over_m: bool = False) -> list[np.ndarray]:
    """Spectral derivatives d_j = multiplier i k_j (optionally d_j / M)."""
    out = []
    for j in range(grid.dim):
        sym = 1j * grid.momenta[:, j]
        if over_m:
            sym = sym / np.sqrt(1.0 + grid.k2)
        out.append(fourier_multiplier(grid, sym))
    return out


@dataclass(frozen=True)
class PairPotential:
    """Pair potential V(r) sampled on lattice displacements r."""

    grid: Grid
    values: np.ndarray
    name: str = "custom"
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(self.grid.n)
        neg = self.grid.displacement_index()[0]  # index of (0 - r) mod n
        if not np.array_equal(vals, vals[neg]):
            raise InvalidConfiguration("pair potential must satisfy V(-r) = V(r)")
        vals.setflags(write=False)
        mat = vals[self.grid.displacement_index()]
        mat.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "matrix", mat)

    @property
    def is_even(self) -> bool:
        return True

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)


def potential_from_values(grid: Grid, values, name: str = "custom") -> PairPotential:
    return PairPotential(grid, np.asarray(values, dtype=float), name)


def make_potential(grid: Grid, profile: str, amplitude: float = 1.0,
                   range_: float = 1.0, a: float | None = None) -> PairPotential:
    """Lattice-sampled closed-form profiles.

    zero, onsite (amplitude at r = 0), gaussian exp(-|r|^2/range^2),
    yukawa exp(-|r|/range)/sqrt(|r|^2+a^2), coulomb_regularized 1/sqrt(|r|^2+a^2).
    The softening length a defaults to one lattice spacing.
    """
    r = grid.torus_distance()
    if a is None:
        a = grid.spacing
    if profile == "zero":
        vals = np.zeros(grid.n)
    elif profile == "onsite":
        vals = np.zeros(grid.n)
        vals[0] = amplitude
    elif profile == "gaussian":
        vals = amplitude * np.exp(-(r / range_) ** 2)
    elif profile == "yukawa":
        if a <= 0:
            raise InvalidConfiguration("softening length a must be positive")
        vals = amplitude * np.exp(-r / range_) / np.sqrt(r**2 + a**2)
    elif profile == "coulomb_regularized":
        if a <= 0:
            raise InvalidConfiguration("softening length a must be positive")
        vals = amplitude / np.sqrt(r**2 + a**2)
    else:
        raise InvalidConfiguration(f"unknown potential profile {profile!r}")
    return PairPotential(grid, vals, profile)


def _vmat(V) -> np.ndarray:
    return V.matrix if isinstance(V, PairPotential) else np.asarray(V)


def compute_cv(V: PairPotential, M: np.ndarray) -> float:
    """Smallest C_V with V^2 <= C_V^2 M^2 on the lattice."""
    Minv = np.linalg.inv(M)
    Minv = 0.5 * (Minv + Minv.conj().T)
    A = Minv @ np.diag(np.asarray(V.values) ** 2) @ Minv
    w = np.linalg.eigvalsh(0.5 * (A + A.conj().T))
    return float(np.sqrt(max(w[-1], 0.0)))


def mean_field_ops(gamma, alpha, V):
    """Direct term V*rho_gamma (as a diagonal matrix), exchange X_V(gamma), pairing field Pi_V(alpha)."""
    Vm = _vmat(V)
    gamma = np.asarray(gamma)
    alpha = np.asarray(alpha)
    if gamma.shape != Vm.shape or alpha.shape != Vm.shape:
        raise InvalidConfiguration(
            f"shape mismatch: gamma {gamma.shape}, alpha {alpha.shape}, V {Vm.shape}")
    direct = np.diag(Vm @ np.diagonal(gamma))
    return direct, Vm * gamma, Vm * alpha


def calv(gamma, V) -> np.ndarray:
    """Mean-field operator V*rho_gamma - X_V(gamma)."""
    Vm = _vmat(V)
    return np.diag(Vm @ np.diagonal(gamma)) - Vm * gamma


def pi_v(alpha, V) -> np.ndarray:
    return _vmat(V) * alpha


def spectral_projector(h: np.ndarray, cutoff: float) -> np.ndarray:
    """Spectral projector 1(h < cutoff)."""
    w, U = np.linalg.eigh(h)
    Us = U[:, w < cutoff]
    return Us @ Us.conj().T


# norms ---------------------------------------------------------------------

def trace_norm(A) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(A), compute_uv=False)))


def hs_norm(A) -> float:
    return float(np.linalg.norm(A))


def h1_kernel(A, grid: Grid) -> float:
    """H^1 norm of the integral kernel A(x, y) on the doubled lattice."""
    F = grid.dft
    Ahat = F @ np.asarray(A) @ F.T
    w = 1.0 + grid.k2[:, None] + grid.k2[None, :]
    return float(np.sqrt(np.sum(w * np.abs(Ahat) ** 2)))


@dataclass(frozen=True)
class NormReport:
    s1: float
    s2: float
    h1_kernel: float
    y1: float
    y2: float
    z1: float


def norms(gamma, alpha, M: np.ndarray, grid: Grid) -> NormReport:
    """s1, s2 refer to gamma; h1_kernel = y2 refers to alpha."""
    gamma = np.asarray(gamma)
    h1 = h1_kernel(alpha, grid)
    return NormReport(
        s1=trace_norm(gamma),
        s2=hs_norm(gamma),
        h1_kernel=h1,
        y1=trace_norm(M @ gamma @ M),
        y2=h1,
        z1=trace_norm(M @ gamma) + trace_norm(gamma @ M),
    )


def pair_norm(gamma, alpha) -> float:
    """Norm on S1 x S2."""
    return trace_norm(gamma) + hs_norm(alpha)


def z_norm(gamma, alpha, M: np.ndarray, grid: Grid) -> float:
    return trace_norm(M @ gamma) + trace_norm(gamma @ M) + h1_kernel(alpha, grid)
