"""Tangent-space projections for the Dirac-Frenkel principle.

Fermionic quasifree states are parametrized by projections Gamma with the
block condition Gamma + J Gamma J = 1; the tangent projection is the
composition of the projection onto tangents of projections (proj_aux) and
onto the J-antisymmetric affine directions (proj_minus). For bosons only the
normal component is constructed.
"""

from __future__ import annotations

import numpy as np

from .errors import NotBosonicQuasifree, NotProjector, NotPure
from .quasifree import PURITY_TOL, j_conj

__all__ = [
    "proj_nopairing",
    "proj_aux",
    "proj_minus",
    "proj_quasifree",
    "metric_s",
    "bosonic_normal_component",
    "random_bosonic_normal_input",
]

COMPOSE_TOL = 1e-11


def _check_projector(P: np.ndarray, tol: float, exc) -> None:
    res = np.linalg.norm(P @ P - P)
    if res > tol:
        raise exc(f"||P^2 - P|| = {res:.3e} exceeds {tol:.1e}")


def proj_nopairing(gamma: np.ndarray, A: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """gamma A (1-gamma) + (1-gamma) A gamma, the tangent part at a projector."""
    _check_projector(gamma, tol, NotProjector)
    q = np.eye(gamma.shape[0]) - gamma
    return gamma @ A @ q + q @ A @ gamma


def proj_aux(Gamma: np.ndarray, Xi: np.ndarray, tol: float = PURITY_TOL) -> np.ndarray:
    _check_projector(Gamma, tol, NotPure)
    Q = np.eye(Gamma.shape[0]) - Gamma
    return Gamma @ Xi @ Q + Q @ Xi @ Gamma


def proj_minus(Xi: np.ndarray) -> np.ndarray:
    return 0.5 * (Xi - j_conj(Xi))


def proj_quasifree(Gamma: np.ndarray, Xi: np.ndarray, tol: float = PURITY_TOL) -> np.ndarray:
    """Orthogonal projection onto the tangent space of pure quasifree states.

    Both orders of composition are evaluated; they agree when Gamma is a
    projection satisfying the block condition.
    """
    a = proj_minus(proj_aux(Gamma, Xi, tol))
    b = proj_aux(Gamma, proj_minus(Xi), tol)
    gap = np.linalg.norm(a - b)
    if gap > COMPOSE_TOL * max(1.0, np.linalg.norm(Xi)):
        raise NotPure(f"projections do not commute (gap {gap:.3e}); "
                      "Gamma violates purity or the block condition")
    return a


def metric_s(n: int) -> np.ndarray:
    return np.diag(np.r_[np.ones(n), -np.ones(n)]).astype(complex)


def bosonic_normal_component(Gamma_t: np.ndarray, B: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """A = -(P* B P* + (1-P*) B (1-P*)) S with P = -Gamma S.

    Elements of this form are HS-orthogonal to the tangent space of
    bosonic quasifree states at Gamma_t.
    """
    n = Gamma_t.shape[0] // 2
    S = metric_s(n)
    res = np.linalg.norm(Gamma_t @ S @ Gamma_t + Gamma_t)
    if res > tol:
        raise NotBosonicQuasifree(f"||Gamma S Gamma + Gamma|| = {res:.3e} exceeds {tol:.1e}")
    P = -Gamma_t @ S
    Ps = P.conj().T
    Q = np.eye(2 * n) - Ps
    return -(Ps @ B @ Ps + Q @ B @ Q) @ S


def random_bosonic_normal_input(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random B with S B* S = B and B + J B J = 0."""
    S = metric_s(n)
    X = rng.standard_normal((2 * n, 2 * n)) + 1j * rng.standard_normal((2 * n, 2 * n))
    B1 = 0.5 * (X + S @ X.conj().T @ S)
    return 0.5 * (B1 - j_conj(B1))
