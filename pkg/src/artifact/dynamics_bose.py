"""Bosonic Hartree-Fock-Bogoliubov evolution with a condensate.

State (phi, gt, at): condensate phi, truncated one-body density gt and
truncated pairing at (symmetric). The full densities entering the mean
fields are gamma = gt + |phi><phi| and alpha = at + phi phi^T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfiguration, NonFinite
from .lattice import _vmat, pi_v

__all__ = [
    "HFBState",
    "BosonicReport",
    "HFBTrajectory",
    "h_hfb",
    "hfb_mean_field",
    "build_g",
    "hfb_rhs",
    "hfb_rhs_symplectic",
    "assemble_bosonic",
    "gamma_from_alpha",
    "bosonic_invariants",
    "random_bogoliubov",
    "integrate_hfb",
]


@dataclass(frozen=True)
class HFBState:
    phi: np.ndarray
    gamma_t: np.ndarray
    alpha_t: np.ndarray

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    def check(self, tol: float = 1e-12) -> "HFBState":
        n = self.phi.shape[0]
        if self.gamma_t.shape != (n, n) or self.alpha_t.shape != (n, n):
            raise InvalidConfiguration("shape mismatch in HFB state")
        if np.abs(self.gamma_t - self.gamma_t.conj().T).max(initial=0.0) > tol:
            raise InvalidConfiguration("truncated gamma is not Hermitian")
        if np.abs(self.alpha_t - self.alpha_t.T).max(initial=0.0) > tol:
            raise InvalidConfiguration("truncated alpha is not symmetric")
        if np.linalg.eigvalsh(self.gamma_t)[0] < -1e-10:
            raise InvalidConfiguration("truncated gamma is not positive")
        return self

    @classmethod
    def vacuum(cls, n: int) -> "HFBState":
        z = np.zeros((n, n), dtype=complex)
        return cls(np.zeros(n, dtype=complex), z, z.copy())


def h_hfb(gamma, h, V) -> np.ndarray:
    """h + V*rho_gamma + X_V(gamma): the exchange enters with a plus sign."""
    Vm = _vmat(V)
    return h + np.diag(Vm @ np.diagonal(gamma)) + Vm * gamma


hfb_mean_field = h_hfb


def build_g(gamma, alpha, h, V) -> np.ndarray:
    """Generalized HFB operator [[h_HFB, Pi], [Pi*, conj h_HFB]] from full densities."""
    Vm = _vmat(V)
    if np.shape(gamma) != Vm.shape or np.shape(alpha) != Vm.shape or np.shape(h) != Vm.shape:
        raise InvalidConfiguration("dimension mismatch in build_g")
    A = h_hfb(gamma, h, V)
    B = pi_v(alpha, V)
    return np.block([[A, B], [B.conj().T, A.conj()]])


def _full(state: HFBState):
    phi = state.phi
    return state.gamma_t + np.outer(phi, phi.conj()), state.alpha_t + np.outer(phi, phi)


def hfb_rhs(state: HFBState, h, V):
    """Time derivatives (dphi, dgt, dat) from the componentwise HFB equations."""
    phi, gt, at = state.phi, state.gamma_t, state.alpha_t
    if np.shape(h) != gt.shape or _vmat(V).shape != gt.shape or phi.shape != (gt.shape[0],):
        raise InvalidConfiguration("dimension mismatch in hfb_rhs")
    gfull, afull = _full(state)
    Pi = pi_v(afull, V)
    hb = h_hfb(gfull, h, V)
    one = np.eye(phi.shape[0])
    dphi = -1j * (h_hfb(gt, h, V) @ phi + Pi @ phi.conj())
    dg = -1j * (hb @ gt - gt @ hb + Pi @ at.conj() - at @ Pi.conj().T)
    da = -1j * (hb @ at + at @ hb.conj() + Pi @ (one + gt.conj()) + gt @ Pi)
    return dphi, dg, da


def assemble_bosonic(gt, at) -> np.ndarray:
    n = gt.shape[0]
    return np.block([[gt, at], [at.conj(), np.eye(n) + gt.conj()]])


def _metric(n):
    return np.diag(np.r_[np.ones(n), -np.ones(n)])


def hfb_rhs_symplectic(state: HFBState, h, V) -> np.ndarray:
    """d/dt of the truncated generalized density from -i(S G Gt - Gt G S)."""
    n = state.n
    G = build_g(*_full(state), h, V)
    Gt = assemble_bosonic(state.gamma_t, state.alpha_t)
    S = _metric(n)
    return -1j * (S @ G @ Gt - Gt @ G @ S)


def gamma_from_alpha(at) -> np.ndarray:
    """Bosonic quasifree Gt on the graph: gt = (sqrt(1 + 4 at conj(at)) - 1) / 2."""
    at = np.asarray(at, dtype=complex)
    if np.abs(at - at.T).max(initial=0.0) > 1e-12:
        raise InvalidConfiguration("alpha must be symmetric")
    X = at @ at.conj()
    w, Q = np.linalg.eigh(0.5 * (X + X.conj().T))
    w = np.clip(w, 0.0, None)
    # (sqrt(1+4w)-1)/2 written as 2w/(sqrt(1+4w)+1) to avoid cancellation
    gt = (Q * (2 * w / (np.sqrt(1 + 4 * w) + 1))) @ Q.conj().T
    gt = 0.5 * (gt + gt.conj().T)
    return assemble_bosonic(gt, at)


@dataclass(frozen=True)
class BosonicReport:
    total_N: float
    purity_quantity: float
    bogoliubov_residual: float
    purity_identity_residual: float


def bosonic_invariants(state: HFBState) -> BosonicReport:
    n = state.n
    Gt = assemble_bosonic(state.gamma_t, state.alpha_t)
    S = _metric(n)
    P = -Gt @ S
    pq = np.trace(P @ P - P).real
    g, a = state.gamma_t, state.alpha_t
    alt = 2 * np.trace(g @ (np.eye(n) + g) - a @ a.conj()).real
    return BosonicReport(
        total_N=float(np.trace(g).real + np.vdot(state.phi, state.phi).real),
        purity_quantity=float(pq),
        bogoliubov_residual=float(np.linalg.norm(Gt @ S @ Gt + Gt)),
        purity_identity_residual=float(abs(pq - alt)),
    )


def random_bogoliubov(n: int, seed: int, scale: float = 0.5, phi_scale: float = 1.0) -> HFBState:
    """Random Bogoliubov state: random condensate plus graph-formula (gt, at)."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    at = scale * 0.5 * (Z + Z.T)
    Gt = gamma_from_alpha(at)
    phi = phi_scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2 * n)
    return HFBState(phi, Gt[:n, :n].copy(), at)


@dataclass
class HFBTrajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    symmetry_residual: list = field(default_factory=list)
    final: HFBState | None = None

    def drifts(self) -> dict:
        N = np.array([r.total_N for r in self.reports])
        pq = np.array([r.purity_quantity for r in self.reports])
        br = np.array([r.bogoliubov_residual for r in self.reports])
        return {"total_N": float(np.max(np.abs(N - N[0]))),
                "purity_quantity": float(np.max(np.abs(pq - pq[0]))),
                "bogoliubov_residual": float(np.max(br)),
                "symmetry": float(np.max(self.symmetry_residual))}


def integrate_hfb(state0: HFBState, h, V, t_final: float, dt: float,
                  store_every: int = 1) -> HFBTrajectory:
    """Classical RK4 on (phi, gt, at) with per-step invariants."""
    state0.check()
    if not (dt > 0 and t_final > 0):
        raise InvalidConfiguration("need dt > 0 and t_final > 0")
    steps = max(1, int(np.ceil(t_final / dt - 1e-9)))
    dt = t_final / steps

    def f(p, g, a):
        return hfb_rhs(HFBState(p, g, a), h, V)

    p, g, a = (state0.phi.astype(complex), state0.gamma_t.astype(complex),
               state0.alpha_t.astype(complex))
    traj = HFBTrajectory()

    def record(t, st, store):
        if not all(np.all(np.isfinite(x)) for x in (st.phi, st.gamma_t, st.alpha_t)):
            raise NonFinite(f"non-finite HFB state at t = {t}")
        traj.times.append(float(t))
        traj.reports.append(bosonic_invariants(st))
        traj.symmetry_residual.append(float(
            np.abs(st.gamma_t - st.gamma_t.conj().T).max() + np.abs(st.alpha_t - st.alpha_t.T).max()))
        if store:
            traj.states.append(st)

    record(0.0, HFBState(p, g, a), True)
    for i in range(1, steps + 1):
        k1 = f(p, g, a)
        k2 = f(p + dt / 2 * k1[0], g + dt / 2 * k1[1], a + dt / 2 * k1[2])
        k3 = f(p + dt / 2 * k2[0], g + dt / 2 * k2[1], a + dt / 2 * k2[2])
        k4 = f(p + dt * k3[0], g + dt * k3[1], a + dt * k3[2])
        p = p + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        g = g + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        a = a + dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
            raise NonFinite(f"non-finite HFB state at t = {i * dt}")
        record(i * dt, HFBState(p, g, a), (i % store_every == 0) or i == steps)
    traj.final = HFBState(p, g, a)
    return traj
