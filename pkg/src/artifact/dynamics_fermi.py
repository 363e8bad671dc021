"""Bogoliubov-de Gennes evolution of (gamma, alpha) on a finite lattice.

The equations are

    i d/dt gamma = [h_HF, gamma] - Pi alpha^- - alpha Pi*
    i d/dt alpha = h_HF alpha + alpha conj(h_HF) + Pi (1 - conj gamma) - gamma Pi

with h_HF = h + V*rho_gamma - X_V(gamma), Pi = Pi_V(alpha) and alpha^- the
entrywise conjugate. Equivalently i dGamma/dt = [F_Gamma, Gamma].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfiguration, NoContraction, NonFinite, StepRejected
from .lattice import _vmat, calv, pi_v
from .quasifree import BdGState, assemble, extract

__all__ = [
    "h_hf",
    "build_f",
    "rhs",
    "rhs_generalized",
    "k_nonlinear",
    "polarized_k",
    "energy",
    "potential_energy",
    "Trajectory",
    "PicardReport",
    "integrate",
    "free_evolution",
    "picard_solve",
    "cutoff_evolve",
    "cutoff_thresholds",
    "multiplier_from_h",
    "z_norm_h",
    "POSITIVITY_TOL",
]

POSITIVITY_TOL = 1e-6


def _check_dims(state: BdGState, h, V) -> None:
    n = state.gamma.shape[0]
    if state.alpha.shape != (n, n) or np.shape(h) != (n, n) or _vmat(V).shape != (n, n):
        raise InvalidConfiguration(
            f"dimension mismatch: gamma {state.gamma.shape}, alpha {state.alpha.shape}, "
            f"h {np.shape(h)}, V {_vmat(V).shape}")


def h_hf(gamma, h, V) -> np.ndarray:
    return h + calv(gamma, V)


def build_f(state: BdGState, h, V) -> np.ndarray:
    _check_dims(state, h, V)
    hf = h_hf(state.gamma, h, V)
    Pi = pi_v(state.alpha, V)
    return np.block([[hf, Pi], [Pi.conj().T, -hf.conj()]])


def _rhs_blocks(g, a, hf, Pi, one):
    dg = -1j * (hf @ g - g @ hf - Pi @ a.conj() - a @ Pi.conj().T)
    da = -1j * (hf @ a + a @ hf.conj() + Pi @ (one - g.conj()) - g @ Pi)
    return dg, da


def rhs(state: BdGState, h, V):
    _check_dims(state, h, V)
    g, a = state.gamma, state.alpha
    return _rhs_blocks(g, a, h_hf(g, h, V), pi_v(a, V), np.eye(g.shape[0]))


def rhs_generalized(state: BdGState, h, V) -> np.ndarray:
    """-i [F_Gamma, Gamma] as a 2n x 2n matrix."""
    F = build_f(state, h, V)
    G = assemble(state, check=False)
    return -1j * (F @ G - G @ F)


def k_nonlinear(state: BdGState, V):
    """Quadratic nonlinearities K_1(omega), K_2(omega)."""
    g, a = state.gamma, state.alpha
    W = calv(g, V)
    Pi = pi_v(a, V)
    K1 = W @ g - g @ W - Pi @ a.conj() + a @ pi_v(a.conj(), V)
    K2 = W @ a + a @ calv(g.conj(), V) - g @ Pi - Pi @ g.conj()
    return K1, K2


def polarized_k(w1: BdGState, w2: BdGState, V):
    """Bilinear polarizations K_1(w1, w2), K_2(w1, w2)."""
    g1, a1, g2, a2 = w1.gamma, w1.alpha, w2.gamma, w2.alpha
    W1 = calv(g1, V)
    K1 = W1 @ g2 - g2 @ W1 - pi_v(a1, V) @ a2.conj() + a2 @ pi_v(a1.conj(), V)
    Pi2 = pi_v(a2, V)
    K2 = W1 @ a2 + a2 @ calv(g1.conj(), V) - g1 @ Pi2 - Pi2 @ g1.conj()
    return K1, K2


def potential_energy(state: BdGState, V) -> float:
    g, a = state.gamma, state.alpha
    Vm = _vmat(V)
    direct = np.diag(Vm @ np.diagonal(g))
    e = (np.trace(direct @ g) - np.trace(g.conj().T @ (Vm * g))
         + np.trace(a.conj().T @ (Vm * a)))
    return float(0.5 * e.real)


def energy(state: BdGState, h, V) -> float:
    g, a = state.gamma, state.alpha
    Vm = _vmat(V)
    rho = np.diagonal(g).real
    pot = rho @ Vm @ rho - np.sum(Vm * np.abs(g) ** 2) + np.sum(Vm * np.abs(a) ** 2)
    return float(np.trace(h @ g).real + 0.5 * pot)


# trajectories --------------------------------------------------------------

@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    state_times: list = field(default_factory=list)
    tr_gamma: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    spectrum: list = field(default_factory=list)
    purity_defect: list = field(default_factory=list)
    alpha_s2: list = field(default_factory=list)
    spec_drift: list = field(default_factory=list)
    unitarity_residual: list = field(default_factory=list)
    reconstruction_residual: list = field(default_factory=list)
    final: BdGState | None = None
    propagator: np.ndarray | None = None

    def drifts(self) -> dict:
        tr = np.asarray(self.tr_gamma)
        en = np.asarray(self.energy)
        pur = np.asarray(self.purity_defect)
        out = {
            "tr_gamma": float(np.max(np.abs(tr - tr[0]))),
            "energy": float(np.max(np.abs(en - en[0]))),
            "spectrum": float(np.max(self.spec_drift)),
            "purity_defect": float(np.max(np.abs(pur - pur[0]))),
        }
        if self.unitarity_residual and self.unitarity_residual[-1] is not None:
            out["unitarity"] = float(np.max(self.unitarity_residual))
            out["reconstruction"] = float(np.max(self.reconstruction_residual))
        return out


def _record(traj: Trajectory, t, state, h, V, G0, spec0, U, store: bool):
    G = assemble(state, check=False)
    if not (np.all(np.isfinite(state.gamma)) and np.all(np.isfinite(state.alpha))):
        raise NonFinite(f"non-finite state at t = {t}")
    w = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    if w[0] < -POSITIVITY_TOL or w[-1] > 1 + POSITIVITY_TOL:
        raise StepRejected(
            f"Gamma spectrum [{w[0]:.3e}, {w[-1]:.3e}] left [0, 1] at t = {t}; reduce dt")
    traj.times.append(float(t))
    traj.tr_gamma.append(float(np.trace(state.gamma).real))
    traj.energy.append(energy(state, h, V))
    traj.spectrum.append(w)
    traj.purity_defect.append(float(np.trace(G @ G - G).real))
    traj.alpha_s2.append(float(np.linalg.norm(state.alpha)))
    traj.spec_drift.append(0.0 if spec0 is None else float(np.max(np.abs(w - spec0))))
    if U is not None:
        m = U.shape[0]
        traj.unitarity_residual.append(float(np.linalg.norm(U.conj().T @ U - np.eye(m), 2)))
        traj.reconstruction_residual.append(
            float(np.linalg.norm(G - U @ G0 @ U.conj().T, 2)))
    else:
        traj.unitarity_residual.append(None)
        traj.reconstruction_residual.append(None)
    if store:
        traj.states.append(state)
        traj.state_times.append(float(t))
    return w


def _mesh(t_final: float, dt: float) -> tuple[int, float]:
    if not (dt > 0 and t_final > 0 and np.isfinite(dt) and np.isfinite(t_final)):
        raise InvalidConfiguration(f"need dt > 0 and t_final > 0, got dt={dt}, t_final={t_final}")
    steps = max(1, int(np.ceil(t_final / dt - 1e-9)))
    return steps, t_final / steps


def _rk4_step(g, a, U, dt, field_fn):
    """One classical RK4 step; field_fn(g, a) -> (dg, da, F or None)."""
    def f(g_, a_, U_):
        dg, da, F = field_fn(g_, a_)
        dU = None if U_ is None else -1j * (F @ U_)
        return dg, da, dU

    def add(x, k, c):
        return None if x is None else x + c * k

    k1 = f(g, a, U)
    k2 = f(add(g, k1[0], dt / 2), add(a, k1[1], dt / 2), add(U, k1[2], dt / 2))
    k3 = f(add(g, k2[0], dt / 2), add(a, k2[1], dt / 2), add(U, k2[2], dt / 2))
    k4 = f(add(g, k3[0], dt), add(a, k3[1], dt), add(U, k3[2], dt))

    def comb(x, i):
        if x is None:
            return None
        return x + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])

    return comb(g, 0), comb(a, 1), comb(U, 2)


def _make_field(h, V, with_F: bool, P=None):
    n = h.shape[0]
    one = np.eye(n) if P is None else P.conj()

    def field_fn(g, a):
        hf = h_hf(g, h, V)
        Pi = pi_v(a, V)
        if P is not None:
            hf = P @ hf @ P
            Pi = P @ Pi @ P.conj()
        dg, da = _rhs_blocks(g, a, hf, Pi, one)
        F = np.block([[hf, Pi], [Pi.conj().T, -hf.conj()]]) if with_F else None
        return dg, da, F
    return field_fn


def _symmetrize(g, a):
    return 0.5 * (g + g.conj().T), 0.5 * (a - a.T)


def integrate(state0: BdGState, h, V, t_final: float, dt: float, scheme: str = "rk4",
              with_propagator: bool = False, store_every: int = 1,
              _projector=None) -> Trajectory:
    """Integrate the BdG equations on a uniform mesh ending exactly at t_final.

    scheme="rk4" is classical fourth order; scheme="split" is Strang splitting
    with exact free flight exp(-i F_0 t), F_0 = diag(h, -conj h), and a
    midpoint mean-field kick. Both keep the state in the block form; the
    split scheme also conserves the spectrum of Gamma exactly.
    """
    state0.check()
    _check_dims(state0, h, V)
    steps, dt = _mesh(t_final, dt)
    if scheme not in ("rk4", "split"):
        raise InvalidConfiguration(f"unknown scheme {scheme!r}")
    if scheme == "split" and _projector is not None:
        raise InvalidConfiguration("cutoff evolution supports only rk4")
    n = state0.n
    g, a = state0.gamma.astype(complex), state0.alpha.astype(complex)
    U = np.eye(2 * n, dtype=complex) if with_propagator else None
    G0 = assemble(state0, check=False)
    traj = Trajectory()
    spec0 = _record(traj, 0.0, BdGState(g, a), h, V, G0, None, U, True)
    if scheme == "rk4":
        field_fn = _make_field(h, V, with_propagator, _projector)
        for i in range(1, steps + 1):
            g, a, U = _rk4_step(g, a, U, dt, field_fn)
            g, a = _symmetrize(g, a)
            store = (i % store_every == 0) or i == steps
            _record(traj, i * dt, BdGState(g, a), h, V, G0, spec0, U, store)
    else:
        w, Q = np.linalg.eigh(h)
        half = (Q * np.exp(-0.5j * dt * w)) @ Q.conj().T
        Wfree = np.block([[half, np.zeros((n, n))], [np.zeros((n, n)), half.conj()]])
        F0 = np.block([[h, np.zeros((n, n))], [np.zeros((n, n)), -np.conj(h)]])
        G = G0.copy()
        for i in range(1, steps + 1):
            G = Wfree @ G @ Wfree.conj().T
            Fi = build_f(extract(G), h, V) - F0
            Wk = _expm_herm(Fi, 0.5 * dt)
            Gm = Wk @ G @ Wk.conj().T
            Fm = build_f(extract(Gm), h, V) - F0
            Wk = _expm_herm(Fm, dt)
            G = Wk @ G @ Wk.conj().T
            G = Wfree @ G @ Wfree.conj().T
            G = 0.5 * (G + G.conj().T)
            if U is not None:
                U = Wfree @ Wk @ Wfree @ U
            st = extract(G)
            st = BdGState(*_symmetrize(st.gamma, st.alpha))
            store = (i % store_every == 0) or i == steps
            _record(traj, i * dt, st, h, V, G0, spec0, U, store)
        g, a = st.gamma, st.alpha
    traj.final = BdGState(g, a)
    traj.propagator = U
    return traj


def _expm_herm(F: np.ndarray, t: float) -> np.ndarray:
    """exp(-i t F) for Hermitian F."""
    w, Q = np.linalg.eigh(0.5 * (F + F.conj().T))
    return (Q * np.exp(-1j * t * w)) @ Q.conj().T


def free_evolution(state: BdGState, h, t: float) -> BdGState:
    """Closed form for V = 0: gamma -> e^{-iht} gamma e^{iht}, alpha -> e^{-iht} alpha e^{-ih^T t}."""
    w, Q = np.linalg.eigh(h)
    E = (Q * np.exp(-1j * t * w)) @ Q.conj().T
    return BdGState(E @ state.gamma @ E.conj().T, E @ state.alpha @ E.T)


# Picard iteration of the mild form ------------------------------------------

def multiplier_from_h(h) -> np.ndarray:
    """M = (1 + h)^(1/2); equals (1 - Laplacian)^(1/2) for the kinetic h."""
    w, Q = np.linalg.eigh(h)
    return (Q * np.sqrt(1.0 + w)) @ Q.conj().T


def z_norm_h(gamma, alpha, h, M=None) -> float:
    """Z-norm with M = (1+h)^(1/2) and the two-body H^1 norm of alpha."""
    if M is None:
        M = multiplier_from_h(h)
    s = np.linalg.svd(M @ gamma, compute_uv=False).sum()
    s += np.linalg.svd(gamma @ M, compute_uv=False).sum()
    h1sq = (np.linalg.norm(alpha) ** 2 + np.trace(alpha.conj().T @ h @ alpha).real
            + np.trace(alpha @ h.T @ alpha.conj().T).real)
    return float(s + np.sqrt(max(h1sq, 0.0)))


def two_body_generator(h, V) -> np.ndarray:
    """Matrix of alpha -> h alpha + alpha h^T + Pi_V(alpha) on row-major vec(alpha)."""
    n = h.shape[0]
    I = np.eye(n)
    return np.kron(h, I) + np.kron(I, h) + np.diag(_vmat(V).ravel())


@dataclass
class PicardReport:
    interval: float
    iterations: int
    differences: list
    contraction: float
    converged: bool
    two_body: str = "strang"


def _two_body_propagators(h, V, tau, m, method):
    n = h.shape[0]
    if method == "exact":
        w, Q = np.linalg.eigh(two_body_generator(h, V))
        return [(Q * np.exp(-1j * d * tau * w)) @ Q.conj().T for d in range(m + 1)]
    if method == "strang":
        # kinetic phases exact in the pair eigenbasis, V(x1-x2) as diagonal phases
        wh, Qh = np.linalg.eigh(h)
        Ekin = (Qh * np.exp(-1j * tau * wh)) @ Qh.conj().T
        Kin = np.kron(Ekin, Ekin)  # row-major vec(E alpha E^T)
        hv = np.exp(-0.5j * tau * _vmat(V).ravel())
        step = hv[:, None] * Kin * hv[None, :]
        out = [np.eye(n * n, dtype=complex)]
        for _ in range(m):
            out.append(step @ out[-1])
        return out
    raise InvalidConfiguration(f"unknown two-body propagator {method!r}")


def picard_solve(state0: BdGState, h, V, interval: float, quadrature_steps: int = 64,
                 tol: float = 1e-12, max_iter: int = 100, two_body: str = "strang",
                 floor: float = 1e-11):
    """Fixed-point iteration of the mild (Duhamel) form on a uniform mesh.

    gamma_t = e^{-iht} gamma_0 e^{iht} - i int_0^t e^{-ih(t-s)} K_1(w_s) e^{ih(t-s)} ds
    alpha_t = e^{-i hh t} alpha_0 - i int_0^t e^{-i hh (t-s)} K_2(w_s) ds

    with hh alpha = h alpha + alpha h^T + Pi_V(alpha). Integrals use the
    trapezoidal rule. two_body="exact" exponentiates hh by eigendecomposition
    of the n^2 x n^2 generator; "strang" splits kinetic phases and V(x1-x2).
    Returns (Trajectory, PicardReport); raises NoContraction when successive
    differences grow for three consecutive iterations. Differences below
    floor * (largest Z-norm of any iterate) are treated as rounding noise: they
    never count as growth, and three of them in a row end the iteration.
    """
    state0.check()
    _check_dims(state0, h, V)
    if not interval > 0:
        raise InvalidConfiguration("interval must be positive")
    n = state0.n
    m = int(quadrature_steps)
    tau = interval / m
    wh, Qh = np.linalg.eigh(h)
    Uh = [(Qh * np.exp(-1j * d * tau * wh)) @ Qh.conj().T for d in range(m + 1)]
    Ua = _two_body_propagators(h, V, tau, m, two_body)
    M = multiplier_from_h(h)
    g0, a0 = state0.gamma.astype(complex), state0.alpha.astype(complex)
    free_g = np.array([U @ g0 @ U.conj().T for U in Uh])
    free_a = np.array([(U @ a0.ravel()).reshape(n, n) for U in Ua])

    def clubsuit(G, A):
        K1 = np.empty_like(G)
        K2 = np.empty_like(A)
        for j in range(m + 1):
            K1[j], K2[j] = k_nonlinear(BdGState(G[j], A[j]), V)
        newG = free_g.copy()
        newA = free_a.copy()
        for j in range(1, m + 1):
            accG = np.zeros((n, n), dtype=complex)
            accA = np.zeros(n * n, dtype=complex)
            for l in range(j + 1):
                wgt = 0.5 if l in (0, j) else 1.0
                U = Uh[j - l]
                accG += wgt * (U @ K1[l] @ U.conj().T)
                accA += wgt * (Ua[j - l] @ K2[l].ravel())
            newG[j] = newG[j] - 1j * tau * accG
            newA[j] = newA[j] - 1j * tau * accA.reshape(n, n)
        return newG, newA

    G, A = free_g, free_a

    def noise_level(G_, A_):
        # differences below this level are rounding noise of the quadrature sums
        return floor * max(1.0, max(z_norm_h(G_[j], A_[j], h, M) for j in range(m + 1)))

    noise = noise_level(G, A)
    diffs: list[float] = []
    increases = 0
    stagnant = 0
    converged = False
    for it in range(1, max_iter + 1):
        newG, newA = clubsuit(G, A)
        if not (np.all(np.isfinite(newG)) and np.all(np.isfinite(newA))):
            raise NoContraction(f"Picard iterate became non-finite at iteration {it}")
        d = max(z_norm_h(newG[j] - G[j], newA[j] - A[j], h, M) for j in range(m + 1))
        diffs.append(float(d))
        G, A = newG, newA
        noise = max(noise, noise_level(G, A))
        if d < tol:
            converged = True
            break
        if d <= noise:
            stagnant += 1
            if stagnant >= 3:
                converged = True
                break
            continue
        stagnant = 0
        if len(diffs) >= 2 and diffs[-1] > diffs[-2]:
            increases += 1
            if increases >= 3:
                err = NoContraction(
                    f"successive differences increased 3 times (last {diffs[-1]:.3e}); "
                    "shorten the interval")
                err.differences = list(diffs)
                raise err
        else:
            increases = 0
    ratios = [diffs[k + 1] / diffs[k] for k in range(len(diffs) - 1)
              if diffs[k] > noise and diffs[k + 1] > noise]
    contraction = float(max(ratios)) if ratios else 0.0
    times = [j * tau for j in range(m + 1)]
    traj = Trajectory()
    for j in range(m + 1):
        st = BdGState(*_symmetrize(G[j], A[j]))
        traj.times.append(times[j])
        traj.states.append(st)
        traj.state_times.append(times[j])
        traj.tr_gamma.append(float(np.trace(st.gamma).real))
        traj.energy.append(energy(st, h, V))
        traj.alpha_s2.append(float(np.linalg.norm(st.alpha)))
    traj.final = traj.states[-1]
    report = PicardReport(float(interval), len(diffs), diffs, contraction, converged, two_body)
    return traj, report


# spectral cutoff -----------------------------------------------------------

def cutoff_thresholds(h) -> np.ndarray:
    """Distinct eigenvalues of h (up to 1e-9), ascending."""
    w = np.sort(np.linalg.eigvalsh(h))
    out = [w[0]]
    for x in w[1:]:
        if x - out[-1] > 1e-9:
            out.append(x)
    return np.array(out)


def cutoff_evolve(state0: BdGState, h, V, cutoff: float, t_final: float, dt: float,
                  with_propagator: bool = False, store_every: int = 1) -> Trajectory:
    """Evolve under P F P with P = 1(h < cutoff), from P Gamma_0 P.

    On the pair block the projector acts as P alpha P^-, so the regularized
    state keeps P gamma P = gamma and P alpha P^- = alpha.
    """
    if not cutoff >= 0:
        raise InvalidConfiguration("cutoff must be nonnegative")
    w, Q = np.linalg.eigh(h)
    keep = w < cutoff
    if np.all(keep):
        return integrate(state0, h, V, t_final, dt, "rk4", with_propagator, store_every)
    Qs = Q[:, keep]
    P = Qs @ Qs.conj().T
    s0 = BdGState(P @ state0.gamma @ P, P @ state0.alpha @ P.conj())
    s0 = BdGState(*_symmetrize(s0.gamma, s0.alpha))
    traj = integrate(s0, h, V, t_final, dt, "rk4", with_propagator, store_every, _projector=P)
    traj.projector = P
    return traj
