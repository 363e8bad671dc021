import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact import lattice as lat
from artifact.errors import InvalidConfiguration

from conftest import rand_antisym, rand_complex, rand_herm

TWO_PI = 2 * np.pi


def dft_by_formula(grid):
    # F[k, x] = exp(-i k.x) / sqrt(n) with physical positions x = spacing * index
    x = grid.positions * grid.spacing
    return np.exp(-1j * grid.momenta @ x.T) / np.sqrt(grid.n)


# build_grid ---------------------------------------------------------------

def test_grid_two_points_momenta_and_kinetic():
    g = lat.build_grid(2, 1, TWO_PI)
    assert sorted(g.momenta[:, 0]) == [-1.0, 0.0]
    assert sorted(np.round(np.linalg.eigvalsh(lat.build_kinetic(g)), 12)) == [0.0, 1.0]


def test_grid_four_points_momenta_and_kinetic(grid4):
    assert sorted(grid4.momenta[:, 0]) == [-2.0, -1.0, 0.0, 1.0]
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(lat.build_kinetic(grid4))),
                               [0, 1, 1, 4], atol=1e-12)


def test_grid_2d_dft_unitary():
    g = lat.build_grid(3, 2, TWO_PI)
    assert g.n == 9
    F = g.dft
    assert np.linalg.norm(F.conj().T @ F - np.eye(9)) < 1e-13


@pytest.mark.parametrize("npd,dim,L", [(4, 1, TWO_PI), (3, 2, TWO_PI), (4, 2, 3.0), (2, 3, 5.0), (5, 1, 1.0)])
def test_dft_matches_closed_form(npd, dim, L):
    g = lat.build_grid(npd, dim, L)
    np.testing.assert_allclose(g.dft, dft_by_formula(g), atol=1e-13)


@pytest.mark.parametrize("bad", [dict(n_per_dim=1), dict(n_per_dim=0), dict(box_length=0.0),
                                 dict(box_length=-1.0), dict(dim=4), dict(dim=0)])
def test_build_grid_rejects(bad):
    args = dict(n_per_dim=4, dim=1, box_length=TWO_PI)
    args.update(bad)
    with pytest.raises(InvalidConfiguration):
        lat.build_grid(**args)


def test_momentum_convention_box_length():
    g = lat.build_grid(4, 1, np.pi)  # spacing pi/4, momenta in units of 2
    assert sorted(g.momenta[:, 0]) == [-4.0, -2.0, 0.0, 2.0]


# kinetic and multiplier ---------------------------------------------------

@pytest.mark.parametrize("npd,dim", [(4, 1), (5, 1), (3, 2), (2, 3)])
def test_kinetic_and_multiplier_spectra(npd, dim):
    g = lat.build_grid(npd, dim, TWO_PI)
    h = lat.build_kinetic(g)
    M = lat.build_multiplier(g)
    assert np.abs(h - h.conj().T).max() < 1e-13
    assert np.abs(M - M.conj().T).max() < 1e-13
    # diagonal in momentum space with the stated eigenvalues
    F = g.dft
    np.testing.assert_allclose(F @ h @ F.conj().T, np.diag(g.k2), atol=1e-12)
    np.testing.assert_allclose(F @ M @ F.conj().T, np.diag(np.sqrt(1 + g.k2)), atol=1e-12)
    assert abs(np.linalg.eigvalsh(M)[0] - 1.0) < 1e-12


def test_multiplier_grid4_eigenvalues(grid4):
    w = np.sort(np.linalg.eigvalsh(lat.build_multiplier(grid4)))
    np.testing.assert_allclose(w, np.sort([np.sqrt(5), np.sqrt(2), 1, np.sqrt(2)]), atol=1e-13)


def test_kinetic_is_minus_second_difference_symbol(grid8):
    # spectral Laplacian against the plane-wave definition
    h = lat.build_kinetic(grid8)
    x = grid8.positions[:, 0] * grid8.spacing
    for k in grid8.momenta[:, 0]:
        f = np.exp(1j * k * x)
        np.testing.assert_allclose(h @ f, k**2 * f, atol=1e-11)


def test_derivative_squares_to_minus_laplacian(grid8):
    (d,) = lat.derivatives(grid8)
    np.testing.assert_allclose(-(d @ d), lat.build_kinetic(grid8), atol=1e-12)
    M = lat.build_multiplier(grid8)
    (dm,) = lat.derivatives(grid8, over_m=True)
    np.testing.assert_allclose(dm @ M, d, atol=1e-12)


# potentials and C_V -------------------------------------------------------

def test_potential_evenness_enforced(grid4):
    with pytest.raises(InvalidConfiguration):
        lat.potential_from_values(grid4, [1.0, 2.0, 0.0, 0.5])
    V = lat.potential_from_values(grid4, [1.0, 2.0, 0.0, 2.0])
    np.testing.assert_array_equal(V.matrix, V.matrix.T)


@pytest.mark.parametrize("profile", ["zero", "onsite", "gaussian", "yukawa", "coulomb_regularized"])
def test_profiles_even_and_finite(profile):
    g = lat.build_grid(4, 2, TWO_PI)
    V = lat.make_potential(g, profile, 1.5, 0.8)
    assert np.all(np.isfinite(V.values))
    np.testing.assert_array_equal(V.values, V.values[g.displacement_index()[0]])


def test_coulomb_default_softening_is_spacing(grid8):
    V = lat.make_potential(grid8, "coulomb_regularized", 1.0)
    assert V.values[0] == pytest.approx(1.0 / grid8.spacing)
    V2 = lat.make_potential(grid8, "coulomb_regularized", 1.0, a=0.5)
    assert V2.values[0] == pytest.approx(2.0)


def test_unknown_profile_rejected(grid4):
    with pytest.raises(InvalidConfiguration):
        lat.make_potential(grid4, "square_well")


def test_cv_zero_and_constant(grid8):
    M = lat.build_multiplier(grid8)
    assert lat.compute_cv(lat.make_potential(grid8, "zero"), M) == 0.0
    const = lat.potential_from_values(grid8, np.full(8, -2.5))
    assert lat.compute_cv(const, M) == pytest.approx(2.5, abs=1e-12)


def test_cv_onsite_against_rayleigh_quotients(grid4):
    M = lat.build_multiplier(grid4)
    V = lat.make_potential(grid4, "onsite", 2.0)
    cv = lat.compute_cv(V, M)
    # brute-force maximization of <f, V^2 f> / <f, M^2 f>
    rng = np.random.default_rng(0)
    V2 = np.diag(V.values**2)
    M2 = M @ M
    best = 0.0
    for _ in range(20000):
        f = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        best = max(best, np.vdot(f, V2 @ f).real / np.vdot(f, M2 @ f).real)
    assert np.sqrt(best) <= cv + 1e-12
    assert np.sqrt(best) > 0.9 * cv
    # refine by the power iteration f <- M^-2 V^2 f, which climbs the quotient
    f = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    M2inv = np.linalg.inv(M2)
    for _ in range(500):
        f = M2inv @ (V2 @ f)
        f /= np.linalg.norm(f)
    q = np.vdot(f, V2 @ f).real / np.vdot(f, M2 @ f).real
    assert cv == pytest.approx(np.sqrt(q), rel=1e-10)
    # generalized eigenproblem as an independent route
    import scipy.linalg as sla
    w = sla.eigh(V2, M2, eigvals_only=True)
    assert cv == pytest.approx(np.sqrt(w[-1]), rel=1e-12)


# mean-field operators -----------------------------------------------------

def test_mean_field_zero_gamma(grid4):
    V = lat.make_potential(grid4, "gaussian", 2.0)
    z = np.zeros((4, 4), complex)
    for out in lat.mean_field_ops(z, z, V):
        assert not np.any(out)


def test_onsite_direct_minus_exchange_vanishes(grid8, rng):
    V = lat.make_potential(grid8, "onsite", 1.7)
    g = rand_herm(8, rng)
    d, x, _ = lat.mean_field_ops(g, np.zeros((8, 8)), V)
    np.testing.assert_allclose(d - x, 0, atol=1e-15)
    np.testing.assert_allclose(d, 1.7 * np.diag(np.diagonal(g)), atol=1e-15)


def test_mean_field_against_loops(grid4):
    rng = np.random.default_rng(4)
    V = lat.make_potential(grid4, "yukawa", 1.3, 0.7)
    g, a = rand_herm(4, rng), rand_antisym(4, rng)
    d, x, p = lat.mean_field_ops(g, a, V)
    n = 4
    pos = grid4.positions[:, 0]

    def Vr(i, j):
        return V.values[(pos[i] - pos[j]) % n]

    d_ref = np.zeros((n, n), complex)
    x_ref = np.zeros((n, n), complex)
    p_ref = np.zeros((n, n), complex)
    for i in range(n):
        for j in range(n):
            d_ref[i, i] += Vr(i, j) * g[j, j]
            x_ref[i, j] = Vr(i, j) * g[i, j]
            p_ref[i, j] = Vr(i, j) * a[i, j]
    np.testing.assert_allclose(d, d_ref, atol=1e-14)
    np.testing.assert_allclose(x, x_ref, atol=1e-14)
    np.testing.assert_allclose(p, p_ref, atol=1e-14)
    # Pi_V(alpha)* = -Pi_V(conj alpha) for antisymmetric alpha
    np.testing.assert_allclose(p.conj().T, -lat.pi_v(a.conj(), V), atol=1e-14)


def test_mean_field_shape_mismatch(grid4):
    V = lat.make_potential(grid4, "gaussian")
    with pytest.raises(InvalidConfiguration):
        lat.mean_field_ops(np.eye(3), np.zeros((3, 3)), V)


def test_2d_displacement_potential_matrix():
    g = lat.build_grid(3, 2, TWO_PI)
    V = lat.make_potential(g, "gaussian", 1.0, 1.0)
    pos = g.positions
    for i in range(g.n):
        for j in range(g.n):
            r = (pos[i] - pos[j]) % 3
            r = np.minimum(r, 3 - r) * g.spacing
            assert V.matrix[i, j] == pytest.approx(np.exp(-np.sum(r**2)), abs=1e-15)


# norms --------------------------------------------------------------------

def test_norms_zero(grid4):
    M = lat.build_multiplier(grid4)
    z = np.zeros((4, 4))
    rep = lat.norms(z, z, M, grid4)
    assert (rep.s1, rep.s2, rep.h1_kernel, rep.y1, rep.y2, rep.z1) == (0, 0, 0, 0, 0, 0)


@pytest.mark.parametrize("j", range(8))
def test_norms_plane_wave_projector(grid8, j):
    F = grid8.dft
    e = F.conj().T[:, j]
    g = np.outer(e, e.conj())
    rep = lat.norms(g, np.zeros((8, 8)), lat.build_multiplier(grid8), grid8)
    assert rep.s1 == pytest.approx(1.0, abs=1e-12)
    assert rep.y1 == pytest.approx(1 + grid8.k2[j], abs=1e-11)


def test_h1_kernel_against_fourier_sum(grid8, rng):
    A = rand_complex(8, rng)
    # independent: transform each kernel index by an explicit sum
    F = dft_by_formula(grid8)
    Ahat = np.einsum("px,qy,xy->pq", F, F, A)
    k2 = grid8.k2
    ref = np.sqrt(np.sum((1 + k2[:, None] + k2[None, :]) * np.abs(Ahat) ** 2))
    assert lat.h1_kernel(A, grid8) == pytest.approx(ref, rel=1e-13)


@given(st.integers(0, 2**32 - 1), st.sampled_from([(4, 1), (6, 1), (3, 2)]))
def test_alpha_norm_sandwich(seed, shape):
    g = lat.build_grid(shape[0], shape[1], TWO_PI)
    rng = np.random.default_rng(seed)
    a = rand_antisym(g.n, rng, scale=rng.exponential())
    M = lat.build_multiplier(g)
    h1sq = lat.h1_kernel(a, g) ** 2
    mid = np.linalg.norm(M @ a) ** 2 + np.linalg.norm(a @ M) ** 2
    assert h1sq <= mid * (1 + 1e-12)
    assert mid <= 2 * h1sq * (1 + 1e-12)


@given(st.integers(0, 2**32 - 1))
def test_s2_below_s1(seed):
    rng = np.random.default_rng(seed)
    A = rand_complex(5, rng)
    assert lat.hs_norm(A) <= lat.trace_norm(A) * (1 + 1e-14)


@given(st.integers(0, 2**32 - 1))
def test_half_sandwich_below_z1(seed):
    g = lat.build_grid(6, 1, TWO_PI)
    rng = np.random.default_rng(seed)
    gam = rand_herm(6, rng, scale=rng.exponential())
    M = lat.build_multiplier(g)
    Mh = lat.build_multiplier(g, 0.5)
    z1 = lat.norms(gam, np.zeros((6, 6)), M, g).z1
    assert lat.trace_norm(Mh @ gam @ Mh) <= z1 * (1 + 1e-12)


# pull-through -------------------------------------------------------------

def _band_limited(grid, kmax, rng, herm):
    F = grid.dft
    idx = np.where(np.abs(grid.momenta[:, 0]) <= kmax)[0]
    Ah = np.zeros((grid.n, grid.n), complex)
    Ah[np.ix_(idx, idx)] = rand_complex(len(idx), rng)
    A = F.conj().T @ Ah @ F
    return 0.5 * (A + A.conj().T) if herm else 0.5 * (A - A.T)


def _pull_through_residual(op, X, grid):
    M = lat.build_multiplier(grid)
    Mi = np.linalg.inv(M)
    (d,) = lat.derivatives(grid)
    (dm,) = lat.derivatives(grid, over_m=True)
    lhs = M @ op(X) @ Mi
    rhs = Mi @ op(X) @ Mi - dm @ (op(d @ X - X @ d) @ Mi + op(X) @ dm)
    return lhs - rhs


def _cosine_potential(grid):
    r = grid.torus_distance()
    return lat.potential_from_values(grid, 1.0 + 0.7 * np.cos(r) + 0.3 * np.cos(2 * r), "cosine")


def test_pull_through_band_limited():
    # n = 16, data in |k| <= 3, V with harmonics |m| <= 2: no wrap-around on |k| <= 5
    g = lat.build_grid(16, 1, TWO_PI)
    V = _cosine_potential(g)
    rng = np.random.default_rng(8)
    band = lat.fourier_multiplier(g, (np.abs(g.momenta[:, 0]) <= 5).astype(float))
    for _ in range(5):
        gam = _band_limited(g, 3, rng, herm=True)
        R = _pull_through_residual(lambda X: lat.calv(X, V), gam, g)
        assert np.abs(R @ band).max() < 1e-12
        assert np.abs(band @ R).max() < 1e-12
        a = _band_limited(g, 3, rng, herm=False)
        Ra = _pull_through_residual(lambda X: lat.pi_v(X, V), a, g)
        assert np.abs(Ra).max() < 1e-12


def test_pull_through_aliasing_for_generic_data():
    # the spectral product rule fails near the Nyquist mode; documented, not hidden
    g = lat.build_grid(16, 1, TWO_PI)
    V = _cosine_potential(g)
    gam = rand_herm(16, np.random.default_rng(1))
    R = _pull_through_residual(lambda X: lat.calv(X, V), gam, g)
    assert np.abs(R).max() > 1e-3


# estimate lemma inequalities ---------------------------------------------

@pytest.mark.parametrize("profile", ["gaussian", "yukawa", "coulomb_regularized", "onsite"])
def test_estimate_inequalities(profile):
    g = lat.build_grid(6, 1, TWO_PI)
    V = lat.make_potential(g, profile, 2.0, 1.0)
    M = lat.build_multiplier(g)
    Mi = np.linalg.inv(M)
    Mh = lat.build_multiplier(g, 0.5)
    cv = lat.compute_cv(V, M)
    slack = 1 + 1e-12
    for seed in range(100):
        rng = np.random.default_rng(seed)
        gam = rand_herm(6, rng, scale=rng.exponential())
        a = rand_antisym(6, rng, scale=rng.exponential())
        d, x, p = lat.mean_field_ops(gam, a, V)
        assert lat.hs_norm(x) <= cv * lat.h1_kernel(gam, g) * slack
        assert lat.hs_norm(p) <= cv * lat.h1_kernel(a, g) * slack
        assert lat.hs_norm(x @ Mi) <= cv * lat.hs_norm(gam) * slack
        assert lat.hs_norm(p @ Mi) <= cv * lat.hs_norm(a) * slack
        assert np.linalg.norm(d, 2) <= cv * lat.trace_norm(Mh @ gam @ Mh) * slack
        assert np.linalg.norm(d @ Mi, 2) <= cv * lat.trace_norm(gam) * slack
