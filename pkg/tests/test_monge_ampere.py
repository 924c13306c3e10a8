import math

import numpy as np
import pytest

import projlog as pl
from projlog import analytic
from projlog.errors import (
    CombinatorialBlowup,
    DimensionMismatch,
    GridTooCoarse,
    NonpositiveEpsilon,
    SingularStencil,
)
from projlog.monge_ampere import hessian_fd_batch


def random_measure(n, atoms, seed):
    pts = pl.sample_fs_uniform(seed, atoms, n)
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.2, 1.0, atoms)
    return pl.build_measure(pts, w / w.sum())


def random_hermitian(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


# ---------- FD Hessians -------------------------------------------------------

def test_hessian_fs_at_origin():
    H = pl.complex_hessian_fd(pl.fs_field(2), np.zeros(2), h=1e-4)
    np.testing.assert_allclose(H.entries, 0.5 * np.eye(2), atol=1e-7)
    assert abs(np.linalg.det(H.entries).real - 0.25) < 1e-6


def test_hessian_quadratic_field_exact():
    def quad(pts):
        return 0.5 * np.sum(np.abs(np.atleast_2d(pts)) ** 2, axis=1)

    rng = np.random.default_rng(1)
    for _ in range(5):
        z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        H = pl.complex_hessian_fd(quad, z, h=1e-3)
        np.testing.assert_allclose(H.entries, 0.5 * np.eye(3), atol=1e-9)


def test_hessian_matches_analytic_kernel():
    mu = random_measure(2, 3, seed=2)
    aff = pl.AffineAtoms.from_measure(pl.decompose(mu).components[
        max(pl.decompose(mu).components)], max(pl.decompose(mu).components))
    field = pl.affine_field(aff)
    rng = np.random.default_rng(3)
    for _ in range(10):
        z = 2.0 + rng.standard_normal(2) + 1j * rng.standard_normal(2)
        if np.min(np.linalg.norm(aff.w - z[None, :], axis=1)) < 0.3:
            continue
        H = pl.complex_hessian_fd(field, z, h=1e-3)
        ref = field.complex_hessian(z)
        assert np.max(np.abs(H.entries - ref)) < 1e-5


def test_hessian_hermitian_and_psd_for_smoothed_lift():
    mu = random_measure(2, 4, seed=4)
    lift = pl.psh_lift(mu, 0, eps=0.2)
    rng = np.random.default_rng(5)
    for _ in range(20):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        H = pl.complex_hessian_fd(lift, z, h=5e-4)
        assert H.hermitian_defect() <= 1e-9 * np.linalg.norm(H.entries)
        assert H.min_eigenvalue_ratio() >= -1e-6


def test_hessian_singular_stencil():
    mu = pl.dirac(pl.normalize([1, 0]))
    lift = pl.psh_lift(mu, 0)
    with pytest.raises(SingularStencil):
        pl.complex_hessian_fd(lift, np.array([1e-3 + 0j]), h=1e-3)


def test_hessian_batch_masks_singular_rows():
    mu = pl.dirac(pl.normalize([1, 0]))
    lift = pl.psh_lift(mu, 0)
    Z = np.array([[1e-3 + 0j], [1.0 + 0j]])
    H, finite = hessian_fd_batch(lift, Z, h=1e-3)
    assert not finite[0] and finite[1]


# ---------- mixed discriminant ---------------------------------------------------

def test_mixed_discriminant_identity_matrices():
    assert abs(pl.mixed_discriminant([np.eye(2), np.eye(2)]) - 1.0) < 1e-14


def test_mixed_discriminant_hand_example():
    A, B = np.diag([1.0, 2.0]), np.diag([3.0, 4.0])
    assert abs(pl.mixed_discriminant([A, B]) - 5.0) < 1e-12


def test_mixed_discriminant_diagonal_is_det():
    rng = np.random.default_rng(6)
    for n in (2, 3):
        A = random_hermitian(n, rng)
        D = pl.mixed_discriminant([A] * n)
        assert abs(D - np.linalg.det(A).real) < 1e-10 * max(1, abs(np.linalg.det(A)))


def test_mixed_discriminant_symmetric_multilinear():
    rng = np.random.default_rng(7)
    A, B, C = (random_hermitian(3, rng) for _ in range(3))
    d1 = pl.mixed_discriminant([A, B, C])
    d2 = pl.mixed_discriminant([C, A, B])
    assert abs(d1 - d2) < 1e-10
    lam = 0.7
    lhs = pl.mixed_discriminant([lam * A + (1 - lam) * B, B, C])
    rhs = lam * pl.mixed_discriminant([A, B, C]) + (1 - lam) * pl.mixed_discriminant([B, B, C])
    assert abs(lhs - rhs) < 1e-10


def test_mixed_discriminant_psd_nonnegative():
    rng = np.random.default_rng(8)
    for _ in range(20):
        mats = []
        for _ in range(3):
            a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            mats.append(a @ a.conj().T)
        assert pl.mixed_discriminant(mats) >= -1e-10


def test_mixed_discriminant_polarization_identity():
    # det(sum t_i A_i) as a polynomial in t matches the multinomial expansion
    rng = np.random.default_rng(9)
    for n in (2, 3):
        mats = [random_hermitian(n, rng) for _ in range(n)]
        from itertools import combinations_with_replacement
        for _ in range(10):
            t = rng.uniform(0.2, 1.5, n)
            lhs = np.linalg.det(sum(ti * A for ti, A in zip(t, mats))).real
            rhs = 0.0
            for ms in combinations_with_replacement(range(n), n):
                mult: dict[int, int] = {}
                for i in ms:
                    mult[i] = mult.get(i, 0) + 1
                coeff = math.factorial(n)
                for c in mult.values():
                    coeff //= math.factorial(c)
                rhs += coeff * float(np.prod([t[i] for i in ms])) \
                    * pl.mixed_discriminant([mats[i] for i in ms])
            assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


def test_mixed_discriminant_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        pl.mixed_discriminant([np.eye(2), np.eye(3)])


# ---------- product-formula expansion check ------------------------------------------

def test_expansion_single_atom_exact_zero():
    nu = pl.AffineAtoms(chart=0, w=np.array([[0.3 + 0.1j, -0.2]]), weights=np.array([1.0]))
    chk = pl.ma_product_expansion_check(nu, np.array([1.0, 1.0], dtype=complex))
    assert chk.residual < 1e-14 * chk.scale


def test_expansion_random_configs():
    rng = np.random.default_rng(10)
    for n in (2, 3):
        for _ in range(10):
            N = rng.integers(2, 5)
            w = rng.uniform(0.2, 1.0, N)
            nu = pl.AffineAtoms(chart=0,
                                w=rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n)),
                                weights=w / w.sum())
            z = 3.0 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
            if np.min(np.linalg.norm(nu.w - z[None, :], axis=1)) < 0.5:
                continue
            chk = pl.ma_product_expansion_check(nu, z, h=1e-3)
            assert chk.relative < 1e-9


def test_expansion_term_cap():
    rng = np.random.default_rng(11)
    N, n = 30, 5
    w = np.full(N, 1.0 / N)
    nu = pl.AffineAtoms(chart=0,
                        w=rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n)),
                        weights=w)
    with pytest.raises(CombinatorialBlowup):
        pl.ma_product_expansion_check(nu, 5.0 * np.ones(n, dtype=complex), term_cap=10**6)


def test_expansion_sampled_fallback():
    rng = np.random.default_rng(12)
    N, n = 5, 2
    w = np.full(N, 1.0 / N)
    nu = pl.AffineAtoms(chart=0,
                        w=rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n)),
                        weights=w)
    z = 4.0 * np.ones(n, dtype=complex)
    chk = pl.ma_product_expansion_check(nu, z, term_cap=10, sample_tuples=20_000, seed=3)
    assert not chk.exact
    assert chk.relative < 0.05  # stochastic estimate of the same identity


# ---------- smooth wedge density ---------------------------------------------------

def brute_force_wedge_term(H_V, H_psi, m, n):
    """Independent polarization: coefficient of s^m t^(n-m) in det(sH_V + tH_psi),
    extracted by polynomial interpolation on a grid of (s, t) values."""
    import numpy.polynomial.polynomial as P
    ss = np.linspace(0.5, 1.5, n + 1)
    vals = [np.linalg.det(s * H_V + H_psi).real for s in ss]
    coeffs = np.polyfit(ss, vals, n)[::-1]  # coeff of s^m is the m-th entry
    return coeffs[m]


def test_smooth_wedge_endpoints():
    rng = np.random.default_rng(13)
    n = 2
    nu = pl.AffineAtoms(chart=0,
                        w=rng.standard_normal((3, n)) + 1j * rng.standard_normal((3, n)),
                        weights=np.array([0.5, 0.25, 0.25]))
    psi = pl.fs_field(n)
    z = np.array([1.2 + 0.1j, -0.7 + 0.4j])
    d0 = pl.smooth_wedge_density(nu, psi, 0, z, h=1e-3)
    dn = pl.smooth_wedge_density(nu, psi, n, z, h=1e-3)
    H_psi = pl.complex_hessian_fd(psi, z, h=1e-3).entries
    H_V = pl.complex_hessian_fd(pl.affine_field(nu), z, h=1e-3).entries
    assert abs(d0 - np.linalg.det(H_psi).real) < 1e-12
    assert abs(dn - np.linalg.det(H_V).real) < 1e-12


def test_smooth_wedge_matches_brute_force_polarization():
    rng = np.random.default_rng(14)
    n = 2
    psi = pl.fs_field(n)
    for _ in range(20):
        nu = pl.AffineAtoms(chart=0,
                            w=rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n)),
                            weights=np.array([0.6, 0.4]))
        z = 2.0 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        if np.min(np.linalg.norm(nu.w - z[None, :], axis=1)) < 0.4:
            continue
        H_V = pl.affine_field(nu).complex_hessian(z)
        H_psi = analytic.fs_hessian_batch(z[None, :])[0]
        for m in (0, 1, 2):
            val = pl.smooth_wedge_density(nu, psi, m, z, h=1e-3)
            ref = brute_force_wedge_term(H_V, H_psi, m, n)
            assert abs(val - ref) < 1e-5 * max(1.0, abs(ref))


# ---------- MA density ----------------------------------------------------------------

def test_ma_density_fs_symmetric_is_one():
    # with no potential (phi = rho) the density is identically 1
    mu = pl.dirac(pl.normalize([1, 0]))
    lift = pl.fs_field(1)
    rng = np.random.default_rng(15)
    for _ in range(5):
        z = rng.standard_normal(1) + 1j * rng.standard_normal(1)
        H_phi = pl.complex_hessian_fd(lift, z, h=1e-4).entries
        H_rho = pl.complex_hessian_fd(pl.fs_field(1), z, h=1e-4).entries
        assert abs(np.linalg.det(H_phi).real / np.linalg.det(H_rho).real - 1.0) < 1e-10


def test_ma_density_unsmoothed_log_abs_vanishes():
    # for n = 1 the unsmoothed lift of a Dirac is log|z|, maximal off the atom
    mu = pl.dirac(pl.normalize([1, 0]))
    rng = np.random.default_rng(16)
    for _ in range(10):
        z = rng.standard_normal(1) + 1j * rng.standard_normal(1)
        if abs(z[0]) < 0.3:
            continue
        val = pl.ma_density(mu, 0, z, h=1e-4, eps=0.0)
        assert 0.0 <= val < 1e-6


def test_ma_density_near_atom_guard():
    mu = pl.dirac(pl.normalize([1, 0]))
    with pytest.raises(SingularStencil):
        pl.ma_density(mu, 0, np.array([5e-4 + 0j]), h=1e-4, eps=0.0)


def test_ma_density_smoothed_dirac_matches_closed_form():
    # n=1 smoothed lift is (1/2) log((1+e^2)|z|^2 + e^2); its density
    # relative to FS volume is d^2 (1+t)^2 / (s + d^2)^2 with s = |z|^2,
    # t = s, d^2 = e^2/(1+e^2)
    mu = pl.dirac(pl.normalize([1, 0]))
    eps = 0.3
    d2 = eps**2 / (1 + eps**2)
    rng = np.random.default_rng(17)
    for _ in range(10):
        z = rng.standard_normal(1) + 1j * rng.standard_normal(1)
        s = abs(z[0]) ** 2
        expected = d2 * (1 + s) ** 2 / (s + d2) ** 2
        val = pl.ma_density(mu, 0, z, h=1e-4, eps=eps)
        assert abs(val - expected) < 1e-5 * max(1.0, expected)


# ---------- total mass -----------------------------------------------------------------

def test_total_mass_requires_positive_eps():
    mu = pl.dirac(pl.normalize([1, 0]))
    with pytest.raises(NonpositiveEpsilon):
        pl.ma_total_mass(mu, grid=32, eps=0.0)


def test_total_mass_n1_single_and_multi_atom():
    mu = pl.dirac(pl.normalize([1, 0]))
    rep = pl.ma_total_mass(mu, grid=128, h=1e-4, eps=0.3)
    assert abs(rep.total_mass - 1.0) < 0.01
    mu4 = random_measure(1, 4, seed=18)
    rep4 = pl.ma_total_mass(mu4, grid=128, h=1e-4, eps=0.3)
    assert abs(rep4.total_mass - 1.0) < 0.01


def test_total_mass_grid_too_coarse():
    mu = pl.dirac(pl.normalize([1, 0]))
    with pytest.raises(GridTooCoarse):
        pl.ma_total_mass(mu, grid=6, h=1e-3, eps=0.3, vol_tol=0.001)


def test_total_mass_worker_independence():
    mu = random_measure(1, 2, seed=19)
    a = pl.ma_total_mass(mu, grid=64, h=1e-4, eps=0.3, workers=1, vol_tol=0.05)
    b = pl.ma_total_mass(mu, grid=64, h=1e-4, eps=0.3, workers=2, vol_tol=0.05)
    assert a.total_mass == b.total_mass


# ---------- ball profiles ----------------------------------------------------------------

def test_ball_profile_dirac_oracle_n1():
    # independent oracle: closed-form radial mass R^2/(R^2 + d^2),
    # R = tan(r / sqrt 2), d^2 = eps^2 / (1 + eps^2)
    center = pl.normalize([1, 0])
    mu = pl.dirac(center)
    for eps in (0.1, 0.03):
        rep = pl.ball_mass_profile(mu, center, [10 * eps], h=1e-4,
                                   eps_list=[eps], points_per_axis=64)[0]
        R = math.tan(10 * eps / math.sqrt(2))
        exact = R * R / (R * R + eps**2 / (1 + eps**2))
        assert abs(rep.total_mass - exact) < 0.01
        assert rep.profile_nondecreasing()


def test_ball_profile_profile_monotone_and_ratios():
    center = pl.normalize([1, 0])
    mu = pl.dirac(center)
    rep = pl.ball_mass_profile(mu, center, [0.6, 0.3, 0.15], h=1e-4,
                               eps_list=[0.1], points_per_axis=64)[0]
    assert rep.profile_nondecreasing()
    assert len(rep.vol_ratios) == 3
    # density concentrates: small balls carry far more than their volume
    assert rep.vol_ratios[0][1] > 1.0


def test_ball_profile_antipodal_center_mass_vanishes():
    eta = pl.normalize([1, 0])
    mu = pl.dirac(eta)
    anti = pl.normalize([0, 1])
    reps = pl.ball_mass_profile(mu, anti, [0.4, 0.2], h=1e-4,
                                eps_list=[0.05], points_per_axis=64)
    masses = [m for _, m in reps[0].ball_profile]
    assert masses[-1] < 0.01 and masses[0] <= masses[-1] + 1e-12


def test_ball_profile_excision_diagnostic():
    center = pl.normalize([1, 0])
    mu = pl.dirac(center)
    rep = pl.ball_mass_profile(mu, center, [0.5], h=1e-3, eps_list=[0.0],
                               points_per_axis=64)[0]
    # excised region is a bounded small volume; the smooth part of the
    # unsmoothed Dirac potential carries no appreciable mass for n = 1
    # (the residual ~ 2e-3 is rectified FD noise at the excision ring,
    # bounded independently of h by the 10h excision rule)
    assert 0.0 < rep.excised_singular_mass < 0.01
    assert rep.total_mass < 0.01


def test_total_mass_pure_volume_check_is_one():
    # with phi = rho (no potential) the integral is the chi-weighted FS
    # volume itself, which the report carries as vol_check
    mu = pl.dirac(pl.normalize([1, 0]))
    rep = pl.ma_total_mass(mu, grid=128, h=1e-4, eps=0.3)
    assert abs(rep.vol_check - 1.0) < 1e-3
