import math

import numpy as np
import pytest

import projlog as pl
from projlog.errors import NonpositiveEpsilon
from projlog.kernels import sin_distance_residual


def random_point(n, rng):
    return pl.normalize(rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1))


def random_affine(n, rng, scale=1.0):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


# ---------- projective kernel ------------------------------------------------

def test_kernel_orthogonal_pair_is_zero():
    k = pl.projective_log_kernel(pl.normalize([1, 0]), pl.normalize([0, 1]))
    assert k.value == 0.0 and not k.is_singular


def test_kernel_diagonal_singular():
    p = pl.normalize([1, 2j, 3])
    k = pl.projective_log_kernel(p, p)
    assert k.is_singular and k.value == -math.inf


def test_kernel_matches_log_sin_example():
    eta = pl.normalize([math.cos(0.3), math.sin(0.3)])
    k = pl.projective_log_kernel(pl.normalize([1, 0]), eta)
    assert abs(k.value - math.log(math.sin(0.3))) < 1e-14


def test_sin_distance_identity_random():
    rng = np.random.default_rng(1)
    for n in (1, 2, 3, 4):
        for _ in range(200):
            a, b = random_point(n, rng), random_point(n, rng)
            assert sin_distance_residual(a, b) < 1e-12


def test_kernel_nonpositive_and_exactly_symmetric():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = rng.integers(1, 4)
        a, b = random_point(n, rng), random_point(n, rng)
        kab = pl.projective_log_kernel(a, b).value
        kba = pl.projective_log_kernel(b, a).value
        assert kab == kba  # same fp expression ordering
        assert kab <= 0.0


# ---------- affine wedge and kernel -------------------------------------------

def test_affine_wedge_n1_vanishes():
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert pl.affine_wedge_norm_sq(random_affine(1, rng), random_affine(1, rng)) == 0.0


def test_affine_wedge_examples():
    assert pl.affine_wedge_norm_sq(np.array([1, 0.0j]), np.array([0, 1.0j])) == 1.0
    val = pl.affine_wedge_norm_sq(np.array([1.0, 2.0], dtype=complex),
                                  np.array([3.0, 4.0], dtype=complex))
    assert abs(val - 4.0) < 1e-14


def test_wedge_consistency_with_homogeneous():
    # for lifts (1, z), (1, w): full wedge = |z-w|^2 + affine wedge
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = rng.integers(1, 5)
        z, w = random_affine(n, rng), random_affine(n, rng)
        lhs = pl.wedge_norm_sq(np.concatenate([[1.0], z]), np.concatenate([[1.0], w]))
        rhs = float(np.sum(np.abs(z - w) ** 2)) + pl.affine_wedge_norm_sq(z, w)
        assert abs(lhs - rhs) < 1e-12 * max(1.0, rhs)


def test_affine_kernel_examples():
    z = np.array([1.0, 0.0], dtype=complex)
    assert pl.affine_log_kernel(z, np.zeros(2)).value == 0.0  # log|z| at |z|=1
    v = pl.affine_log_kernel(np.zeros(2), z)
    assert abs(v.value + 0.5 * math.log(2)) < 1e-15
    assert pl.affine_log_kernel(z, z).is_singular


def test_affine_kernel_log_abs_at_origin_measure():
    rng = np.random.default_rng(5)
    for _ in range(20):
        z = random_affine(3, rng)
        v = pl.affine_log_kernel(z, np.zeros(3)).value
        assert abs(v - math.log(np.linalg.norm(z))) < 1e-13


# ---------- smoothed kernel -----------------------------------------------------

def test_smoothed_kernel_diagonal_is_log_eps():
    z = np.array([0.3 + 1j, -2.0], dtype=complex)
    for eps in (0.5, 0.1, 1e-3):
        assert abs(pl.affine_log_kernel_smoothed(z, z, eps) - math.log(eps)) < 1e-13


def test_smoothed_kernel_monotone_and_bounded_increment():
    rng = np.random.default_rng(6)
    for _ in range(10_000):
        n = rng.integers(1, 4)
        z, w = random_affine(n, rng), random_affine(n, rng)
        e1, e2 = sorted(rng.uniform(1e-3, 1.0, size=2))
        lo = pl.affine_log_kernel_smoothed(z, w, e1)
        hi = pl.affine_log_kernel_smoothed(z, w, e2)
        assert hi >= lo  # monotone in eps
        base = pl.affine_log_kernel(z, w).value
        assert hi >= base
        # log(x + e^2) - log(x) <= e^2 / x
        from projlog.kernels import _affine_log_arg_batch
        arg = float(_affine_log_arg_batch(z, w)[0])
        assert hi - base <= e2 * e2 / (2 * arg) + 1e-12


def test_smoothed_kernel_rejects_bad_eps():
    z = np.zeros(2)
    with pytest.raises(NonpositiveEpsilon):
        pl.affine_log_kernel_smoothed(z, z, 0.0)


# ---------- chart identity --------------------------------------------------------

def test_chart_identity_random_pairs():
    rng = np.random.default_rng(7)
    for n in (1, 2, 3):
        for _ in range(300):
            a = pl.normalize(np.concatenate([[1.0], random_affine(n, rng)]))
            b = pl.normalize(np.concatenate([[1.0], random_affine(n, rng)]))
            assert pl.chart_identity_residual(a, b) < 1e-12


def test_chart_identity_diagonal_zero():
    p = pl.normalize([1, 2, 3j])
    assert pl.chart_identity_residual(p, p) == 0.0


def test_chart_identity_near_floor_stable():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = 2
        tail = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        tail /= np.linalg.norm(tail)
        a = pl.normalize(np.concatenate([[1e-6], tail]))
        b = pl.normalize(np.concatenate([[1.0], random_affine(n, rng)]))
        assert pl.chart_identity_residual(a, b) < 1e-9


# ---------- two-sided bounds --------------------------------------------------------

def test_bounds_diagonal():
    z = np.array([1.0, 2.0], dtype=complex)
    assert pl.kernel_bounds_check(z, z) == (True, True)


def test_bounds_random_pairs():
    rng = np.random.default_rng(9)
    z = rng.standard_normal((100_000, 2)) + 1j * rng.standard_normal((100_000, 2))
    w = rng.standard_normal((100_000, 2)) + 1j * rng.standard_normal((100_000, 2))
    # vectorized check of the same inequality the scalar op enforces
    from projlog.kernels import _affine_log_arg_batch
    diff = np.sum(np.abs(z - w) ** 2, axis=1)
    denom = 1.0 + np.sum(np.abs(w) ** 2, axis=1)
    arg = _affine_log_arg_batch(z, w)
    upper = 1.0 + np.sum(np.abs(z) ** 2, axis=1)
    assert np.all(diff / denom <= arg * (1 + 1e-12))
    assert np.all(arg <= upper * (1 + 1e-12))


def test_bounds_scalar_samples():
    rng = np.random.default_rng(10)
    for _ in range(200):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert pl.kernel_bounds_check(z, w) == (True, True)


def test_bounds_at_w_zero():
    rng = np.random.default_rng(11)
    for _ in range(50):
        z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert pl.kernel_bounds_check(z, np.zeros(3)) == (True, True)


# ---------- analytic properties ------------------------------------------------------

def test_radial_derivative_of_log_sin():
    # d/dr log sin(r / sqrt 2) = cot(r / sqrt 2) / sqrt 2 along a geodesic
    eta = pl.normalize([1, 0])
    for r in (0.4, 0.9, 1.6):
        h = 1e-4

        def f(t):
            p = pl.normalize([math.cos(t / math.sqrt(2)), math.sin(t / math.sqrt(2))])
            return pl.projective_log_kernel(p, eta).value

        fd = (f(r + h) - f(r - h)) / (2 * h)
        exact = 1.0 / (math.tan(r / math.sqrt(2)) * math.sqrt(2))
        assert abs(fd - exact) < 1e-6


def test_submean_property_of_affine_kernel():
    # 64-point circle average of N(z + r e^(i theta) v, w) >= N(z, w)
    rng = np.random.default_rng(12)
    thetas = np.exp(1j * np.linspace(0, 2 * math.pi, 64, endpoint=False))
    for _ in range(100):
        n = rng.integers(1, 4)
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        r = rng.uniform(0.01, 0.1)
        center = pl.affine_log_kernel(z, w).value
        ring = np.mean([pl.affine_log_kernel(z + r * t * v, w).value for t in thetas])
        assert ring >= center - 1e-9
