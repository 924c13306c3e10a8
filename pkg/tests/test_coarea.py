import math

import numpy as np
import pytest
from scipy import integrate

import projlog as pl
from projlog.coarea import (
    RadialProfile,
    area_constant_quadrature,
    mean_log_kernel_closed_form,
    sobolev_bound_closed_form,
    wallis_sin_power_integral,
)

SQRT2 = math.sqrt(2.0)


def test_area_constant_closed_form_vs_quadrature():
    for n in range(1, 7):
        assert abs(pl.area_constant(n) - n / SQRT2) < 1e-15
        assert abs(area_constant_quadrature(n) - n / SQRT2) < 1e-12


def test_area_density_endpoints_and_unit_mass():
    for n in (1, 2, 3):
        assert pl.sphere_area(n, 0.0) == 0.0
        assert abs(pl.sphere_area(n, math.pi / SQRT2)) < 1e-15
        assert abs(pl.radial_quadrature(lambda r: 1.0, n) - 1.0) < 1e-10


def test_mean_log_kernel_matches_closed_form():
    for n in range(1, 7):
        quad_val = pl.mean_log_kernel(n)
        assert abs(quad_val - (-1.0 / (2 * n))) < 1e-10
        assert abs(mean_log_kernel_closed_form(n) - (-1.0 / (2 * n))) < 1e-15


def test_substitution_identity_both_routes():
    # direct r-integral against A(r) vs 2 sqrt2 c_n int u^(2n-1) log u du
    for n in (1, 2, 3):
        direct, _ = integrate.quad(
            lambda r: math.log(math.sin(r / SQRT2)) * pl.sphere_area(n, r),
            0.0, math.pi / SQRT2, epsabs=1e-13, epsrel=1e-12, limit=400)
        closed = 2.0 * SQRT2 * pl.area_constant(n) * (-1.0 / (2 * n) ** 2)
        assert abs(direct - closed) < 1e-10


def test_sobolev_bound_examples():
    assert abs(pl.sobolev_bound(1, 1) - math.pi) < 1e-12
    assert pl.sobolev_bound(1, 2) == math.inf
    assert pl.sobolev_bound(2, 4) == math.inf
    assert pl.sobolev_bound(2, 3.999) < math.inf


def test_sobolev_bound_wallis_cross_check():
    for n in (1, 2, 3):
        expected = 2 * SQRT2 * pl.area_constant(n) * wallis_sin_power_integral(2 * n - 1)
        assert abs(pl.sobolev_bound(n, 0.0) - expected) < 1e-10


def test_sobolev_bound_beta_closed_form():
    for n in (1, 2):
        for p in (0.5, 1.0, 2.0, 2 * n - 0.25):
            if p >= 2 * n:
                continue
            assert abs(pl.sobolev_bound(n, p) - sobolev_bound_closed_form(n, p)) \
                < 1e-9 * max(1.0, sobolev_bound_closed_form(n, p))


def test_sobolev_bound_monotone_in_p():
    for n in (1, 2):
        ps = np.linspace(1.0, 2 * n - 0.05, 12)
        vals = [pl.sobolev_bound(n, p) for p in ps]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_radial_quadrature_log_singularity():
    for n in (1, 2):
        val = pl.radial_quadrature(lambda r: math.log(math.sin(r / SQRT2)), n)
        assert abs(val - (-1.0 / (2 * n))) < 1e-10


def test_radial_quadrature_mean_distance():
    val = pl.radial_quadrature(lambda r: r, 1)
    assert abs(val - math.pi / (2 * SQRT2)) < 1e-10


def test_radial_profile_rule():
    for n in (1, 2, 4):
        prof = RadialProfile.build(n)
        assert abs(prof.total_mass() - 1.0) < 1e-10
        assert abs(prof.integrate(lambda r: np.log(np.sin(r / SQRT2)))
                   - (-1.0 / (2 * n))) < 1e-4  # fixed rule, log endpoint
        assert abs(prof.integrate(lambda r: r * 0 + 1.0) - 1.0) < 1e-10
