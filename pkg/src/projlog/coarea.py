"""Radial (co-area) quadrature on P^n.

Under the unit-volume convention the geodesic-sphere area density is

    A(r) = c_n sin^(2n-2)(r / sqrt 2) sin(sqrt 2 r),   0 <= r <= pi / sqrt 2,

with c_n = n / sqrt 2 fixed by int A dr = 1 (the antiderivative of A is
sin^(2n)(r / sqrt 2), so the integral is sqrt(2) c_n / n).  A radial
integral over P^n reduces, after the substitution u = sin(r / sqrt 2), to

    int f(r) A(r) dr = 2 sqrt(2) c_n int_0^1 f(sqrt 2 arcsin u) u^(2n-1) du,

which turns the log singularity of the kernel mean into the elementary
integral of u^(2n-1) log u.  adaptive Gauss-Kronrod (QUADPACK) does the rest.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import NonConvergent

SQRT2 = math.sqrt(2.0)


def area_constant(n: int) -> float:
    """c_n = n / sqrt 2 under the unit-volume convention."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return n / SQRT2


def area_constant_quadrature(n: int) -> float:
    """c_n recomputed by numerically solving int A(r) dr = 1 (oracle path)."""
    raw, _ = integrate.quad(
        lambda r: math.sin(r / SQRT2) ** (2 * n - 2) * math.sin(SQRT2 * r),
        0.0, math.pi / SQRT2, epsabs=1e-14, epsrel=1e-13, limit=200,
    )
    return 1.0 / raw


def sphere_area(n: int, r) -> np.ndarray | float:
    """A(r), the area density of the geodesic sphere of radius r."""
    r = np.asarray(r, dtype=float)
    out = area_constant(n) * np.sin(r / SQRT2) ** (2 * n - 2) * np.sin(SQRT2 * r)
    return float(out) if out.ndim == 0 else out


def radial_quadrature(f, n: int, rel_tol: float = 1e-10) -> float:
    """int_0^(pi/sqrt 2) f(r) A(r) dr by adaptive Gauss-Kronrod.

    Uses the endpoint substitution u = sin(r / sqrt 2); f may have a known
    integrable log/power singularity at r = 0.  Raises NonConvergent when the
    QUADPACK error estimate exceeds the relative target.
    """
    pref = 2.0 * SQRT2 * area_constant(n)

    def integrand(u: float) -> float:
        return f(SQRT2 * math.asin(u)) * u ** (2 * n - 1)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-14,
                                  epsrel=rel_tol / 10.0, limit=400)
    val *= pref
    err *= pref
    if err > rel_tol * max(abs(val), 1e-8):
        raise NonConvergent(
            f"radial quadrature error estimate {err:.2e} exceeds target "
            f"{rel_tol:.1e} * {abs(val):.3e}"
        )
    return val


def mean_log_kernel(n: int) -> float:
    """Quadrature value of int log sin(r / sqrt 2) A(r) dr = -1/(2n).

    The closed form follows from int_0^1 u^(2n-1) log u du = -1/(2n)^2; this
    routine returns the adaptive-quadrature value so the identity can be
    checked against mean_log_kernel_closed_form.
    """
    pref = 2.0 * SQRT2 * area_constant(n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        # QUADPACK QAWS with weight u^(2n-1) log u and unit remainder
        val, err = integrate.quad(lambda u: 1.0, 0.0, 1.0,
                                  weight="alg-loga", wvar=(2 * n - 1, 0))
    if err > 1e-11:
        raise NonConvergent(f"log-kernel mean error estimate {err:.2e}")
    return pref * val


def mean_log_kernel_closed_form(n: int) -> float:
    """-c_n / (sqrt 2 n^2) = -1/(2n) under the unit-volume convention."""
    return -area_constant(n) / (SQRT2 * n * n)


def sobolev_bound(n: int, p: float) -> float:
    """2 sqrt(2) c_n int_0^(pi/2) sin^(2n-1-p) t dt; +inf iff p >= 2n.

    Adaptive quadrature; the endpoint power t^(2n-1-p) is handled by
    QUADPACK's algebraic-weight rule when the exponent is negative.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    if p >= 2 * n:
        return math.inf
    q = 2 * n - 1 - p
    pref = 2.0 * SQRT2 * area_constant(n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if q >= 0:
            val, err = integrate.quad(lambda t: math.sin(t) ** q, 0.0, math.pi / 2,
                                      epsabs=1e-14, epsrel=1e-12, limit=200)
        else:
            # sin^q t = t^q (sin t / t)^q with the power split into the weight
            val, err = integrate.quad(lambda t: float(np.sinc(t / math.pi)) ** q,
                                      0.0, math.pi / 2, weight="alg", wvar=(q, 0))
    if err > 1e-9 * max(abs(val), 1.0):
        raise NonConvergent(f"sobolev bound error estimate {err:.2e}")
    return pref * val


def sobolev_bound_closed_form(n: int, p: float) -> float:
    """Beta-function form: sqrt 2 c_n B((2n-p)/2, 1/2), +inf for p >= 2n."""
    if p >= 2 * n:
        return math.inf
    q = 2 * n - 1 - p
    return SQRT2 * area_constant(n) * special.beta((q + 1) / 2.0, 0.5)


def wallis_sin_power_integral(m: int) -> float:
    """int_0^(pi/2) sin^m t dt by the Wallis recursion I_m = I_(m-2) (m-1)/m."""
    if m < 0:
        raise ValueError("m must be >= 0")
    val = math.pi / 2.0 if m % 2 == 0 else 1.0
    for k in range(2 if m % 2 == 0 else 3, m + 1, 2):
        val *= (k - 1) / k
    return val


@dataclass(frozen=True)
class RadialProfile:
    """Fixed radial quadrature rule for fast repeated co-area integrals."""

    n: int
    c_n: float
    nodes: np.ndarray = field(repr=False)    # radii in (0, pi/sqrt 2)
    weights: np.ndarray = field(repr=False)  # weights against A(r) dr

    @staticmethod
    def build(n: int, num_nodes: int = 256) -> "RadialProfile":
        """Gauss-Legendre rule in the u = sin(r / sqrt 2) variable."""
        u, wu = np.polynomial.legendre.leggauss(num_nodes)
        u = 0.5 * (u + 1.0)
        wu = 0.5 * wu
        r = SQRT2 * np.arcsin(u)
        w = 2.0 * SQRT2 * area_constant(n) * u ** (2 * n - 1) * wu
        return RadialProfile(n=n, c_n=area_constant(n), nodes=r, weights=w)

    def integrate(self, f) -> float:
        """int f(r) A(r) dr with the fixed rule; f must accept arrays."""
        return float(np.sum(self.weights * f(self.nodes)))

    def total_mass(self) -> float:
        return float(np.sum(self.weights))
