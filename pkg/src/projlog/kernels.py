"""Logarithmic kernels on P^n x P^n and their affine-chart forms.

The projective kernel is log of the wedge ratio,

    K(zeta, eta) = log ( |zeta ^ eta| / (|zeta| |eta|) )  <= 0,

which equals log sin(d(zeta, eta) / sqrt 2).  Its restriction to a chart is
the affine kernel

    N(z, w) = (1/2) log ( (|z - w|^2 + |z ^ w|^2) / (1 + |w|^2) ),

related by K = N(z, w) - rho(z) with rho the local Kahler potential.  Both
are -inf exactly on the diagonal; KernelValue carries an explicit singular
flag so downstream quadrature can excise singular cells deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonpositiveEpsilon
from .geometry import (
    HomogeneousPoint,
    fs_potential,
    geodesic_distance,
    to_chart,
    wedge_norm_sq_batch,
)

#: library-wide tolerance for closed identities (accommodates log/norm rounding)
EXACT_TOL = 1e-12


@dataclass(frozen=True)
class KernelValue:
    """A kernel evaluation; value is -inf iff is_singular."""

    value: float
    is_singular: bool = False

    def __float__(self) -> float:
        return self.value


def _pair_coords(zeta, eta):
    a = zeta.coords if isinstance(zeta, HomogeneousPoint) else np.asarray(zeta, dtype=complex)
    b = eta.coords if isinstance(eta, HomogeneousPoint) else np.asarray(eta, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch(f"points live in P^{a.shape[-1]-1} vs P^{b.shape[-1]-1}")
    return a, b


def projective_log_kernel_batch(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """log wedge-ratio for batches; -inf rows mark the diagonal."""
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    w2 = wedge_norm_sq_batch(u, v)
    nu = np.sum(np.abs(u) ** 2, axis=1)
    nv = np.sum(np.abs(np.asarray(v, dtype=complex)) ** 2, axis=-1)
    ratio = np.clip(w2 / (nu * nv), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        return 0.5 * np.log(ratio)


def projective_log_kernel(zeta, eta) -> KernelValue:
    """The kernel on P^n x P^n; symmetric, <= 0, singular on the diagonal."""
    a, b = _pair_coords(zeta, eta)
    w2 = wedge_norm_sq_batch(a, b)[0]
    if w2 == 0.0:
        return KernelValue(-math.inf, is_singular=True)
    na = np.sum(np.abs(a) ** 2)
    nb = np.sum(np.abs(b) ** 2)
    return KernelValue(0.5 * math.log(min(float(w2 / (na * nb)), 1.0)))


def affine_wedge_norm_sq(z, w) -> float:
    """|z ^ w|^2 = sum over 1 <= i < j <= n of |z_i w_j - z_j w_i|^2.

    Identically zero for n = 1 (no 2x2 minors).
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if z.shape != w.shape:
        raise DimensionMismatch(f"length {z.shape} vs {w.shape}")
    return float(wedge_norm_sq_batch(z[None, :], w)[0])


def _affine_log_arg_batch(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(|z - w|^2 + |z ^ w|^2) / (1 + |w|^2), batched over rows of z."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    w = np.asarray(w, dtype=complex)
    diff = np.sum(np.abs(z - w) ** 2, axis=-1)
    wedge = wedge_norm_sq_batch(z, w)
    return (diff + wedge) / (1.0 + np.sum(np.abs(w) ** 2, axis=-1))


def affine_log_kernel_batch(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 0.5 * np.log(_affine_log_arg_batch(z, w))


def affine_log_kernel(z, w) -> KernelValue:
    """The chart kernel N(z, w); plurisubharmonic in z, singular at z = w."""
    arg = float(_affine_log_arg_batch(np.asarray(z, dtype=complex), w)[0])
    if arg == 0.0:
        return KernelValue(-math.inf, is_singular=True)
    return KernelValue(0.5 * math.log(arg))


def affine_log_kernel_smoothed(z, w, eps: float) -> float:
    """N_eps(z, w) = (1/2) log(arg + eps^2); smooth, decreases to N as eps -> 0."""
    if eps <= 0.0:
        raise NonpositiveEpsilon(f"eps = {eps} must be > 0")
    arg = float(_affine_log_arg_batch(np.asarray(z, dtype=complex), w)[0])
    return 0.5 * math.log(arg + eps * eps)


def chart_identity_residual(zeta, eta, chart: int = 0) -> float:
    """| K(zeta,eta) - (N(z,w) - rho(z)) | in the given chart.

    Both sides are -inf on the diagonal; the residual is defined as 0 there.
    """
    z = to_chart(zeta if isinstance(zeta, HomogeneousPoint) else HomogeneousPoint(zeta), chart)
    w = to_chart(eta if isinstance(eta, HomogeneousPoint) else HomogeneousPoint(eta), chart)
    lhs = projective_log_kernel(zeta, eta)
    rhs = affine_log_kernel(z.z, w.z)
    if lhs.is_singular and rhs.is_singular:
        return 0.0
    return abs(lhs.value - (rhs.value - fs_potential(z.z)))


def kernel_bounds_check(z, w, slack: float = EXACT_TOL) -> tuple[bool, bool]:
    """Two-sided bound on the chart kernel:

    (1/2) log(|z-w|^2 / (1+|w|^2))  <=  N(z,w)  <=  (1/2) log(1+|z|^2).

    Returns (lower_ok, upper_ok) with the given slack.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    value = affine_log_kernel(z, w).value
    d2 = float(np.sum(np.abs(z - w) ** 2))
    with np.errstate(divide="ignore"):
        lower = 0.5 * (np.log(d2) - np.log1p(float(np.sum(np.abs(w) ** 2))))
    upper = fs_potential(z)
    lower_ok = bool(lower <= value + slack)
    upper_ok = bool(value <= upper + slack)
    return lower_ok, upper_ok


def sin_distance_residual(zeta, eta) -> float:
    """| K(zeta,eta) - log sin(d(zeta,eta)/sqrt 2) |, 0 on the diagonal."""
    k = projective_log_kernel(zeta, eta)
    if k.is_singular:
        return 0.0
    d = geodesic_distance(zeta, eta)
    return abs(k.value - math.log(math.sin(d / math.sqrt(2.0))))
