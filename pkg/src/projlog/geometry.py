"""Homogeneous coordinates, chart atlas and Fubini-Study geometry on P^n.

Conventions used throughout the library:

* Points of P^n are stored in canonical form: unit Euclidean norm, and the
  first component of largest modulus is real and positive.  Two points are
  equal iff their canonical coordinates agree componentwise within 1e-12.
* The Fubini-Study volume is normalized to total mass 1 on P^n.  With the
  local Kahler potential rho(z) = (1/2) log(1 + |z|^2) the volume density
  relative to Lebesgue measure in a chart is
  det H_rho = 2^-n (1 + |z|^2)^-(n+1), whose integral over C^n is
  2^-n pi^n / n!; FS_VOLUME_NORM(n) divides that out.
* The geodesic distance is d(zeta, eta) = sqrt(2) * arcsin of the wedge
  ratio |zeta ^ eta| / (|zeta| |eta|); its range is [0, pi/sqrt(2)].  The
  real Riemannian metric consistent with this normalization is
  4 * H_rho, which makes |grad d| = 1 (checked numerically in the tests).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartUndefined, DimensionMismatch, ZeroVector

#: componentwise tolerance for canonical-form equality
CANONICAL_TOL = 1e-12

#: minimum |zeta_k| / |zeta| for a chart to be usable
CHART_FLOOR = 1e-10

#: maximal geodesic distance on P^n
MAX_DISTANCE = math.pi / math.sqrt(2.0)

#: samples per RNG block; the stream for sample index i depends only on
#: (seed, i // _CHUNK) and the offset within the block, never on how many
#: samples are requested or on any worker count.
_CHUNK = 4096


# ---------------------------------------------------------------------------
# canonical form
# ---------------------------------------------------------------------------

def canonicalize_batch(raw: np.ndarray) -> np.ndarray:
    """Canonicalize rows of an (m, n+1) complex array in place-free fashion."""
    raw = np.asarray(raw, dtype=complex)
    if raw.ndim == 1:
        return canonicalize_batch(raw[None, :])[0]
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
        raise ZeroVector("cannot canonicalize a zero or non-finite vector")
    v = raw / norms[:, None]
    mods = np.abs(v)
    piv = np.argmax(mods, axis=1)  # first index attaining the max modulus
    rows = np.arange(v.shape[0])
    pivots = v[rows, piv]
    v = v * np.conj(pivots / np.abs(pivots))[:, None]
    # force the pivot exactly real-positive (kills 1e-17 phase residue)
    v[rows, piv] = np.abs(v[rows, piv])
    return v


@dataclass(frozen=True, eq=False)
class HomogeneousPoint:
    """A point of P^n held as a canonical complex (n+1)-vector."""

    coords: np.ndarray

    @property
    def n(self) -> int:
        return self.coords.shape[0] - 1

    def equals(self, other: "HomogeneousPoint", tol: float = CANONICAL_TOL) -> bool:
        if self.coords.shape != other.coords.shape:
            return False
        return bool(np.max(np.abs(self.coords - other.coords)) <= tol)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HomogeneousPoint) and self.equals(other)

    def canonical_key(self, decimals: int = 9) -> tuple:
        """Rounded canonical coordinates, usable as a dict key.

        Rounding makes the key deterministic but points straddling a rounding
        boundary may hash apart; use :meth:`equals` for exact decisions.
        """
        r = np.round(self.coords.view(float), decimals) + 0.0
        return tuple(r.tolist())

    def to_json(self) -> list:
        return [[float(c.real), float(c.imag)] for c in self.coords]

    @staticmethod
    def from_json(data: list) -> "HomogeneousPoint":
        arr = np.array([complex(re, im) for re, im in data])
        return normalize(arr)

    def __repr__(self) -> str:
        inner = " : ".join(f"{c:.6g}" for c in self.coords)
        return f"[{inner}]"


@dataclass(frozen=True)
class AffinePoint:
    """Affine coordinates z_j = zeta_j / zeta_k (j != k) in chart k."""

    chart: int
    z: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.z.shape[0]


def normalize(raw) -> HomogeneousPoint:
    """Canonical representative of [raw]; scale invariant, raises ZeroVector."""
    arr = np.asarray(raw, dtype=complex)
    if arr.ndim != 1 or arr.size < 2:
        raise DimensionMismatch("homogeneous coordinates must be a vector of length >= 2")
    if not np.all(np.isfinite(arr.view(float))):
        raise ZeroVector("non-finite homogeneous coordinates")
    if np.linalg.norm(arr) == 0.0:
        raise ZeroVector("zero vector does not define a projective point")
    return HomogeneousPoint(canonicalize_batch(arr))


def _coords(p) -> np.ndarray:
    return p.coords if isinstance(p, HomogeneousPoint) else np.asarray(p, dtype=complex)


# ---------------------------------------------------------------------------
# wedge norm and distance
# ---------------------------------------------------------------------------

def wedge_norm_sq_batch(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Sum of squared 2x2 minors |u_i v_j - u_j v_i|^2 over i < j, batched.

    Accepts (m, k) against (m, k) or (k,) and broadcasts.  Computed from the
    minors directly, which stays accurate near the diagonal where the
    Lagrange form |u|^2 |v|^2 - |<u, v>|^2 would cancel catastrophically.
    The i < j pair order makes the result bitwise symmetric in (u, v).
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.ndim == 1:
        u = u[None, :]
    if v.ndim == 1:
        v = np.broadcast_to(v, u.shape)
    if u.shape[-1] != v.shape[-1]:
        raise DimensionMismatch(f"length {u.shape[-1]} vs {v.shape[-1]}")
    i, j = np.triu_indices(u.shape[-1], k=1)
    # explicit real arithmetic: float multiply/add are bitwise commutative,
    # so swapping u and v negates each minor exactly and the squared sum is
    # bitwise symmetric (numpy's fused complex multiply is not)
    ur, ui = np.ascontiguousarray(u.real), np.ascontiguousarray(u.imag)
    vr, vi = np.broadcast_to(v.real, u.shape), np.broadcast_to(v.imag, u.shape)
    re = (ur[:, i] * vr[:, j] - ui[:, i] * vi[:, j]) \
        - (ur[:, j] * vr[:, i] - ui[:, j] * vi[:, i])
    im = (ur[:, i] * vi[:, j] + ui[:, i] * vr[:, j]) \
        - (ur[:, j] * vi[:, i] + ui[:, j] * vr[:, i])
    return np.sum(re * re + im * im, axis=1)


def wedge_norm_sq(zeta, eta) -> float:
    """|zeta ^ eta|^2 for two homogeneous vectors (or points)."""
    return float(wedge_norm_sq_batch(_coords(zeta), _coords(eta))[0])


def _wedge_ratio_batch(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """|u ^ v| / (|u| |v|), clipped into [0, 1]."""
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    w2 = wedge_norm_sq_batch(u, v)
    nu = np.sum(np.abs(u) ** 2, axis=1)
    nv = np.sum(np.abs(np.asarray(v, dtype=complex)) ** 2, axis=-1)
    ratio = np.sqrt(np.clip(w2 / (nu * nv), 0.0, 1.0))
    return ratio


def geodesic_distance_batch(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return math.sqrt(2.0) * np.arcsin(_wedge_ratio_batch(u, v))


def geodesic_distance(zeta, eta) -> float:
    """Fubini-Study geodesic distance, in [0, pi/sqrt(2)]."""
    return float(geodesic_distance_batch(_coords(zeta), _coords(eta))[0])


# ---------------------------------------------------------------------------
# chart atlas
# ---------------------------------------------------------------------------

def to_chart(zeta: HomogeneousPoint, k: int, chart_floor: float = CHART_FLOOR) -> AffinePoint:
    """Affine coordinates of zeta in chart k; ChartUndefined below the floor."""
    c = _coords(zeta)
    k = int(k)
    if not 0 <= k < c.shape[0]:
        raise ChartUndefined(f"chart index {k} out of range for P^{c.shape[0]-1}")
    scale = abs(c[k]) / np.linalg.norm(c)
    if scale <= chart_floor:
        raise ChartUndefined(
            f"|zeta_{k}|/|zeta| = {scale:.3e} <= chart_floor = {chart_floor:.1e}"
        )
    z = np.delete(c, k) / c[k]
    return AffinePoint(chart=k, z=z)


def from_chart(a: AffinePoint) -> HomogeneousPoint:
    """Inverse of to_chart up to canonical equality."""
    return normalize(chart_lift(a.z, a.chart))


def chart_lift(z: np.ndarray, k: int) -> np.ndarray:
    """Insert 1 at slot k: the homogeneous lift of affine coordinates.

    Accepts (n,) or (m, n); the result is not normalized.
    """
    z = np.asarray(z, dtype=complex)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    m, n = z.shape
    out = np.empty((m, n + 1), dtype=complex)
    out[:, :k] = z[:, :k]
    out[:, k] = 1.0
    out[:, k + 1:] = z[:, k:]
    return out[0] if single else out


def max_modulus_chart(zeta) -> int:
    """Index of the component of largest modulus (first on ties)."""
    return int(np.argmax(np.abs(_coords(zeta))))


# ---------------------------------------------------------------------------
# Fubini-Study potential, metric and volume
# ---------------------------------------------------------------------------

def fs_potential(z) -> np.ndarray | float:
    """Local Kahler potential rho(z) = (1/2) log(1 + |z|^2); batch-aware."""
    z = np.asarray(z, dtype=complex)
    t = np.sum(np.abs(z) ** 2, axis=-1)
    out = 0.5 * np.log1p(t)
    return float(out) if out.ndim == 0 else out


def fs_metric(z: np.ndarray) -> np.ndarray:
    """Complex Hessian H_rho of the Kahler potential at z (Hermitian n x n)."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    t = 1.0 + np.sum(np.abs(z) ** 2)
    return 0.5 * (t * np.eye(n) - np.outer(np.conj(z), z)) / t**2


def fs_metric_inverse(z: np.ndarray) -> np.ndarray:
    """Closed-form inverse of fs_metric: 2 (1 + |z|^2) (I + conj(z) z^T)."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    t = 1.0 + np.sum(np.abs(z) ** 2)
    return 2.0 * t * (np.eye(n) + np.outer(np.conj(z), z))


def fs_gradient_norm_sq(z: np.ndarray, fz: np.ndarray) -> np.ndarray:
    """Squared FS-Riemannian gradient norm from holomorphic derivatives.

    For a real function f with Wirtinger derivatives fz = (df/dz_j),
    |grad f|^2 = 2 (1 + |z|^2) (|fz|^2 + |z . fz|^2) under the distance
    normalization above (so |grad d| = 1).  Batched over leading axes.
    """
    z = np.asarray(z, dtype=complex)
    fz = np.asarray(fz, dtype=complex)
    t = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)
    dot = np.sum(z * fz, axis=-1)
    return 2.0 * t * (np.sum(np.abs(fz) ** 2, axis=-1) + np.abs(dot) ** 2)


def fs_volume_density(z) -> np.ndarray | float:
    """det H_rho = 2^-n (1 + |z|^2)^-(n+1), the unnormalized FS volume density."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    t = np.sum(np.abs(z) ** 2, axis=-1)
    out = 2.0 ** (-n) * (1.0 + t) ** (-(n + 1))
    return float(out) if out.ndim == 0 else out


def fs_volume_norm(n: int) -> float:
    """Integral of fs_volume_density over C^n: 2^-n pi^n / n!."""
    return 2.0 ** (-n) * math.pi**n / math.factorial(n)


def fs_ball_volume(n: int, r) -> np.ndarray | float:
    """Normalized FS volume of a geodesic ball: sin^(2n)(r / sqrt(2)).

    Radii beyond the diameter pi/sqrt(2) cover all of P^n (volume 1).
    """
    r = np.minimum(np.asarray(r, dtype=float), MAX_DISTANCE)
    return np.sin(r / math.sqrt(2.0)) ** (2 * n)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _sample_stream(seed: int, count: int, width: int, start: int = 0,
                   stream: int = 0) -> np.ndarray:
    """Reproducible standard-normal draws of shape (count, width).

    Row i (absolute index start + i) is a pure function of
    (seed, stream, index): draws come in fixed blocks of _CHUNK rows keyed by
    Philox(key=[seed, stream * 2^32 + block]).
    """
    out = np.empty((count, width))
    first = start // _CHUNK
    last = (start + count - 1) // _CHUNK if count else first
    for block in range(first, last + 1):
        gen = np.random.Generator(
            np.random.Philox(key=[np.uint64(seed), np.uint64((stream << 32) + block)])
        )
        rows = gen.standard_normal((_CHUNK, width))
        lo = max(start, block * _CHUNK)
        hi = min(start + count, (block + 1) * _CHUNK)
        out[lo - start:hi - start] = rows[lo - block * _CHUNK:hi - block * _CHUNK]
    return out


def sample_fs_array(seed: int, count: int, n: int, start: int = 0,
                    stream: int = 0) -> np.ndarray:
    """(count, n+1) canonical points, FS-uniform (normalized complex Gaussians).

    Normalizing a standard complex Gaussian in C^(n+1) gives the unique
    unitarily invariant probability measure on P^n.  Deterministic in
    (seed, absolute sample index); extending count keeps earlier rows.
    """
    if count <= 0:
        return np.empty((0, n + 1), dtype=complex)
    g = _sample_stream(seed, count, 2 * (n + 1), start=start, stream=stream)
    vecs = g[:, : n + 1] + 1j * g[:, n + 1:]
    return canonicalize_batch(vecs)


def sample_fs_uniform(seed: int, count: int, n: int) -> list[HomogeneousPoint]:
    """FS-uniform sample as HomogeneousPoint objects (see sample_fs_array)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    arr = sample_fs_array(seed, count, n)
    return [HomogeneousPoint(row) for row in arr]


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------

def points_to_json(points) -> str:
    return json.dumps([p.to_json() for p in points])


def points_from_json(text: str) -> list[HomogeneousPoint]:
    return [HomogeneousPoint.from_json(item) for item in json.loads(text)]
