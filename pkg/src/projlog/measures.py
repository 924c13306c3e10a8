"""Atomic probability measures on P^n, chart decomposition, Riesz diagnostics.

A measure is a finite convex combination of Dirac masses at canonical
points.  The chart decomposition splits it along a partition of unity
chi_j subordinate to the chart covering: chi_j = beta(t_j) / sum beta(t_k)
with t_j = |zeta_j|^2 / |zeta|^2 and beta a quintic smoothstep vanishing
for t <= 1/(2(n+1)) and equal to 1 for t >= 1/(n+1).  Since max_j t_j is
always >= 1/(n+1), the denominator never vanishes, and each component
measure is supported compactly inside its chart.

Non-atomic measures are represented by empirical N-atom approximants; the
atomless_intent flag records that diagnostics should be read in the
N -> infinity limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from .errors import (
    AlphaOutOfRange,
    ChartUndefined,
    DimensionMismatch,
    EmptyMeasure,
    NegativeWeight,
    ValidationError,
    WeightSumMismatch,
)
from .geometry import (
    CANONICAL_TOL,
    HomogeneousPoint,
    _sample_stream,
    canonicalize_batch,
    to_chart,
)

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class AtomicMeasure:
    """Convex combination of Dirac masses; points stored canonically."""

    points: np.ndarray = field(repr=False)   # (N, n+1) canonical rows
    weights: np.ndarray = field(repr=False)  # (N,) positive, sums to 1
    n: int
    atomless_intent: bool = False

    @property
    def num_atoms(self) -> int:
        return self.points.shape[0]

    def point(self, i: int) -> HomogeneousPoint:
        return HomogeneousPoint(self.points[i])

    def to_json(self) -> str:
        atoms = [
            {"zeta": [[float(c.real), float(c.imag)] for c in row],
             "weight": float(w)}
            for row, w in zip(self.points, self.weights)
        ]
        return json.dumps({"n": self.n, "atoms": atoms}, indent=2)

    @staticmethod
    def from_json(text: str) -> "AtomicMeasure":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"measure JSON does not parse: {exc}") from exc
        if not isinstance(data, dict) or "n" not in data or "atoms" not in data:
            raise ValidationError('measure JSON must be {"n": int, "atoms": [...]}')
        n = data["n"]
        rows, weights = [], []
        for i, atom in enumerate(data["atoms"]):
            where = f"atoms[{i}]"
            if "zeta" not in atom or "weight" not in atom:
                raise ValidationError(f"{where} needs 'zeta' and 'weight'")
            zeta = atom["zeta"]
            if len(zeta) != n + 1:
                raise ValidationError(f"{where}.zeta has length {len(zeta)}, expected {n + 1}")
            w = atom["weight"]
            if not (isinstance(w, (int, float)) and w > 0):
                raise NegativeWeight(f"{where}.weight = {w!r} must be a positive number")
            rows.append([complex(re, im) for re, im in zeta])
            weights.append(float(w))
        return build_measure(np.array(rows, dtype=complex), np.array(weights), n=n)


def build_measure(points, weights, n: int | None = None,
                  atomless_intent: bool = False) -> AtomicMeasure:
    """Validate and canonicalize; merges duplicate atoms by summing weights."""
    if isinstance(points, (list, tuple)) and points and isinstance(points[0], HomogeneousPoint):
        points = np.stack([p.coords for p in points])
    points = np.asarray(points, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise EmptyMeasure("a measure needs at least one atom")
    if weights.shape != (points.shape[0],):
        raise DimensionMismatch("one weight per atom required")
    if n is None:
        n = points.shape[1] - 1
    if points.shape[1] != n + 1:
        raise DimensionMismatch(f"points have {points.shape[1]} coordinates, expected {n + 1}")
    if np.any(weights <= 0.0):
        bad = int(np.argmax(weights <= 0.0))
        raise NegativeWeight(f"atoms[{bad}].weight = {weights[bad]} must be > 0")
    total = float(np.sum(weights))
    if abs(total - 1.0) > WEIGHT_TOL:
        raise WeightSumMismatch(f"weights sum to {total!r}, expected 1 within {WEIGHT_TOL}")
    pts = canonicalize_batch(points)
    # merge duplicates under canonical equality
    keep_rows: list[np.ndarray] = []
    keep_w: list[float] = []
    for row, w in zip(pts, weights):
        for j, existing in enumerate(keep_rows):
            if np.max(np.abs(existing - row)) <= CANONICAL_TOL:
                keep_w[j] += w
                break
        else:
            keep_rows.append(row)
            keep_w.append(float(w))
    return AtomicMeasure(points=np.stack(keep_rows), weights=np.array(keep_w),
                         n=n, atomless_intent=atomless_intent)


def dirac(point: HomogeneousPoint) -> AtomicMeasure:
    return build_measure(point.coords[None, :], np.array([1.0]))


def uniform_on(points) -> AtomicMeasure:
    """Equal-weight measure on a list of points (after duplicate merge)."""
    if isinstance(points, np.ndarray):
        count = points.shape[0]
    else:
        count = len(points)
    return build_measure(points, np.full(count, 1.0 / count))


# ---------------------------------------------------------------------------
# partition of unity and decomposition
# ---------------------------------------------------------------------------

def smoothstep(u):
    """Quintic smoothstep: 0 below 0, 1 above 1, C^2 at the knots."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def support_threshold(n: int) -> float:
    return 1.0 / (2.0 * (n + 1))


def partition_of_unity(zeta) -> np.ndarray:
    """Weights chi_0..chi_n at a point (or batch): nonnegative, sum to 1.

    chi_j vanishes whenever t_j = |zeta_j|^2/|zeta|^2 <= 1/(2(n+1)).
    """
    coords = zeta.coords if isinstance(zeta, HomogeneousPoint) else np.asarray(zeta, dtype=complex)
    single = coords.ndim == 1
    c = np.atleast_2d(coords)
    t = np.abs(c) ** 2
    t = t / np.sum(t, axis=1, keepdims=True)
    n = c.shape[1] - 1
    a = support_threshold(n)
    b = 1.0 / (n + 1)
    beta = smoothstep((t - a) / (b - a))
    chi = beta / np.sum(beta, axis=1, keepdims=True)
    return chi[0] if single else chi


@dataclass(frozen=True)
class ChartDecomposition:
    """mu = sum_j m_j mu_j with each mu_j compactly supported in chart j."""

    n: int
    masses: np.ndarray                      # (n+1,), zero where chart unused
    components: dict[int, AtomicMeasure]    # only charts with m_j != 0

    def reassemble(self) -> AtomicMeasure:
        """Recombine sum m_j mu_j into a single measure (for the identity test)."""
        pts, ws = [], []
        for j, comp in self.components.items():
            pts.append(comp.points)
            ws.append(self.masses[j] * comp.weights)
        return build_measure(np.concatenate(pts), np.concatenate(ws), n=self.n)


def decompose(mu: AtomicMeasure) -> ChartDecomposition:
    """Convex chart decomposition via the partition of unity.

    m_j = sum_atoms weight * chi_j(atom); mu_j reweights each atom by
    chi_j / m_j, dropping atoms where chi_j = 0.  Charts with m_j = 0 are
    omitted.
    """
    chi = partition_of_unity(mu.points)      # (N, n+1)
    masses = chi.T @ mu.weights              # (n+1,)
    components: dict[int, AtomicMeasure] = {}
    for j in range(mu.n + 1):
        if masses[j] == 0.0:
            continue
        keep = chi[:, j] > 0.0
        w = mu.weights[keep] * chi[keep, j] / masses[j]
        # renormalize away accumulated rounding so each mu_j validates
        w = w / np.sum(w)
        components[j] = build_measure(mu.points[keep], w, n=mu.n)
    return ChartDecomposition(n=mu.n, masses=masses, components=components)


# ---------------------------------------------------------------------------
# affine view of a measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineAtoms:
    """Atoms of a measure expressed in one chart's affine coordinates."""

    chart: int
    w: np.ndarray = field(repr=False)        # (N, n) complex
    weights: np.ndarray = field(repr=False)  # (N,)

    @property
    def n(self) -> int:
        return self.w.shape[1]

    @property
    def num_atoms(self) -> int:
        return self.w.shape[0]

    @staticmethod
    def from_measure(mu: AtomicMeasure, chart: int) -> "AffineAtoms":
        rows = []
        for i in range(mu.num_atoms):
            try:
                rows.append(to_chart(mu.point(i), chart).z)
            except ChartUndefined as exc:
                raise ChartUndefined(
                    f"atom {i} is not inside chart {chart}: {exc}") from exc
        return AffineAtoms(chart=chart, w=np.stack(rows), weights=mu.weights.copy())


# ---------------------------------------------------------------------------
# Riesz potential diagnostics
# ---------------------------------------------------------------------------

def _check_alpha(alpha: float, n: int) -> None:
    if not 0.0 < alpha < 2.0 * n:
        raise AlphaOutOfRange(f"alpha = {alpha} outside (0, {2 * n})")


def riesz_potential(atoms: AffineAtoms, alpha: float, z) -> float:
    """J(z) = sum w_i |z - w_i|^(-alpha); +inf exactly at the atoms."""
    _check_alpha(alpha, atoms.n)
    z = np.asarray(z, dtype=complex)
    d = np.linalg.norm(atoms.w - z[None, :], axis=1)
    if np.any(d == 0.0):
        return math.inf
    return float(np.sum(atoms.weights * d ** (-alpha)))


def _uniform_ball(seed: int, count: int, dim: int, start: int = 0,
                  stream: int = 1) -> np.ndarray:
    """Uniform draws from the unit ball of R^dim, reproducible by index."""
    g = _sample_stream(seed, count, dim + 1, start=start, stream=stream)
    direction = g[:, :dim]
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    # push the last normal through the CDF for a uniform radius variate
    u = ndtr(g[:, dim])
    return direction * u[:, None] ** (1.0 / dim)


@dataclass(frozen=True)
class ScanResult:
    """Monte Carlo estimate with its standard error and provenance."""

    estimate: float
    std_error: float
    samples: int
    seed: int
    detail: dict = field(default_factory=dict)


def riesz_lp_scan(atoms: AffineAtoms, alpha: float, p: float, center, radius: float,
                  seed: int, samples: int, start: int = 0) -> ScanResult:
    """MC estimate of int_ball J^p dLeb over the Euclidean ball (center, radius).

    Finite and stable under sample doubling when p < 2n/alpha; see
    riesz_refinement_scan for behavior at and above the threshold.
    """
    _check_alpha(alpha, atoms.n)
    if p <= 0:
        raise ValueError("p must be > 0")
    n = atoms.n
    dim = 2 * n
    center = np.asarray(center, dtype=complex)
    pts = _uniform_ball(seed, samples, dim, start=start)
    z = center + radius * (pts[:, :n] + 1j * pts[:, n:])
    d = np.linalg.norm(z[:, None, :] - atoms.w[None, :, :], axis=2)
    with np.errstate(divide="ignore"):
        J = np.sum(atoms.weights[None, :] * d ** (-alpha), axis=1)
    vals = J**p
    vol = math.pi**n / math.factorial(n) * radius**dim
    finite = np.isfinite(vals)
    vals = np.where(finite, vals, 0.0)
    est = vol * float(np.mean(vals))
    se = vol * float(np.std(vals) / math.sqrt(samples))
    return ScanResult(estimate=est, std_error=se, samples=samples, seed=seed,
                      detail={"alpha": alpha, "p": p, "radius": radius,
                              "dropped_singular": int(np.sum(~finite))})


def riesz_refinement_scan(atoms: AffineAtoms, alpha: float, p: float,
                          atom_index: int, r0: float, levels: int, seed: int,
                          samples_per_stratum: int = 2048,
                          base_decades: float | None = None,
                          depth_factor: float = 10.0) -> list[float]:
    """Singularity-refined estimates of int J^p over shrinking annuli.

    Level l integrates over { r0 * 10^(-D_l) <= |z - w| <= r0 } with the
    resolved log-depth D_l = base_decades * depth_factor^l, using log-radial
    strata of at most one decade each.  The integrand of the critical case
    p = 2n/alpha contributes a constant per decade (log divergence), so the
    estimates grow by ~depth_factor per level; for p < 2n/alpha they converge.

    The default base_decades keeps the deepest radius above 1e-60 so that
    |z - w|^(-alpha p) stays inside float64 range.
    """
    _check_alpha(alpha, atoms.n)
    n = atoms.n
    if base_decades is None:
        base_decades = 60.0 / depth_factor ** (levels - 1) if levels > 1 else 1.0
    w1 = atoms.w[atom_index]
    others = np.delete(atoms.w, atom_index, axis=0) - w1[None, :]
    other_weights = np.delete(atoms.weights, atom_index)
    sphere_area_const = 2.0 * math.pi**n / math.factorial(n - 1)

    def annulus(d_out: float, d_in: float, key: int) -> float:
        """MC integral over depth interval [d_out, d_in], log-radial strata."""
        ns = max(1, int(math.ceil(d_in - d_out)))
        edges = np.linspace(d_out, d_in, ns + 1)
        total = 0.0
        for si, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            lo, hi = r0 * 10.0 ** (-b), r0 * 10.0 ** (-a)
            g = _sample_stream(seed, samples_per_stratum, 2 * n + 1,
                               start=(key * 4096 + si) * samples_per_stratum,
                               stream=2)
            dirs = g[:, : 2 * n]
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            cdir = dirs[:, :n] + 1j * dirs[:, n:]
            s = lo * (hi / lo) ** ndtr(g[:, 2 * n])  # log-uniform radius
            # J in displacement form: the self term is exact in s, the other
            # atoms are evaluated at w1 + s * dir (fp collapse to w1 is fine)
            self_term = atoms.weights[atom_index] * s ** (-alpha)
            if others.shape[0]:
                d_other = np.linalg.norm(
                    others[None, :, :] - s[:, None, None] * cdir[:, None, :], axis=2)
                rest = np.sum(other_weights[None, :] * d_other ** (-alpha), axis=1)
            else:
                rest = 0.0
            vals = (self_term + rest) ** p * s ** (2 * n)
            total += math.log(hi / lo) * sphere_area_const * float(np.mean(vals))
        return total

    # cumulative estimates: each level adds only the newly exposed annulus,
    # so the comparison between levels is structural, not statistical
    estimates = []
    depth_prev = 0.0
    running = 0.0
    for level in range(levels):
        depth = base_decades * depth_factor**level
        running += annulus(depth_prev, depth, key=level)
        estimates.append(running)
        depth_prev = depth
    return estimates
