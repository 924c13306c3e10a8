"""Logarithmic potentials of atomic measures and their Sobolev diagnostics.

The projective potential of mu is the weighted kernel sum

    U_mu(zeta) = sum_i w_i log( |zeta ^ eta_i| / (|zeta| |eta_i|) )  <= 0,

its chart representative lifts to the plurisubharmonic function

    phi(z) = U_mu([z]) + rho(z) = sum_i w_i (1/2) log Ptilde_i(z),

and the globally smoothed version replaces Ptilde by
Ptilde + eps^2 (1 + |z|^2), which is again plurisubharmonic (a smooth max
of psh logs) and keeps total Monge-Ampere mass 1 on P^n for every eps > 0.
The affine potential of atoms in a chart is the kernel sum with the
constant-eps smoothing instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .coarea import sobolev_bound, sphere_area
from .errors import (
    DimensionMismatch,
    NonpositiveEpsilon,
    SingularStencil,
)
from .geometry import (
    HomogeneousPoint,
    _sample_stream,
    fs_gradient_norm_sq,
    fs_potential,
    sample_fs_array,
)
from .kernels import projective_log_kernel_batch
from .measures import AffineAtoms, AtomicMeasure
from .parallel import resolve_workers, run_chunked

# smoothing modes of a lifted/affine field
_GLOBAL, _CONSTANT, _NONE = "global", "constant", "none"


@dataclass(frozen=True)
class PotentialField:
    """Evaluatable scalar field on a chart of P^n (or on C^n).

    kind is one of 'lift' (chart representative of U_mu + rho, optionally
    globally smoothed), 'affine' (kernel sum of chart atoms, optionally
    constant-eps smoothed) or 'fs' (the Kahler potential rho itself).
    Evaluation is deterministic and vectorized over rows.
    """

    kind: str
    chart: int
    n: int
    eps: float = 0.0
    atoms_eta: np.ndarray | None = field(default=None, repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def smoothing(self) -> str:
        if self.eps == 0.0:
            return _NONE
        return _GLOBAL if self.kind == "lift" else _CONSTANT

    def __call__(self, z) -> np.ndarray | float:
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        Z = np.atleast_2d(z)
        if self.kind == "fs":
            out = np.asarray(fs_potential(Z))
        else:
            out = analytic.field_value_batch(Z, self.atoms_eta, self.weights,
                                             self.chart, self.eps, self.smoothing)
        return float(out[0]) if single else out

    def holomorphic_gradient(self, z) -> np.ndarray:
        """Closed-form dphi/dz (the oracle counterpart of fd_gradient)."""
        Z = np.atleast_2d(np.asarray(z, dtype=complex))
        if self.kind == "fs":
            out = analytic.fs_gradient_batch(Z)
        else:
            out = analytic.field_gradient_batch(Z, self.atoms_eta, self.weights,
                                                self.chart, self.eps, self.smoothing)
        return out[0] if np.asarray(z).ndim == 1 else out

    def complex_hessian(self, z) -> np.ndarray:
        """Closed-form complex Hessian (batch (m, n, n))."""
        Z = np.atleast_2d(np.asarray(z, dtype=complex))
        if self.kind == "fs":
            out = analytic.fs_hessian_batch(Z)
        else:
            out = analytic.field_hessian_batch(Z, self.atoms_eta, self.weights,
                                               self.chart, self.eps, self.smoothing)
        return out[0] if np.asarray(z).ndim == 1 else out

    def singular_sites(self) -> np.ndarray:
        """Chart coordinates where the unsmoothed field is -inf, shape (k, n)."""
        if self.eps > 0.0 or self.kind == "fs" or self.atoms_eta is None:
            return np.empty((0, self.n), dtype=complex)
        sites = []
        for eta in self.atoms_eta:
            if abs(eta[self.chart]) > 1e-8:
                lift = eta / eta[self.chart]
                sites.append(np.delete(lift, self.chart))
        if not sites:
            return np.empty((0, self.n), dtype=complex)
        return np.stack(sites)


def fs_field(n: int, chart: int = 0) -> PotentialField:
    return PotentialField(kind="fs", chart=chart, n=n)


def psh_lift(mu: AtomicMeasure, chart: int, eps: float = 0.0) -> PotentialField:
    """Chart lift phi = U_mu o chart + rho, with optional global smoothing.

    For eps > 0 the lifted field is smooth and plurisubharmonic on the whole
    chart; for eps = 0 it is -inf exactly at the atoms inside the chart.
    """
    if eps < 0.0:
        raise NonpositiveEpsilon(f"eps = {eps} must be >= 0")
    return PotentialField(kind="lift", chart=chart, n=mu.n, eps=eps,
                          atoms_eta=mu.points.copy(), weights=mu.weights.copy())


def affine_field(atoms: AffineAtoms, eps: float = 0.0) -> PotentialField:
    """Kernel sum of chart atoms (constant-eps smoothing when eps > 0)."""
    if eps < 0.0:
        raise NonpositiveEpsilon(f"eps = {eps} must be >= 0")
    lifted = np.insert(atoms.w, atoms.chart, 1.0, axis=1)
    norms = np.linalg.norm(lifted, axis=1, keepdims=True)
    return PotentialField(kind="affine", chart=atoms.chart, n=atoms.n, eps=eps,
                          atoms_eta=lifted / norms, weights=atoms.weights.copy())


# ---------------------------------------------------------------------------
# pointwise evaluation
# ---------------------------------------------------------------------------

def log_potential(mu: AtomicMeasure, zeta) -> float:
    """U_mu(zeta) = sum w_i K(zeta, eta_i); -inf iff zeta is an atom of mu."""
    coords = zeta.coords if isinstance(zeta, HomogeneousPoint) else np.asarray(zeta, complex)
    if coords.shape[-1] != mu.n + 1:
        raise DimensionMismatch(f"point in P^{coords.shape[-1]-1}, measure on P^{mu.n}")
    vals = projective_log_kernel_batch(coords[None, :].repeat(mu.num_atoms, axis=0),
                                       mu.points)
    return float(np.dot(mu.weights, vals))


def log_potential_batch(mu: AtomicMeasure, points: np.ndarray) -> np.ndarray:
    """U_mu on rows of (m, n+1); -inf rows at atoms."""
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    out = np.zeros(points.shape[0])
    for w, eta in zip(mu.weights, mu.points):
        out += w * projective_log_kernel_batch(points, eta)
    return out


def affine_potential(atoms: AffineAtoms, z) -> float:
    """V(z) = sum w_i N(z, w_i); -inf at atoms; V <= rho everywhere."""
    return float(affine_field(atoms)(np.asarray(z, dtype=complex)))


def affine_potential_smoothed(atoms: AffineAtoms, z, eps: float) -> float:
    """Constant-eps regularization; decreases pointwise to V as eps -> 0."""
    if eps <= 0.0:
        raise NonpositiveEpsilon(f"eps = {eps} must be > 0")
    return float(affine_field(atoms, eps)(np.asarray(z, dtype=complex)))


# ---------------------------------------------------------------------------
# finite-difference gradient
# ---------------------------------------------------------------------------

def _fd_real_gradient_batch(fieldfn, Z: np.ndarray, h: float) -> np.ndarray:
    """Central-difference real gradient (m, 2n) of a batch-callable field."""
    m, n = Z.shape
    shifts = []
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = h
        shifts.extend([e, -e, 1j * e, -1j * e])
    stacked = np.concatenate([Z + s[None, :] for s in shifts], axis=0)
    vals = np.asarray(fieldfn(stacked)).reshape(4 * n, m)
    grad = np.empty((m, 2 * n))
    for j in range(n):
        grad[:, j] = (vals[4 * j] - vals[4 * j + 1]) / (2.0 * h)
        grad[:, n + j] = (vals[4 * j + 2] - vals[4 * j + 3]) / (2.0 * h)
    return grad


def fd_gradient(fieldfn, z, h: float = 1e-4) -> np.ndarray:
    """O(h^2) central-difference gradient in (Re, Im) coordinates.

    Falls back to one Richardson extrapolation step when the stencil values
    span more than six orders of magnitude; raises SingularStencil when a
    stencil point is singular.
    """
    z = np.asarray(z, dtype=complex)
    Z = z[None, :]

    def values(hh: float) -> np.ndarray:
        n = z.shape[0]
        shifts = []
        for j in range(n):
            e = np.zeros(n, dtype=complex)
            e[j] = hh
            shifts.extend([e, -e, 1j * e, -1j * e])
        pts = np.stack([z + s for s in shifts])
        return np.asarray(fieldfn(pts))

    raw = values(h)
    if not np.all(np.isfinite(raw)):
        raise SingularStencil(f"singular field value on the gradient stencil at {z}")
    span = np.max(np.abs(raw)) / max(np.min(np.abs(raw)), 1e-300)
    g_h = _fd_real_gradient_batch(fieldfn, Z, h)[0]
    if span <= 1e6:
        return g_h
    g_h2 = _fd_real_gradient_batch(fieldfn, Z, h / 2.0)[0]
    return (4.0 * g_h2 - g_h) / 3.0


# ---------------------------------------------------------------------------
# Sobolev scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SobolevScanResult:
    estimate: float
    std_error: float
    analytic_bound: float
    samples: int
    excised: int
    p: float
    n: int
    seed: int


def _sobolev_chunk(payload, rng):
    """Module-level chunk worker (picklable for process pools)."""
    points, weights, n, h, seed, start = payload
    lo, hi = rng
    mu = AtomicMeasure(points=points, weights=weights, n=n)
    pts = sample_fs_array(seed, hi - lo, n, start=start + lo)
    values, excised = _gradient_norm_values(mu, pts, h, 10.0 * h, seed,
                                            reserve_start=start + lo)
    return values, excised


def _gradient_norm_values(mu: AtomicMeasure, samples: np.ndarray, h: float,
                          excision_radius: float, seed: int,
                          reserve_start: int = 0) -> tuple[np.ndarray, int]:
    """FS gradient norms |grad U_mu| at sample points, with excision.

    Samples whose chart coordinates fall within excision_radius of an atom
    are replaced, in order, from a reserved deterministic stream starting at
    index reserve_start (callers pass their chunk offset so replacement
    draws never depend on chunk processing order).
    """
    n = mu.n
    excised = 0
    reserve_used = 0
    final = samples.copy()
    # chart coordinates of atoms per chart, for the excision test
    atom_chart_coords: dict[int, np.ndarray] = {}
    for k in range(n + 1):
        rows = []
        for eta in mu.points:
            if abs(eta[k]) > 1e-8:
                rows.append(np.delete(eta / eta[k], k))
        atom_chart_coords[k] = np.stack(rows) if rows else np.empty((0, n), complex)

    def violators(rows: np.ndarray, charts: np.ndarray) -> np.ndarray:
        bad = np.zeros(rows.shape[0], dtype=bool)
        for k in range(n + 1):
            atoms = atom_chart_coords[k]
            idx = np.where(charts == k)[0]
            if idx.size == 0 or atoms.shape[0] == 0:
                continue
            zc = np.delete(rows[idx] / rows[idx, k][:, None], k, axis=1)
            dmin = np.min(np.linalg.norm(zc[:, None, :] - atoms[None, :, :], axis=2),
                          axis=1)
            bad[idx] = dmin < excision_radius
        return bad

    charts = np.argmax(np.abs(final), axis=1)
    bad = violators(final, charts)
    while np.any(bad):
        # replace in sample order from the reserved deterministic stream
        count = int(np.sum(bad))
        repl = sample_fs_array(seed, count, n, start=reserve_start + reserve_used,
                               stream=3)
        reserve_used += count
        excised += count
        final[np.where(bad)[0]] = repl
        charts = np.argmax(np.abs(final), axis=1)
        bad = violators(final, charts)

    norms = np.empty(final.shape[0])
    for k in range(n + 1):
        idx = np.where(charts == k)[0]
        if idx.size == 0:
            continue
        rows = final[idx]
        Z = np.delete(rows / rows[:, k][:, None], k, axis=1)
        lift = psh_lift(mu, k)

        def u_field(pts, _lift=lift):
            return _lift(pts) - fs_potential(pts)

        grad = _fd_real_gradient_batch(u_field, Z, h)
        fz = analytic.real_to_holo_gradient(grad)
        norms[idx] = np.sqrt(fs_gradient_norm_sq(Z, fz))
    return norms, excised


def sobolev_scan(mu: AtomicMeasure, p: float, seed: int, samples: int,
                 h: float = 1e-4, workers: int | None = None,
                 start: int = 0) -> SobolevScanResult:
    """MC estimate of int |grad U_mu|^p dV over P^n (FS-uniform sampling).

    The gradient norm is the FS-Riemannian norm from the chart gradient via
    the inverse FS metric.  Reports the co-area majorant
    2 sqrt(2) c_n int sin^(2n-1-p), which is finite iff p < 2n.  Stencil
    points within 10h of an atom are rejected and resampled; the count is
    reported.  Estimates depend only on (seed, sample index), so extending
    the sample count keeps the earlier draws (common-random doubling).
    """
    if p < 1:
        raise ValueError("p must be >= 1 (smaller p follows by concavity)")
    n = mu.n
    workers = resolve_workers(workers)
    payload = (mu.points, mu.weights, n, h, seed, start)
    parts = run_chunked(_sobolev_chunk, samples, chunk=65536, workers=workers,
                        payload=payload)
    values = np.concatenate([v for v, _ in parts]) ** p
    excised = sum(e for _, e in parts)
    est = float(np.mean(values))
    se = float(np.std(values) / math.sqrt(samples))
    return SobolevScanResult(estimate=est, std_error=se,
                             analytic_bound=sobolev_bound(n, p),
                             samples=samples, excised=excised, p=p, n=n, seed=seed)


def sobolev_doubling(mu: AtomicMeasure, p: float, seed: int, samples: int,
                     h: float = 1e-4, workers: int | None = None
                     ) -> tuple[SobolevScanResult, SobolevScanResult]:
    """Scan at `samples` and at `2 * samples` sharing the first half."""
    first = sobolev_scan(mu, p, seed, samples, h=h, workers=workers)
    second_half = sobolev_scan(mu, p, seed, samples, h=h, workers=workers,
                               start=samples)
    est2 = 0.5 * (first.estimate + second_half.estimate)
    se2 = 0.5 * math.hypot(first.std_error, second_half.std_error)
    doubled = SobolevScanResult(estimate=est2, std_error=se2,
                                analytic_bound=first.analytic_bound,
                                samples=2 * samples,
                                excised=first.excised + second_half.excised,
                                p=p, n=mu.n, seed=seed)
    return first, doubled


def sobolev_refinement_scan(mu: AtomicMeasure, p: float, atom_index: int,
                            levels: int, seed: int, r0: float = 0.5,
                            samples_per_stratum: int = 2048,
                            base_decades: float | None = None,
                            depth_factor: float = 10.0) -> list[float]:
    """Near-atom estimates of int |grad U_mu|^p dV over shrinking FS annuli.

    Level l covers { r0 * 10^(-D_l) <= d(zeta, atom) <= r0 } with
    D_l = base_decades * depth_factor^l, sampled log-radially along random
    geodesics from the atom.  At p = 2n the radial integrand behaves like
    C/r, contributing a constant per resolved decade, so estimates grow by
    ~depth_factor per level; for p < 2n they converge.

    The self-atom term of the gradient is exact in the radius (the kernel
    gradient is radial with magnitude cot(r/sqrt 2)/sqrt 2); the remaining
    atoms enter through their gradient at the sampled point, which is
    insensitive to fp collapse of tiny radii.
    """
    n = mu.n
    if base_decades is None:
        # keep cot^p ~ r^(-p) representable: deepest decade * p < ~290
        max_dec = 280.0 / max(p, 1.0)
        base_decades = min(60.0, max_dec) / depth_factor ** (levels - 1)
    eta = mu.points[atom_index]
    w_self = mu.weights[atom_index]
    rest_pts = np.delete(mu.points, atom_index, axis=0)
    rest_w = np.delete(mu.weights, atom_index)
    sqrt2 = math.sqrt(2.0)

    def rest_grad_terms(zpts: np.ndarray, radial_dirs: np.ndarray, k: int):
        """(radial component, full norm^2) of grad U_rest at chart rows."""
        if rest_pts.shape[0] == 0:
            return 0.0, 0.0
        sub = AtomicMeasure(points=rest_pts, weights=rest_w / np.sum(rest_w), n=n)
        lift = psh_lift(sub, k)
        Z = zpts
        fz = lift.holomorphic_gradient(Z) - analytic.fs_gradient_batch(Z)
        fz *= np.sum(rest_w)
        norm2 = fs_gradient_norm_sq(Z, fz)
        # radial component: Riemannian inner product with the unit radial
        # field, computed as the directional derivative along the geodesic
        radial = 2.0 * np.real(np.sum(fz * radial_dirs, axis=1))
        return radial, norm2

    from scipy.special import ndtr

    def annulus(d_out: float, d_in: float, key: int) -> float:
        ns = max(1, int(math.ceil(d_in - d_out)))
        edges = np.linspace(d_out, d_in, ns + 1)
        total = 0.0
        for si, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            lo, hi = r0 * 10.0 ** (-b), r0 * 10.0 ** (-a)
            g = _sample_stream(seed, samples_per_stratum, 2 * (n + 1) + 1,
                               start=(key * 4096 + si) * samples_per_stratum,
                               stream=4)
            tau = g[:, : n + 1] + 1j * g[:, n + 1: 2 * (n + 1)]
            tau -= (tau @ np.conj(eta))[:, None] * eta[None, :]
            tau /= np.linalg.norm(tau, axis=1, keepdims=True)
            s = lo * (hi / lo) ** ndtr(g[:, 2 * (n + 1)])
            self_mag = w_self / (sqrt2 * np.tan(s / sqrt2))
            if rest_pts.shape[0]:
                # geodesic points (fp collapse to eta for tiny s is harmless)
                pts = np.cos(s / sqrt2)[:, None] * eta[None, :] \
                    + np.sin(s / sqrt2)[:, None] * tau
                k = int(np.argmax(np.abs(eta)))
                denom = pts[:, k][:, None]
                Z = np.delete(pts / denom, k, axis=1)
                # chart velocity of the geodesic (radial direction at pts)
                vel = (-np.sin(s / sqrt2)[:, None] * eta[None, :]
                       + np.cos(s / sqrt2)[:, None] * tau) / sqrt2
                dchart = np.delete(vel / denom, k, axis=1) \
                    - np.delete(pts / denom, k, axis=1) * (vel[:, k] / pts[:, k])[:, None]
                radial, norm2 = rest_grad_terms(Z, dchart, k)
                grad2 = self_mag**2 + 2.0 * self_mag * radial + norm2
            else:
                grad2 = self_mag**2
            vals = grad2 ** (p / 2.0) * sphere_area(n, s) * s
            total += math.log(hi / lo) * float(np.mean(vals))
        return total

    # cumulative estimates: each level adds only the newly exposed annulus
    estimates = []
    depth_prev = 0.0
    running = 0.0
    for level in range(levels):
        depth = base_decades * depth_factor**level
        running += annulus(depth_prev, depth, key=level)
        estimates.append(running)
        depth_prev = depth
    return estimates
