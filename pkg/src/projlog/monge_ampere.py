"""Finite-difference complex Hessians, Monge-Ampere densities, mixed
discriminants and ball-mass diagnostics.

Densities are reported relative to the unit-mass FS volume as the ratio
det(H_phi) / det(H_rho) of complex Hessians, which eliminates every d^c and
pi normalization constant.  Total masses integrate det(H_phi) over chart
boxes weighted by the partition of unity and divide by the chart integral
of det(H_rho) (= 2^-n pi^n / n! for the unit-volume convention); for any
smooth global field rho + u the answer is 1 by cohomology, which is the
grid's strongest self-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement

import numpy as np

from .errors import (
    CombinatorialBlowup,
    DimensionMismatch,
    GridTooCoarse,
    NegativeDensity,
    NonpositiveEpsilon,
    SingularStencil,
)
from .geometry import (
    HomogeneousPoint,
    chart_lift,
    fs_ball_volume,
    fs_volume_density,
    fs_volume_norm,
    geodesic_distance_batch,
    max_modulus_chart,
)
from .measures import AffineAtoms, AtomicMeasure, partition_of_unity
from .parallel import pairwise_sum, resolve_workers, run_chunked
from .potentials import PotentialField, affine_field, fs_field, psh_lift

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# finite-difference complex Hessians
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexHessian:
    """Matrix of d^2 f / dz_j dzbar_k from central differences.

    Hermitian by stencil symmetry (the (k, j) entry is assembled as the
    conjugate of (j, k) from the same real mixed partials).
    """

    entries: np.ndarray
    point: np.ndarray = field(repr=False)
    step: float = 0.0
    field_desc: str = ""

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def hermitian_defect(self) -> float:
        h = self.entries
        return float(np.max(np.abs(h - h.conj().T)))

    def min_eigenvalue_ratio(self) -> float:
        """Smallest eigenvalue over the matrix norm (PSD check helper)."""
        lam = self.eigenvalues()
        scale = max(float(np.max(np.abs(lam))), 1e-300)
        return float(lam[0] / scale)


def _hessian_stencil(n: int, h: float):
    """Displacements and assembly indices for the FD complex Hessian.

    Layout: [center] + per-coordinate 4-point Laplacian blocks + per-pair
    16-point cross blocks for the four real mixed partials.
    """
    shifts = [np.zeros(n, dtype=complex)]
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = h
        shifts.extend([e, -e, 1j * e, -1j * e])
    pair_base = len(shifts)
    pairs = list(combinations(range(n), 2))
    for j, k in pairs:
        for a_im in (False, True):
            for b_im in (False, True):
                a = np.zeros(n, dtype=complex)
                b = np.zeros(n, dtype=complex)
                a[j] = 1j * h if a_im else h
                b[k] = 1j * h if b_im else h
                shifts.extend([a + b, a - b, -a + b, -a - b])
    return np.stack(shifts), pairs, pair_base


def hessian_fd_batch(fieldfn, Z: np.ndarray, h: float):
    """FD complex Hessians at rows of Z: returns (H (m,n,n), finite (m,)).

    fieldfn must accept an (M, n) batch and return (M,) real values.
    O(h^2) accurate on smooth fields.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    m, n = Z.shape
    shifts, pairs, pair_base = _hessian_stencil(n, h)
    S = shifts.shape[0]
    pts = (Z[None, :, :] + shifts[:, None, :]).reshape(S * m, n)
    vals = np.asarray(fieldfn(pts), dtype=float).reshape(S, m)
    finite = np.all(np.isfinite(vals), axis=0)
    v = np.where(np.isfinite(vals), vals, 0.0)
    H = np.zeros((m, n, n), dtype=complex)
    h2 = h * h
    center = v[0]
    for j in range(n):
        base = 1 + 4 * j
        H[:, j, j] = (v[base] + v[base + 1] + v[base + 2] + v[base + 3]
                      - 4.0 * center) / (4.0 * h2)
    for idx, (j, k) in enumerate(pairs):
        base = pair_base + 16 * idx
        P = []
        for blk in range(4):
            b = base + 4 * blk
            P.append((v[b] - v[b + 1] - v[b + 2] + v[b + 3]) / (4.0 * h2))
        Pxx, Pxy, Pyx, Pyy = P
        H[:, j, k] = 0.25 * ((Pxx + Pyy) + 1j * (Pxy - Pyx))
        H[:, k, j] = np.conj(H[:, j, k])
    return H, finite


def complex_hessian_fd(fieldfn, z, h: float = 1e-3) -> ComplexHessian:
    """FD complex Hessian at a single point; SingularStencil on -inf values."""
    z = np.asarray(z, dtype=complex)
    H, finite = hessian_fd_batch(fieldfn, z[None, :], h)
    if not finite[0]:
        raise SingularStencil(f"field is singular on the Hessian stencil at {z}")
    desc = getattr(fieldfn, "kind", type(fieldfn).__name__)
    return ComplexHessian(entries=H[0], point=z.copy(), step=h, field_desc=str(desc))


# ---------------------------------------------------------------------------
# mixed discriminants
# ---------------------------------------------------------------------------

def mixed_discriminant(mats) -> float:
    """Normalized mixed discriminant: symmetric multilinear, D(A,..,A) = det A.

    Computed by subset inclusion-exclusion,
    D = (1/n!) sum_{S nonempty} (-1)^(n-|S|) det(sum_{i in S} A_i).
    For PSD Hermitian inputs the value is nonnegative.
    """
    mats = [np.asarray(A, dtype=complex) for A in mats]
    n = len(mats)
    for A in mats:
        if A.shape != (n, n):
            raise DimensionMismatch(
                f"need {n} matrices of shape ({n},{n}); got {A.shape}")
    total = 0.0
    for size in range(1, n + 1):
        sign = (-1) ** (n - size)
        for S in combinations(range(n), size):
            acc = mats[S[0]].copy()
            for i in S[1:]:
                acc += mats[i]
            total += sign * float(np.linalg.det(acc).real)
    return total / math.factorial(n)


@dataclass(frozen=True)
class ExpansionCheck:
    residual: float
    scale: float
    lhs: float
    rhs: float
    exact: bool

    @property
    def relative(self) -> float:
        return self.residual / self.scale


def ma_product_expansion_check(atoms: AffineAtoms, z, h: float = 1e-3,
                               term_cap: int = 10**7, sample_tuples: int = 0,
                               seed: int = 0) -> ExpansionCheck:
    """Pointwise product-formula check for the affine potential.

    Compares det(sum_i w_i H_i) against the multilinear expansion
    sum over n-tuples of atoms of w_(i1)..w_(in) D(H_(i1), .., H_(in)),
    where H_i is the FD complex Hessian of the kernel with atom i at z.
    Exact expansion requires N^n <= term_cap; beyond the cap a uniform
    tuple sample with inverse-probability weighting is used when
    sample_tuples > 0, else CombinatorialBlowup is raised.

    The reported scale is max(|lhs| + sum |terms|, ||sum w_i H_i||_F^n): the
    second term is the natural rounding scale of a determinant, which keeps
    the relative residual meaningful when the determinant itself vanishes
    (the single-kernel Hessian is degenerate away from its atom for n >= 2).
    """
    n = atoms.n
    N = atoms.num_atoms
    hessians = []
    for i in range(N):
        single = AffineAtoms(chart=atoms.chart, w=atoms.w[i:i + 1],
                             weights=np.array([1.0]))
        hessians.append(complex_hessian_fd(affine_field(single), z, h).entries)
    w = atoms.weights
    lhs_mat = np.tensordot(w, np.stack(hessians), axes=(0, 0))
    lhs = float(np.linalg.det(lhs_mat).real)
    exact = N**n <= term_cap
    if not exact and sample_tuples <= 0:
        raise CombinatorialBlowup(
            f"N^n = {N}^{n} exceeds the {term_cap} term cap; "
            "pass sample_tuples for a sampled estimate")
    rhs = 0.0
    abssum = abs(lhs)
    if exact:
        for multiset in combinations_with_replacement(range(N), n):
            mult: dict[int, int] = {}
            for i in multiset:
                mult[i] = mult.get(i, 0) + 1
            coeff = math.factorial(n)
            for c in mult.values():
                coeff //= math.factorial(c)
            wprod = float(np.prod([w[i] for i in multiset]))
            term = coeff * wprod * mixed_discriminant([hessians[i] for i in multiset])
            rhs += term
            abssum += abs(term)
    else:
        rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
        draws = rng.integers(0, N, size=(sample_tuples, n))
        for row in draws:
            wprod = float(np.prod([w[i] for i in row]))
            term = wprod * mixed_discriminant([hessians[i] for i in row])
            rhs += term * (N**n) / sample_tuples
        abssum += abs(rhs)
    scale = max(abssum, float(np.linalg.norm(lhs_mat)) ** n, 1e-300)
    return ExpansionCheck(residual=abs(lhs - rhs), scale=scale, lhs=lhs,
                          rhs=rhs, exact=exact)


def smooth_wedge_density(atoms: AffineAtoms, psi_field, m: int, z,
                         h: float = 1e-3) -> float:
    """Density of the m-fold potential / (n-m)-fold smooth-field wedge.

    Returns binom(n, m) * D(H_V x m, H_psi x (n-m)) relative to Lebesgue:
    the m-th binomial term in the expansion of det(H_V + H_psi).  Reduces to
    det H_psi at m = 0 and to det H_V at m = n.
    """
    n = atoms.n
    if not 0 <= m <= n:
        raise ValueError(f"m = {m} outside 0..{n}")
    z = np.asarray(z, dtype=complex)
    H_psi = complex_hessian_fd(psi_field, z, h).entries if m < n else None
    H_V = complex_hessian_fd(affine_field(atoms), z, h).entries if m > 0 else None
    mats = [H_V] * m + [H_psi] * (n - m)
    return math.comb(n, m) * mixed_discriminant(mats)


# ---------------------------------------------------------------------------
# Monge-Ampere density and mass
# ---------------------------------------------------------------------------

def ma_density(mu: AtomicMeasure, chart: int, z, h: float = 1e-4,
               eps: float = 0.0) -> float:
    """det(H_phi) / det(H_rho) at z, phi the (smoothed) chart lift of U_mu.

    Requires eps > 0 or z at chart distance > 10h from every atom.  Values
    in [-tol, 0) are clipped to 0; below -tol raises NegativeDensity (the
    step is too large for the local curvature).
    """
    z = np.asarray(z, dtype=complex)
    lift = psh_lift(mu, chart, eps)
    if eps == 0.0:
        sites = lift.singular_sites()
        if sites.shape[0] and float(np.min(np.linalg.norm(sites - z[None, :], axis=1))) <= 10.0 * h:
            raise SingularStencil(
                "unsmoothed density requested within 10h of an atom")
    H_phi = complex_hessian_fd(lift, z, h)
    H_rho = complex_hessian_fd(fs_field(mu.n, chart), z, h)
    det_phi = float(np.linalg.det(H_phi.entries).real)
    det_rho = float(np.linalg.det(H_rho.entries).real)
    density = det_phi / det_rho
    scale = max(1.0, (np.linalg.norm(H_phi.entries) / np.linalg.norm(H_rho.entries))
                ** mu.n)
    if density < -1e-6 * scale:
        raise NegativeDensity(
            f"density {density:.3e} below -1e-6 * {scale:.3e}; reduce h")
    return max(density, 0.0)


@dataclass
class MassReport:
    """Mass of a Monge-Ampere measure over a grid or a family of balls."""

    total_mass: float
    ball_profile: list = field(default_factory=list)   # [(radius, mass)], ascending
    grid: dict = field(default_factory=dict)
    excised_singular_mass: float = 0.0
    clipped_cells: int = 0
    vol_check: float = 0.0        # quadrature of the exact FS volume (should be ~ target)
    vol_ratios: list = field(default_factory=list)     # [(radius, mass / ball volume)]

    def profile_nondecreasing(self) -> bool:
        masses = [m for _, m in self.ball_profile]
        return all(b >= a - 1e-12 for a, b in zip(masses, masses[1:]))


def _mass_chunk(payload, rng):
    """Integrate one range of flat cells of one chart box (module level)."""
    (points, weights, n, chart, g, L, h, eps) = payload
    lo, hi = rng
    mu = AtomicMeasure(points=points, weights=weights, n=n)
    idx = np.arange(lo, hi)
    coords = np.unravel_index(idx, (g,) * (2 * n))
    step = 2.0 * L / g
    axes = [(-L + (c + 0.5) * step) for c in coords]
    Z = np.empty((idx.size, n), dtype=complex)
    for j in range(n):
        Z[:, j] = axes[2 * j] + 1j * axes[2 * j + 1]
    inside = np.sum(np.abs(Z) ** 2, axis=1) <= (2 * n + 1)
    Z = Z[inside]
    if Z.shape[0] == 0:
        return 0.0, 0.0, 0, 0.0
    lifts = chart_lift(Z, chart)
    chi = partition_of_unity(lifts)[:, chart]
    keep = chi > 0.0
    Z, chi = Z[keep], chi[keep]
    if Z.shape[0] == 0:
        return 0.0, 0.0, 0, 0.0
    lift_field = psh_lift(mu, chart, eps)
    H, finite = hessian_fd_batch(lift_field, Z, h)
    dets = np.where(finite, np.linalg.det(H).real, 0.0)
    neg = dets < 0.0
    clipped = int(np.sum(neg))
    worst = float(np.min(dets / fs_volume_density(Z), initial=0.0))
    dets = np.where(neg, 0.0, dets)
    cellvol = step ** (2 * n)
    mass = float(np.sum(chi * dets)) * cellvol / fs_volume_norm(n)
    vol = float(np.sum(chi * fs_volume_density(Z))) * cellvol / fs_volume_norm(n)
    return mass, vol, clipped, worst


def ma_total_mass(mu: AtomicMeasure, grid: int, h: float = 5e-4,
                  eps: float = 0.3, workers: int | None = None,
                  vol_tol: float = 0.01) -> MassReport:
    """Total mass of the smoothed Monge-Ampere measure over all of P^n.

    Integrates det(H_phi) over the chi_k-supported ball |z|^2 <= 2n+1 of
    every chart with midpoint cells (`grid` points per axis), weighting by
    the partition of unity.  For any measure and any eps > 0 the answer is
    1 up to grid error.  Raises GridTooCoarse when the same grid misses the
    exact FS volume by more than vol_tol.
    """
    if eps <= 0.0:
        raise NonpositiveEpsilon("total-mass integration requires eps > 0")
    n = mu.n
    workers = resolve_workers(workers)
    L = math.sqrt(2.0 * n + 1.0)
    cells = grid ** (2 * n)
    masses, vols = [], []
    clipped = 0
    worst = 0.0
    chunk = 65536 if n == 1 else 16384
    for chart in range(n + 1):
        payload = (mu.points, mu.weights, n, chart, grid, L, h, eps)
        parts = run_chunked(_mass_chunk, cells, chunk=chunk, workers=workers,
                            payload=payload)
        masses.extend(p[0] for p in parts)
        vols.extend(p[1] for p in parts)
        clipped += sum(p[2] for p in parts)
        worst = min(worst, min(p[3] for p in parts))
    total = pairwise_sum(masses)
    vol_check = pairwise_sum(vols)
    report = MassReport(total_mass=total,
                        grid={"points_per_axis": grid, "charts": n + 1,
                              "box_halfwidth": L, "h": h, "eps": eps},
                        clipped_cells=clipped, vol_check=vol_check)
    if abs(vol_check - 1.0) > vol_tol:
        raise GridTooCoarse(
            f"chart-overlap volume check {vol_check:.4f} deviates from 1 "
            f"by more than {vol_tol:.2%}")
    return report


# ---------------------------------------------------------------------------
# ball-mass profiles
# ---------------------------------------------------------------------------

def _chart_halfwidth(c_abs: float, r: float) -> float:
    """Half-width of a chart box guaranteed to contain the FS ball B_r.

    Uses sin(d / sqrt 2) >= |z - c| / sqrt((1+|z|^2)(1+|c|^2)) and a fixed
    point iteration on the implied bound, with a 5 percent margin.
    """
    s = math.sin(min(r, math.pi / SQRT2) / SQRT2)
    delta = s * (1.0 + c_abs**2)
    for _ in range(60):
        new = s * math.sqrt((1.0 + (c_abs + delta) ** 2) * (1.0 + c_abs**2))
        if new > 20.0 * (1.0 + c_abs):
            return 20.0 * (1.0 + c_abs)  # ball nearly fills the chart
        if abs(new - delta) < 1e-12 * max(1.0, delta):
            delta = new
            break
        delta = new
    return 1.05 * delta


def _nested_cells(c: np.ndarray, a0: float, levels: int, m: int):
    """Midpoint cells of dyadically nested boxes around chart point c.

    Level l covers the box of half-width a0 / 2^l minus the next box; the
    innermost level keeps its full box.  m must be a multiple of 4 so inner
    boxes align exactly with cell boundaries.  Yields (centers, cellvol).
    """
    n = c.shape[0]
    ticks = np.arange(m) + 0.5
    for level in range(levels):
        a = a0 / 2.0**level
        step = 2.0 * a / m
        axis = -a + ticks * step
        mesh = np.meshgrid(*([axis] * (2 * n)), indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
        if level < levels - 1:
            keep = np.max(np.abs(pts), axis=1) > a / 2.0
            pts = pts[keep]
        Z = c[None, :] + pts[:, :n] + 1j * pts[:, n:]
        yield Z, step ** (2 * n)


def ball_mass_profile(mu: AtomicMeasure, center: HomogeneousPoint, radii,
                      h: float = 5e-4, eps_list=(0.3,), points_per_axis: int = 0,
                      levels: int = 0, vol_tol: float = 0.02) -> list[MassReport]:
    """Mass of the smoothed Monge-Ampere measure in FS balls around center.

    For each eps in eps_list (decreasing), integrates det(H_phi) over the
    geodesic balls B_r(center) for each radius (given decreasing; reported
    ascending) on dyadically refined local grids, and reports the mass, the
    ratio to the exact ball volume sin^(2n)(r / sqrt 2), and a pure-volume
    self-check per radius.  With eps = 0 in the list, cells within 10h of an
    atom are excised; their FS volume is reported as excised_singular_mass
    (a bounded diagnostic of the removed region, not a mass estimate).
    """
    n = mu.n
    radii = sorted(float(r) for r in radii)
    eps_list = list(eps_list)
    if any(e < 0 for e in eps_list):
        raise NonpositiveEpsilon("eps values must be >= 0")
    chart = max_modulus_chart(center)
    c = np.delete(center.coords / center.coords[chart], chart)
    r_max = radii[-1]
    a0 = _chart_halfwidth(float(np.linalg.norm(c)), r_max)
    m = points_per_axis or (64 if n == 1 else 16)
    if m % 4:
        raise ValueError("points_per_axis must be a multiple of 4")
    reports = []
    for eps in eps_list:
        if levels:
            nlev = levels
        else:
            feature = max(eps, 1e-3) * (1.0 + float(np.linalg.norm(c)) ** 2)
            nlev = max(1, min(9, int(math.ceil(math.log2(a0 / (2.0 * feature)))) + 1))
        lift = psh_lift(mu, chart, eps)
        sites = lift.singular_sites() if eps == 0.0 else np.empty((0, n), complex)
        masses = np.zeros(len(radii))
        vols = np.zeros(len(radii))
        clipped = 0
        excised_volume = 0.0
        for Z, cellvol in _nested_cells(c, a0, nlev, m):
            lifts = chart_lift(Z, chart)
            d = geodesic_distance_batch(lifts, center.coords)
            in_any = d <= r_max
            if not np.any(in_any):
                continue
            Z, d = Z[in_any], d[in_any]
            if sites.shape[0]:
                dist_atoms = np.min(np.linalg.norm(
                    Z[:, None, :] - sites[None, :, :], axis=2), axis=1)
                cut = dist_atoms <= 10.0 * h
                excised_volume += float(np.sum(
                    fs_volume_density(Z[cut]))) * cellvol / fs_volume_norm(n)
                Z, d = Z[~cut], d[~cut]
                if Z.shape[0] == 0:
                    continue
            dets = np.empty(Z.shape[0])
            for sl in range(0, Z.shape[0], 16384):
                part = slice(sl, min(sl + 16384, Z.shape[0]))
                Hp, finite = hessian_fd_batch(lift, Z[part], h)
                dets[part] = np.where(finite, np.linalg.det(Hp).real, 0.0)
            neg = dets < 0.0
            clipped += int(np.sum(neg))
            dets = np.where(neg, 0.0, dets)
            fsdens = fs_volume_density(Z)
            for i, r in enumerate(radii):
                sel = d <= r
                masses[i] += float(np.sum(dets[sel])) * cellvol / fs_volume_norm(n)
                vols[i] += float(np.sum(fsdens[sel])) * cellvol / fs_volume_norm(n)
        exact_vols = [fs_ball_volume(n, r) for r in radii]
        rel = abs(vols[-1] - exact_vols[-1]) / max(exact_vols[-1], 1e-300)
        if rel > vol_tol:
            raise GridTooCoarse(
                f"ball-volume self-check off by {rel:.2%} at r = {radii[-1]:.3g} "
                f"(grid {m}/axis, {nlev} levels)")
        reports.append(MassReport(
            total_mass=float(masses[-1]),
            ball_profile=[(r, float(mm)) for r, mm in zip(radii, masses)],
            grid={"points_per_axis": m, "levels": nlev, "chart": chart,
                  "outer_halfwidth": a0, "h": h, "eps": eps},
            excised_singular_mass=excised_volume,
            clipped_cells=clipped,
            vol_check=float(vols[-1]),
            vol_ratios=[(r, float(mm / max(v, 1e-300)))
                        for r, mm, v in zip(radii, masses, exact_vols)],
        ))
    return reports
