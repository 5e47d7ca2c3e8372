"""Multiplicity-counted coamoeba area, fiber cardinalities, the Alga map.

The multiplicity-counted area is the integral over the curve of the
absolute Jacobian of the argument map.  It is computed as a two-chart
quadrature with the partition of unity 1/(1+|m|^2): in either chart the
integrand reduces to the same bounded, smooth expression

    |Im(A conj(B))| / (|A|^2 + |B|^2),   A = z df/dz * z,  B = w df/dw * w,

summed over fiber sheets, so branch points and boundary punctures never
produce singular integrands.  Fiber cardinalities are counted by damped
Newton iteration from cloud seeds and validate the area via the identity
area = integral of the fiber count over the torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import CurvePointCloud, GridSpec, default_window, sample_curve
from .errors import DomainError
from .polynomials import BivariatePolynomial, newton_polygon
from .raster import QuotientPoint, TorusPoint, flat_distance

TWO_PI = 2.0 * math.pi

BOUNDARY_MASS_LIMIT = 1e-4      # max fraction of density in the outermost columns
SINGULAR_SAMPLE_LIMIT = 1e-3    # max fraction of singular samples
NEWTON_MAX_ITER = 80
NEWTON_RTOL = 1e-12
DEFAULT_EXCLUSION = 2 * TWO_PI / 512   # two cells of the default raster
CLUSTER_RADIUS = 0.05           # single-linkage radius for fiber solutions


@dataclass(frozen=True)
class AreaReport:
    """Quadrature result for the multiplicity-counted coamoeba area."""

    area_mult: float
    bound: float
    quadrature_error: float
    ratio: float

    def to_json_dict(self):
        return {
            "area_mult": self.area_mult,
            "bound": self.bound,
            "ratio": self.ratio,
            "quad_error": self.quadrature_error,
        }


def arg_jacobian_density(cloud: CurvePointCloud):
    """Partition-weighted Arg-Jacobian density of each cloud point."""
    a, b = cloud.gz, cloud.gw
    with np.errstate(invalid="ignore", divide="ignore"):
        dens = np.abs(np.imag(a * np.conj(b))) / (np.abs(a) ** 2 + np.abs(b) ** 2)
    dens = np.where(cloud.singular, 0.0, dens)
    return np.where(np.isfinite(dens), dens, 0.0)


def _chart_integral(p, grid):
    cloud = sample_curve(p, grid)
    dens = arg_jacobian_density(cloud)
    singular_frac = cloud.singular.sum() / max(len(cloud), 1)
    if singular_frac > SINGULAR_SAMPLE_LIMIT:
        raise DomainError("singular curve",
                          "%.2f%% of samples are singular points" % (100 * singular_frac))
    total = float(dens.sum())
    col = cloud.fiber_index // grid.ntheta
    edge = (col == 0) | (col == grid.nx - 1)
    boundary = float(dens[edge].sum())
    # measure-zero coamoebas leave only roundoff noise; no window to blame
    meaningful = total * grid.dx * grid.dtheta > 1e-9
    if meaningful and boundary > BOUNDARY_MASS_LIMIT * total:
        raise DomainError("window too small",
                          "boundary columns hold %.2e of the density" % (boundary / total))
    return total * grid.dx * grid.dtheta


def _area_at(p, window, n):
    return (_chart_integral(p, GridSpec(window, n, n, "z"))
            + _chart_integral(p, GridSpec(window, n, n, "w")))


def area_single_chart(p: BivariatePolynomial, base: str = "z", n: int = 400,
                      window=None) -> float:
    """Full |Im m| integral in one chart (no partition of unity).

    Cross-validation route for the two-chart quadrature: the integrand has
    integrable 1/r singularities where the curve meets the torus boundary,
    so this converges more slowly and is only used as a consistency check.
    """
    if window is None:
        window = default_window(p)
    grid = GridSpec(window, n, n, base)
    cloud = sample_curve(p, grid)
    a, b = (cloud.gz, cloud.gw) if base == "z" else (cloud.gw, cloud.gz)
    with np.errstate(invalid="ignore", divide="ignore"):
        dens = np.abs(np.imag(-a / b))
    dens = np.where(cloud.singular | ~np.isfinite(dens), 0.0, dens)
    return float(dens.sum()) * grid.dx * grid.dtheta


def area_mult_coamoeba(p: BivariatePolynomial, grid: GridSpec = None,
                       window=None, n=200) -> AreaReport:
    """Multiplicity-counted coamoeba area with a Richardson error estimate.

    The quadrature runs at the requested resolution and at twice it; the
    reported value is the fine-grid one and the error estimate is
    |A_2N - A_N| / 3.  The bound is 2 pi^2 Area(Newton polygon).
    """
    if grid is not None:
        window, n = grid.x_window, grid.nx
    if window is None:
        window = default_window(p)
    polygon = newton_polygon(p)
    bound = 2.0 * math.pi**2 * polygon.euclidean_area
    if polygon.euclidean_area == 0.0:
        return AreaReport(0.0, 0.0, 0.0, 0.0)
    coarse = _area_at(p, window, n)
    fine = _area_at(p, window, 2 * n)
    err = abs(fine - coarse) / 3.0
    ratio = fine / bound
    return AreaReport(fine, bound, err, ratio)


# ---------------------------------------------------------------------------
# Fiber counting
# ---------------------------------------------------------------------------

def _damped_newton(p, start, theta=None, logmod=None, window=16.0):
    """Solve Re f = Im f = 0 on an Arg fiber (theta fixed, unknown moduli)
    or a Log fiber (moduli fixed, unknown angles), from many seeds at once.

    Returns (solutions (S, 2), status (S,)) with status 1 converged,
    0 stuck, -1 escaped.
    """
    u = np.array(start, dtype=float)
    S = u.shape[0]
    status = np.zeros(S, dtype=np.int64)
    active = np.ones(S, bool)
    res = np.full(S, np.inf)

    def evaluate(uu):
        if theta is not None:
            z = np.exp(uu[:, 0] + 1j * theta[0])
            w = np.exp(uu[:, 1] + 1j * theta[1])
        else:
            z = np.exp(logmod[0] + 1j * uu[:, 0])
            w = np.exp(logmod[1] + 1j * uu[:, 1])
        ev = p.eval_scaled(z, w)
        rr = np.abs(ev.f) / np.where(ev.denom > 0, ev.denom, 1.0)
        if theta is not None:
            ja, jb = ev.gz, ev.gw
        else:
            ja, jb = 1j * ev.gz, 1j * ev.gw
        return rr, ev.f, ja, jb

    res[active], f, ja, jb = evaluate(u)
    for _ in range(NEWTON_MAX_ITER):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        det = ja[idx].real * jb[idx].imag - jb[idx].real * ja[idx].imag
        bad = np.abs(det) < 1e-300
        det = np.where(bad, 1.0, det)
        dx = (-f[idx].real * jb[idx].imag + f[idx].imag * jb[idx].real) / det
        dy = (-f[idx].imag * ja[idx].real + f[idx].real * ja[idx].imag) / det
        step = np.stack([dx, dy], axis=1)
        step[bad] = 0.0
        norm = np.abs(step).max(axis=1)
        clip = norm > 2.0
        step[clip] *= (2.0 / norm[clip])[:, None]

        scale = np.ones(idx.size)
        for _ in range(7):
            trial = u[idx] + scale[:, None] * step
            rt, ft, jat, jbt = evaluate(trial)
            worse = rt > res[idx]
            if not worse.any():
                break
            scale[worse] *= 0.5
        accept = rt <= res[idx]
        u[idx[accept]] = trial[accept]
        res[idx[accept]] = rt[accept]
        f[idx[accept]] = ft[accept]
        ja[idx[accept]] = jat[accept]
        jb[idx[accept]] = jbt[accept]

        conv = res[idx] < NEWTON_RTOL
        status[idx[conv]] = 1
        active[idx[conv]] = False
        if theta is not None:
            out = np.abs(u[idx]).max(axis=1) > window
            status[idx[out & ~conv]] = -1
            active[idx[out & ~conv]] = False
    return u, status


def _cluster_count(points, torus, residual_fn=None):
    """Single-linkage cluster count; a solution continuum counts once.

    Two solutions merge when they are within CLUSTER_RADIUS, or when the
    segment between them stays on the curve (sampled residual below 1e-8),
    which collapses positive-dimensional solution sets such as the fibers
    of binomial factors.
    """
    n = len(points)
    if n == 0:
        return 0
    pts = np.asarray(points, float)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in range(n):
        for b in range(a + 1, n):
            if find(a) == find(b):
                continue
            delta = pts[b] - pts[a]
            if torus:
                delta = np.mod(delta + math.pi, TWO_PI) - math.pi
            d = math.hypot(delta[0], delta[1])
            merge = d <= CLUSTER_RADIUS
            if not merge and residual_fn is not None:
                frac = np.linspace(0.0, 1.0, 7)[1:-1]
                path = pts[a][None, :] + frac[:, None] * delta[None, :]
                merge = residual_fn(path).max() < 1e-8
            if merge:
                ra, rb = find(a), find(b)
                parent[max(ra, rb)] = min(ra, rb)
    return len({find(x) for x in range(n)})


def _check_exclusion(target, values, tol, torus=True):
    if not values:
        return
    arr = np.array([v.as_tuple() if hasattr(v, "as_tuple") else tuple(v) for v in values])
    t = np.asarray(target, float)
    if torus:
        d = flat_distance(arr, t[None, :]).min()
    else:
        d = np.sqrt(((arr - t[None, :]) ** 2).sum(axis=1)).min()
    if d <= tol:
        raise DomainError("near-critical query",
                          "query point is within %.3g of a critical value" % tol)


def _finish_count(status, solutions, torus, residual_fn):
    converged = status == 1
    stuck = status == 0
    if converged.any() and stuck.sum() > 0.10 * status.size:
        raise DomainError("nonconvergent seeds",
                          "%d of %d seeds stalled" % (int(stuck.sum()), status.size))
    if torus:
        sols = np.mod(solutions[converged], TWO_PI)
    else:
        sols = solutions[converged]
    return _cluster_count(sols, torus=torus, residual_fn=residual_fn)


def arg_fiber_count(p: BivariatePolynomial, theta, cloud: CurvePointCloud,
                    critical_values=None, exclusion=DEFAULT_EXCLUSION,
                    seed_radius=0.35, max_seeds=48) -> int:
    """Cardinality of the Arg fiber over ``theta``.

    Solves Re f = Im f = 0 in the moduli (x1, x2) with the angles frozen,
    seeding damped Newton from every cloud point whose argument lies within
    ``seed_radius`` of theta.  Solutions are deduplicated by single-linkage
    clustering so that degenerate solution continua count once.
    """
    t = theta.as_tuple() if isinstance(theta, TorusPoint) else (float(theta[0]), float(theta[1]))
    if critical_values is not None:
        _check_exclusion(t, critical_values, exclusion, torus=True)
    args = np.stack([cloud.theta1, cloud.theta2], axis=1)
    d = flat_distance(args, np.array(t)[None, :])
    order = np.argsort(d, kind="stable")
    near = order[d[order] < seed_radius][:max_seeds]
    if near.size == 0:
        return 0
    seeds = np.stack([cloud.x1[near], cloud.x2[near]], axis=1)
    window = cloud.grid.x_window + 6.0
    solutions, status = _damped_newton(p, seeds, theta=t, window=window)

    def resid(path):
        z = np.exp(path[:, 0] + 1j * t[0])
        w = np.exp(path[:, 1] + 1j * t[1])
        ev = p.eval_scaled(z, w)
        return np.abs(ev.f) / np.where(ev.denom > 0, ev.denom, 1.0)

    return _finish_count(status, solutions, torus=False, residual_fn=resid)


def log_fiber_count(p: BivariatePolynomial, x, cloud: CurvePointCloud,
                    critical_log=None, exclusion=DEFAULT_EXCLUSION,
                    seed_radius=0.5, max_seeds=48) -> int:
    """Cardinality of the Log fiber over ``x`` (solutions on the fiber torus)."""
    t = (float(x[0]), float(x[1]))
    if critical_log is not None:
        _check_exclusion(t, critical_log, exclusion, torus=False)
    logs = np.stack([cloud.x1, cloud.x2], axis=1)
    d = np.sqrt(((logs - np.array(t)[None, :]) ** 2).sum(axis=1))
    order = np.argsort(d, kind="stable")
    near = order[d[order] < seed_radius][:max_seeds]
    if near.size == 0:
        return 0
    seeds = np.stack([cloud.theta1[near], cloud.theta2[near]], axis=1)
    solutions, status = _damped_newton(p, seeds, logmod=t)

    def resid(path):
        z = np.exp(t[0] + 1j * path[:, 0])
        w = np.exp(t[1] + 1j * path[:, 1])
        ev = p.eval_scaled(z, w)
        return np.abs(ev.f) / np.where(ev.denom > 0, ev.denom, 1.0)

    return _finish_count(status, solutions, torus=True, residual_fn=resid)


# ---------------------------------------------------------------------------
# Alga map
# ---------------------------------------------------------------------------

def alga_project(theta) -> QuotientPoint:
    """Quotient by the real 2-torsion subgroup: both angles mod pi."""
    t = theta.as_tuple() if isinstance(theta, TorusPoint) else (theta[0], theta[1])
    return QuotientPoint(t[0] % math.pi, t[1] % math.pi)


def alga_area(p: BivariatePolynomial, cloud: CurvePointCloud,
              resolution: int = 128, critical_values=None,
              torus_raster=None) -> float:
    """Area of the Alga image (projection of the coamoeba minus critical
    values to [0, pi)^2), measured by occupied raster cells.

    The occupancy comes from a hole-free connected coamoeba raster at twice
    the quotient resolution, folded by the four real 2-torsion translates.
    Cells within one cell width of a projected critical value are excluded.
    """
    from .rasterize import coamoeba_raster, quotient_fold

    if resolution < 64:
        raise DomainError("invalid resolution", "alga raster needs resolution >= 64")
    if torus_raster is None:
        grid = cloud.grid
        torus_raster = coamoeba_raster(p, resolution=2 * resolution, cloud=cloud,
                                       nx=grid.nx, ntheta=grid.ntheta,
                                       window=grid.x_window)
    elif torus_raster.resolution != 2 * resolution:
        raise DomainError("resolution mismatch",
                          "alga folding needs a torus raster at twice the resolution")
    occupied = quotient_fold(torus_raster)
    h = math.pi / resolution
    if critical_values:
        excluded = np.zeros_like(occupied)
        for v in critical_values:
            t = v.as_tuple() if hasattr(v, "as_tuple") else tuple(v)
            c1 = int(np.mod(t[0], math.pi) / h) % resolution
            c2 = int(np.mod(t[1], math.pi) / h) % resolution
            for d1 in (-1, 0, 1):
                for d2 in (-1, 0, 1):
                    excluded[(c1 + d1) % resolution, (c2 + d2) % resolution] = True
        occupied = occupied & ~excluded
    return float(occupied.sum()) * h * h
