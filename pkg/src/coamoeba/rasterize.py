"""Building torus rasters from curve sweeps.

Pointwise occupancy of a sampled cloud leaves holes wherever the argument
map stretches the sample grid beyond one raster cell, so the builders here
additionally paint the segments between sheet-matched samples of adjacent
fibers (and, for critical curves, between chained critical points).  The
resulting occupied sets are resolution-independent.
"""

from __future__ import annotations

import math

import numpy as np

from .curves import CurvePointCloud, GridSpec, default_window, merge_clouds, sample_curve
from .measure import arg_jacobian_density
from .polynomials import BivariatePolynomial
from .raster import TorusRaster

TWO_PI = 2.0 * math.pi


def _mark_chart_connected(p, grid, raster):
    """Mark the cells swept by one fiber chart, painting the segments
    between sheet-matched samples of adjacent fibers."""
    from .rootfinding import roots_batch

    xs = grid.x_values()
    ths = grid.theta_values()
    X, T = np.meshgrid(xs, ths, indexing="ij")
    zflat = np.exp(X + 1j * T).ravel()
    coeffs = p.fiber_coeffs(zflat)
    zscale = np.zeros(zflat.size)
    for (i, _), a in zip(p.exps.tolist(), np.abs(p.coeffs).tolist()):
        zscale += a * np.abs(zflat) ** i
    roots, counts, _ = roots_batch(coeffs, scale=zscale)
    dmax = roots.shape[1]
    if dmax == 0:
        return
    th1 = np.mod(T.ravel(), TWO_PI)
    th2 = np.mod(np.angle(roots), TWO_PI)
    valid = np.arange(dmax)[None, :] < counts[:, None]
    valid &= np.isfinite(roots)

    pts1 = np.repeat(th1[:, None], dmax, axis=1)[valid]
    raster.mark_points(pts1, th2[valid])

    nx, nt = grid.nx, grid.ntheta
    F = zflat.size
    seg_a1, seg_a2, seg_b1, seg_b2 = [], [], [], []
    for axis in ("theta", "x"):
        if axis == "theta":
            src = np.arange(F)
            dst = (src // nt) * nt + (src % nt + 1) % nt
            dth1 = grid.dtheta
        else:
            src = np.nonzero(np.arange(F) // nt < nx - 1)[0]
            dst = src + nt
            dth1 = 0.0
        ra, rb = roots[src], roots[dst]
        va = valid[src] & np.isfinite(ra)
        # nearest-root matching per sheet (collisions near branch points are harmless)
        dist = np.abs(ra[:, :, None] - rb[:, None, :])
        dist = np.where(valid[dst][:, None, :], dist, np.inf)
        match = np.argmin(dist, axis=2)
        ok = va & np.isfinite(np.take_along_axis(dist, match[:, :, None], axis=2)[:, :, 0])
        a2 = np.mod(np.angle(ra), TWO_PI)
        b2 = np.mod(np.take_along_axis(np.angle(rb), match, axis=1), TWO_PI)
        d2 = np.mod(b2 - a2 + math.pi, TWO_PI) - math.pi
        ok &= np.abs(d2) < 0.7
        base1 = np.repeat(th1[src][:, None], dmax, axis=1)
        seg_a1.append(base1[ok])
        seg_a2.append(a2[ok])
        seg_b1.append(base1[ok] + dth1)
        seg_b2.append(a2[ok] + d2[ok])

    a1 = np.concatenate(seg_a1)
    a2 = np.concatenate(seg_a2)
    b1 = np.concatenate(seg_b1)
    b2 = np.concatenate(seg_b2)
    if a1.size == 0:
        return
    length = np.maximum(np.abs(b1 - a1), np.abs(b2 - a2))
    steps = int(min(24, max(2, np.ceil(length.max() / raster.cell_width) + 1)))
    for s in np.linspace(0.0, 1.0, steps):
        raster.mark_points(a1 + s * (b1 - a1), a2 + s * (b2 - a2))


def coamoeba_raster(p: BivariatePolynomial, resolution: int = 512,
                    nx: int = 250, ntheta: int = 250, window=None,
                    critical_values=None, cloud: CurvePointCloud = None,
                    connect: bool = True) -> TorusRaster:
    """Occupancy/density raster of the coamoeba from a two-chart sweep.

    ``connect=True`` (the default) paints segments between adjacent-fiber
    samples so the occupied set has no resolution-dependent holes; density
    is always accumulated pointwise.
    """
    raster = TorusRaster(resolution)
    X = window if window is not None else default_window(p)
    if cloud is None:
        cz = sample_curve(p, GridSpec(X, nx, ntheta, "z"))
        cw = sample_curve(p, GridSpec(X, nx, ntheta, "w"))
        cloud = merge_clouds(cz, cw)
    dens = arg_jacobian_density(cloud)
    cell_patch = cloud.grid.dx * cloud.grid.dtheta
    raster.mark_points(cloud.theta1, cloud.theta2, weights=dens * cell_patch)
    if connect:
        gz = cloud.grid if cloud.grid.base == "z" else GridSpec(X, nx, ntheta, "z")
        gw = GridSpec(gz.x_window, gz.nx, gz.ntheta, "w")
        _mark_chart_connected(p, gz, raster)
        _mark_chart_connected(p.swapped(), gw, _SwappedRaster(raster))
    if critical_values:
        raster.mark_critical(critical_values)
    return raster


class _SwappedRaster:
    """Raster proxy that transposes coordinates (for the w-chart sweep)."""

    def __init__(self, raster):
        self._raster = raster

    @property
    def cell_width(self):
        return self._raster.cell_width

    def mark_points(self, th1, th2, weights=None):
        self._raster.mark_points(th2, th1, weights)


def paint_critical_values(raster: TorusRaster, points, chain_radius: float = 0.35):
    """Flag the raster cells of the critical-value curves.

    The refined critical points sample the critical locus one point per
    grid crossing; their Arg images can be far apart where the argument
    map stretches.  Points that are close on the curve (in the 4d
    log-torus embedding) are therefore joined and the connecting torus
    segments painted, which closes the barrier at any raster resolution.
    """
    from scipy.spatial import cKDTree

    if not points:
        return raster
    x1 = np.array([pt.x1 for pt in points])
    x2 = np.array([pt.x2 for pt in points])
    t1 = np.array([pt.theta1 for pt in points])
    t2 = np.array([pt.theta2 for pt in points])
    raster.critical[raster.cell_index(t1, t2)] = True

    embed = np.column_stack([x1, x2, np.cos(t1), np.sin(t1), np.cos(t2), np.sin(t2)])
    pairs = cKDTree(embed).query_pairs(chain_radius, output_type="ndarray")
    if pairs.size == 0:
        return raster
    a, b = pairs[:, 0], pairs[:, 1]
    d1 = np.mod(t1[b] - t1[a] + math.pi, TWO_PI) - math.pi
    d2 = np.mod(t2[b] - t2[a] + math.pi, TWO_PI) - math.pi
    length = np.maximum(np.abs(d1), np.abs(d2))
    steps = int(min(48, max(2, np.ceil(length.max() / raster.cell_width) + 1)))
    for s in np.linspace(0.0, 1.0, steps):
        i1, i2 = raster.cell_index(t1[a] + s * d1, t2[a] + s * d2)
        raster.critical[i1, i2] = True
    return raster


def quotient_fold(raster: TorusRaster):
    """Fold a torus raster onto [0, pi)^2: OR of the four 2-torsion blocks.

    The raster resolution must be even; the result is an occupancy array
    of half the resolution, one cell per quotient cell.
    """
    n = raster.resolution
    if n % 2:
        raise ValueError("quotient folding needs an even resolution")
    r = n // 2
    occ = raster.occupancy
    return occ[:r, :r] | occ[r:, :r] | occ[:r, r:] | occ[r:, r:]
