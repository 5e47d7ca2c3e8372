"""Sampling the zero locus in the torus and its logarithmic Gauss map.

The curve is swept fiber by fiber: for every grid value z = e^{x1 + i*theta1}
all roots w of f(z, .) are attached as curve points with logarithmic slope
m = d(log w)/d(log z) and the Arg-Jacobian density |Im m|.  The shared
critical locus of Log and Arg (the Gauss-map preimage of the real projective
line) is located by sign changes of Im m along fibers plus bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import DomainError
from .polynomials import BivariatePolynomial, newton_polygon
from .raster import TorusPoint
from .rootfinding import newton_track, roots_batch, roots_single

TWO_PI = 2.0 * math.pi

RESIDUAL_TOL = 1e-10   # relative membership residual for cloud points
SWAP_TOL = 1e-3        # |fw| < SWAP_TOL*|fz| flips the base coordinate
SINGULAR_TOL = 1e-9    # both log-gradient components below this scale: singular
CRITICAL_FLAG_TOL = 1e-8


class BaseCoordinate(Enum):
    Z = "z"
    W = "w"


@dataclass(frozen=True)
class CurvePoint:
    """One sampled point of the curve with local derivative data."""

    z: complex
    w: complex
    fz: complex
    fw: complex
    m: complex
    jac_density: float
    base_coordinate: BaseCoordinate

    @property
    def x1(self):
        return math.log(abs(self.z))

    @property
    def x2(self):
        return math.log(abs(self.w))

    @property
    def theta1(self):
        return np.angle(self.z) % TWO_PI

    @property
    def theta2(self):
        return np.angle(self.w) % TWO_PI

    def arg(self):
        return TorusPoint(self.theta1, self.theta2)

    def log(self):
        return (self.x1, self.x2)


@dataclass(frozen=True)
class GaussValue:
    """A point of the complex projective line, max-normalized."""

    g1: complex
    g2: complex
    realness_residual: float


@dataclass(frozen=True)
class GridSpec:
    """Uniform midpoint grid in (log |base|, arg base)."""

    x_window: float
    nx: int
    ntheta: int
    base: str = "z"

    def __post_init__(self):
        if self.nx < 2 or self.ntheta < 2:
            raise DomainError("invalid grid", "Nx and Ntheta must both be >= 2")
        if not math.isfinite(self.x_window) or self.x_window <= 0:
            raise DomainError("invalid grid", "window must be finite and positive")
        if self.base not in ("z", "w"):
            raise DomainError("invalid grid", "base must be 'z' or 'w'")

    @property
    def dx(self):
        return 2.0 * self.x_window / self.nx

    @property
    def dtheta(self):
        return TWO_PI / self.ntheta

    def x_values(self):
        return -self.x_window + (np.arange(self.nx) + 0.5) * self.dx

    def theta_values(self):
        return (np.arange(self.ntheta) + 0.5) * self.dtheta


def default_window(p: BivariatePolynomial) -> float:
    """Window half-width from the Newton polygon: 8 plus the vertex spread.

    Im m decays exponentially along tentacles, so this bounds the truncated
    density; the quadrature additionally checks its boundary columns.
    """
    exps = p.exps
    spread = max(int(exps[:, 0].max() - exps[:, 0].min()),
                 int(exps[:, 1].max() - exps[:, 1].min()))
    return 8.0 + float(spread)


def default_grid(p: BivariatePolynomial, nx=200, ntheta=200, base="z") -> GridSpec:
    return GridSpec(default_window(p), nx, ntheta, base)


@dataclass
class CurvePointCloud:
    """Array-backed cloud of curve samples from one fiber sweep.

    Points are ordered column-major: grid column (fixed x) first, then
    theta, then sheet, which keeps runs deterministic.  ``chart`` records
    the sampled fiber direction; coordinates are always stored for the
    actual variables (z first).
    """

    polynomial: BivariatePolynomial
    grid: GridSpec
    z: np.ndarray
    w: np.ndarray
    gz: np.ndarray           # scaled z*df/dz  (shared per-point scale)
    gw: np.ndarray           # scaled w*df/dw
    m: np.ndarray
    jac_density: np.ndarray
    base: np.ndarray         # boolean: True where base coordinate is W
    singular: np.ndarray
    fiber_index: np.ndarray  # flattened grid index ix*ntheta + itheta
    sheet: np.ndarray
    rejected: int = 0
    merged: bool = False
    _points: list = field(default=None, repr=False)

    @property
    def chart(self):
        return self.grid.base

    def __len__(self):
        return self.z.size

    @cached_property
    def x1(self):
        return np.log(np.abs(self.z))

    @cached_property
    def x2(self):
        return np.log(np.abs(self.w))

    @cached_property
    def theta1(self):
        return np.mod(np.angle(self.z), TWO_PI)

    @cached_property
    def theta2(self):
        return np.mod(np.angle(self.w), TWO_PI)

    @property
    def points(self):
        """Materialized list of CurvePoint (built lazily)."""
        if self._points is None:
            pts = []
            scale = np.exp(self.polynomial.eval_scaled(self.z, self.w).logscale)
            for k in range(len(self)):
                pts.append(CurvePoint(
                    z=complex(self.z[k]), w=complex(self.w[k]),
                    fz=complex(self.gz[k] * scale[k] / self.z[k]),
                    fw=complex(self.gw[k] * scale[k] / self.w[k]),
                    m=complex(self.m[k]),
                    jac_density=float(self.jac_density[k]),
                    base_coordinate=BaseCoordinate.W if self.base[k] else BaseCoordinate.Z,
                ))
            self._points = pts
        return self._points

    def critical_flags(self, tol=CRITICAL_FLAG_TOL):
        return np.abs(self.m.imag) < tol

    def to_csv(self, fileobj):
        fileobj.write("x1,theta1,x2,theta2,re_m,im_m,critical_flag\n")
        flags = self.critical_flags()
        for k in range(len(self)):
            fileobj.write("%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d\n" % (
                self.x1[k], self.theta1[k], self.x2[k], self.theta2[k],
                self.m[k].real, self.m[k].imag, int(flags[k])))


def fiber_roots(p: BivariatePolynomial, z: complex):
    """All nonzero roots w of f(z, .), with multiplicity.

    Roots at w = 0 (outside the torus) are discarded.  A fiber on which
    f(z, .) vanishes identically is an error.
    """
    if z == 0:
        raise DomainError("invalid fiber", "z must be nonzero")
    coeffs = p.fiber_coeffs(np.array([z]))[0]
    scale = float(np.sum(np.abs(p.coeffs) * np.abs(z) ** p.exps[:, 0].astype(float)))
    if np.abs(coeffs).max() <= 1e-14 * scale:
        raise DomainError("identically zero fiber", "f(%r, w) vanishes identically" % z)
    roots, _ = roots_single(coeffs)
    return [complex(r) for r in roots]


def _solve_grid(p, grid):
    """Solve every fiber of the grid; returns flattened point arrays."""
    xs = grid.x_values()
    ths = grid.theta_values()
    X, T = np.meshgrid(xs, ths, indexing="ij")
    zflat = np.exp(X + 1j * T).ravel()

    coeffs = p.fiber_coeffs(zflat)
    zscale = np.zeros(zflat.size)
    for (i, _), a in zip(p.exps.tolist(), np.abs(p.coeffs).tolist()):
        zscale += a * np.abs(zflat) ** i
    if (np.abs(coeffs).max(axis=1) <= 1e-14 * zscale).any():
        bad = int(np.argmax(np.abs(coeffs).max(axis=1) <= 1e-14 * zscale))
        raise DomainError("identically zero fiber",
                          "f(z, .) vanishes identically at z=%r" % zflat[bad])
    roots, counts, _ = roots_batch(coeffs, scale=zscale)

    dmax = roots.shape[1]
    sheet_grid = np.tile(np.arange(dmax), (zflat.size, 1))
    keep = sheet_grid < counts[:, None]
    fiber_idx = np.tile(np.arange(zflat.size)[:, None], (1, dmax))[keep]
    sheets = sheet_grid[keep]
    wpts = roots[keep]
    zpts = zflat[fiber_idx]
    finite = np.isfinite(wpts) & (np.abs(wpts) > 0)
    return zpts[finite], wpts[finite], fiber_idx[finite], sheets[finite]


def sample_curve(p: BivariatePolynomial, grid: GridSpec = None) -> CurvePointCloud:
    """Sample the curve over a fiber grid.

    With ``grid.base == 'w'`` the sweep runs over w fibers instead (used to
    cover branch points and vertical tentacles); the stored coordinates are
    un-swapped so that z is always the first variable.
    """
    if grid is None:
        grid = default_grid(p)
    q = p.swapped() if grid.base == "w" else p
    zpts, wpts, fiber_idx, sheets = _solve_grid(q, grid)
    if grid.base == "w":
        zpts, wpts = wpts, zpts

    ev = p.eval_scaled(zpts, wpts)
    resid = np.abs(ev.f) / np.where(ev.denom > 0, ev.denom, 1.0)
    good = resid < RESIDUAL_TOL
    rejected = int((~good).sum())
    zpts, wpts = zpts[good], wpts[good]
    fiber_idx, sheets = fiber_idx[good], sheets[good]
    gz, gw = ev.gz[good], ev.gw[good]
    denom = ev.denom[good]

    singular = np.maximum(np.abs(gz), np.abs(gw)) < SINGULAR_TOL * denom
    # |fw| < SWAP_TOL * |fz|  <=>  |gw|/|w| < SWAP_TOL * |gz|/|z|
    swap = np.abs(gw) * np.abs(zpts) < SWAP_TOL * np.abs(gz) * np.abs(wpts)
    swap &= ~singular

    m = np.full(zpts.shape, np.nan + 0j, np.complex128)
    base_z = ~swap & ~singular
    m[base_z] = -gz[base_z] / gw[base_z]
    m[swap] = -gw[swap] / gz[swap]
    jac = np.where(singular, 0.0, np.abs(m.imag))
    jac = np.where(np.isfinite(jac), jac, 0.0)

    return CurvePointCloud(
        polynomial=p, grid=grid, z=zpts, w=wpts, gz=gz, gw=gw, m=m,
        jac_density=jac, base=swap, singular=singular,
        fiber_index=fiber_idx, sheet=sheets, rejected=rejected)


def merge_clouds(*clouds) -> "CurvePointCloud":
    """Concatenate clouds (e.g. the z-chart and w-chart sweeps of one curve)."""
    if not clouds:
        raise DomainError("empty merge", "need at least one cloud")
    first = clouds[0]
    cat = lambda name: np.concatenate([getattr(c, name) for c in clouds])
    return CurvePointCloud(
        polynomial=first.polynomial, grid=first.grid,
        z=cat("z"), w=cat("w"), gz=cat("gz"), gw=cat("gw"), m=cat("m"),
        jac_density=cat("jac_density"), base=cat("base"), singular=cat("singular"),
        fiber_index=cat("fiber_index"), sheet=cat("sheet"),
        rejected=sum(c.rejected for c in clouds),
        merged=len(clouds) > 1 or any(c.merged for c in clouds))


def two_chart_cloud(p: BivariatePolynomial, nx=200, ntheta=200, window=None):
    """Convenience: union of the z-fiber and w-fiber sweeps."""
    X = window if window is not None else default_window(p)
    cz = sample_curve(p, GridSpec(X, nx, ntheta, "z"))
    cw = sample_curve(p, GridSpec(X, nx, ntheta, "w"))
    return merge_clouds(cz, cw)


def point_at(p: BivariatePolynomial, z, w) -> CurvePoint:
    """Build a CurvePoint with derivative data at a known curve point."""
    ev = p.eval_scaled(np.array([z]), np.array([w]))
    gz, gw = complex(ev.gz[0]), complex(ev.gw[0])
    scale = math.exp(float(ev.logscale[0])) if abs(ev.logscale[0]) < 700 else math.inf
    singular = max(abs(gz), abs(gw)) < SINGULAR_TOL * float(ev.denom[0])
    if singular:
        raise DomainError("singular point", "both logarithmic gradient components vanish")
    swap = abs(gw) * abs(z) < SWAP_TOL * abs(gz) * abs(w)
    m = (-gw / gz) if swap else (-gz / gw)
    return CurvePoint(
        z=complex(z), w=complex(w),
        fz=gz * scale / z, fw=gw * scale / w,
        m=m, jac_density=abs(m.imag),
        base_coordinate=BaseCoordinate.W if swap else BaseCoordinate.Z)


def gauss_map(p: BivariatePolynomial, z, w) -> GaussValue:
    """Logarithmic Gauss map (z*fz : w*fw), max-normalized, with a realness
    residual that vanishes exactly on the preimage of the real line."""
    ev = p.eval_scaled(np.array([z]), np.array([w]))
    a, b = complex(ev.gz[0]), complex(ev.gw[0])
    if max(abs(a), abs(b)) < SINGULAR_TOL * float(ev.denom[0]):
        raise DomainError("singular point", "gauss map undefined: both components vanish")
    q = max(abs(a), abs(b))
    g1, g2 = a / q, b / q
    prod = g1 * np.conj(g2)
    residual = abs(prod.imag) / (abs(prod) + 1e-15)
    return GaussValue(g1, g2, float(residual))


# ---------------------------------------------------------------------------
# Critical locus
# ---------------------------------------------------------------------------

def _padded_grid(cloud):
    """(F, dmax) padded arrays of the cloud's fiber roots and slope signs."""
    F = cloud.grid.nx * cloud.grid.ntheta
    counts = np.bincount(cloud.fiber_index.astype(np.int64), minlength=F)
    dmax = int(counts.max()) if counts.size else 0
    roots = np.full((F, dmax), np.nan + 0j, np.complex128)
    sigma = np.zeros((F, dmax))
    sing = np.ones((F, dmax), bool)
    sig_all = -np.imag(cloud.gz * np.conj(cloud.gw))  # same sign as Im m (base z)
    fiber_var = cloud.w if cloud.chart == "z" else cloud.z
    slot = np.zeros(F, np.int64)
    for k in range(len(cloud)):
        f = int(cloud.fiber_index[k])
        s = slot[f]
        slot[f] += 1
        roots[f, s] = fiber_var[k]
        sigma[f, s] = sig_all[k]
        sing[f, s] = bool(cloud.singular[k])
    return roots, sigma, sing


def critical_points(cloud: CurvePointCloud, tol: float = 1e-12):
    """Points of the shared Log/Arg critical locus found on the cloud's grid.

    Sign changes of Im m between grid-adjacent samples of one sheet (both
    along theta and along x) are refined by bisection along the respective
    fiber parameter until |Im m| < tol, at most 60 steps.  Samples already
    satisfying |Im m| < tol qualify directly, which makes curves with
    identically real slope (e.g. binomials) fully critical.
    """
    if cloud.merged:
        raise ValueError("critical_points needs a single-chart cloud; "
                         "use two_chart_critical_points for merged sweeps")
    p = cloud.polynomial
    grid = cloud.grid
    q = p.swapped() if cloud.chart == "w" else p
    roots, sigma, sing = _padded_grid(cloud)
    nx, nt = grid.nx, grid.ntheta
    xs = grid.x_values()
    ths = grid.theta_values()
    F = nx * nt
    ugrid = np.repeat(xs, nt) + 1j * np.tile(ths, nx)

    direct = [(complex(cloud.z[k]), complex(cloud.w[k]))
              for k in np.nonzero((np.abs(cloud.m.imag) < tol) & ~cloud.singular)[0]]

    intervals = []  # (u_lo, u_hi, w_lo, w_hi, sign_lo)
    for axis in ("theta", "x"):
        if axis == "theta":
            src = np.arange(F)
            dst = (src // nt) * nt + (src % nt + 1) % nt
            du = 1j * grid.dtheta
        else:
            src = np.nonzero(np.arange(F) // nt < nx - 1)[0]
            dst = src + nt
            du = grid.dx
        ra, rb = roots[src], roots[dst]
        if ra.shape[1] == 0:
            continue
        dist = np.abs(ra[:, :, None] - rb[:, None, :])
        dist = np.where(np.isfinite(dist), dist, np.inf)
        match = np.argmin(dist, axis=2)
        matched = np.take_along_axis(dist, match[:, :, None], axis=2)[:, :, 0] < np.inf
        sb = np.take_along_axis(sigma[dst], match, axis=1)
        singb = np.take_along_axis(sing[dst], match, axis=1)
        flip = matched & ~sing[src] & ~singb & (sigma[src] * sb < 0)
        for f, s in zip(*np.nonzero(flip)):
            intervals.append((ugrid[src[f]], ugrid[src[f]] + du,
                              roots[src[f], s], rb[f, match[f, s]], sigma[src[f], s]))

    refined = _bisect_intervals(q, intervals, tol)
    pts = refined + direct
    if cloud.chart == "w":
        pts = [(w, z) for (z, w) in pts]

    out = []
    seen = []
    for z, w in pts:
        dup = False
        for z0, w0 in seen:
            if abs(z - z0) <= 1e-7 * (1 + abs(z0)) and abs(w - w0) <= 1e-7 * (1 + abs(w0)):
                dup = True
                break
        if dup:
            continue
        seen.append((z, w))
        try:
            cp = point_at(p, z, w)
        except DomainError:
            continue
        # guard against unconverged bisections from spurious sheet matches
        if abs(cp.m.imag) > max(1e3 * tol, 1e-8):
            continue
        out.append(cp)
    return out


def _bisect_intervals(q, intervals, tol, max_iter=60):
    """Batched bisection between log-chart positions for Im m sign changes."""
    if not intervals:
        return []
    lo = np.array([iv[0] for iv in intervals], np.complex128)
    hi = np.array([iv[1] for iv in intervals], np.complex128)
    wlo = np.array([iv[2] for iv in intervals], np.complex128)
    whi = np.array([iv[3] for iv in intervals], np.complex128)
    slo = np.array([iv[4] for iv in intervals])

    result_z = np.zeros(len(intervals), np.complex128)
    result_w = np.zeros(len(intervals), np.complex128)
    done = np.zeros(len(intervals), bool)
    for _ in range(max_iter):
        umid = 0.5 * (lo + hi)
        zm = np.exp(umid)
        coeffs = q.fiber_coeffs(zm)
        wm = newton_track(coeffs, 0.5 * (wlo + whi))
        ev = q.eval_scaled(zm, wm)
        sigma = -np.imag(ev.gz * np.conj(ev.gw))
        with np.errstate(invalid="ignore", divide="ignore"):
            imm = np.where(np.abs(ev.gw) > 0, np.imag(-ev.gz / ev.gw), 0.0)
        hit = (np.abs(imm) < tol) & ~done
        result_z[hit] = zm[hit]
        result_w[hit] = wm[hit]
        done |= hit
        if done.all():
            break
        same = sigma * slo > 0
        lo = np.where(~done & same, umid, lo)
        wlo = np.where(~done & same, wm, wlo)
        hi = np.where(~done & ~same, umid, hi)
        whi = np.where(~done & ~same, wm, whi)
    if not done.all():
        umid = 0.5 * (lo + hi)
        zm = np.exp(umid)
        wm = newton_track(q.fiber_coeffs(zm), 0.5 * (wlo + whi))
        result_z[~done] = zm[~done]
        result_w[~done] = wm[~done]
    return [(complex(a), complex(b)) for a, b in zip(result_z, result_w)]


def two_chart_critical_points(p, nx=200, ntheta=200, window=None, tol=1e-12):
    """Critical points from both fiber sweeps of the curve."""
    X = window if window is not None else default_window(p)
    cz = sample_curve(p, GridSpec(X, nx, ntheta, "z"))
    cw = sample_curve(p, GridSpec(X, nx, ntheta, "w"))
    return critical_points(cz, tol) + critical_points(cw, tol)


def critical_values_arg(points):
    """Argument-map images of critical points, reduced to the torus."""
    return [pt.arg() if isinstance(pt, CurvePoint) else TorusPoint(*pt) for pt in points]


# ---------------------------------------------------------------------------
# Finite-difference Jacobians (the executable form of the Log/Arg identity)
# ---------------------------------------------------------------------------

def finite_difference_jacobians(p, z, w, h=1e-5, base_w=None, richardson=True):
    """Central-difference Jacobian determinants of Arg and Log sheet maps.

    For each point, the local sheet w(u) over u = log z (or z(v) over
    v = log w where ``base_w``) is re-solved at u +/- h and u +/- i*h and
    the two 2x2 Jacobians of (theta1, theta2) and (x1, x2) with respect to
    (x1, theta1) are assembled.  Both determinants equal -Im m on the curve.
    ``base_w`` defaults to |m| > 1, i.e. each point is differentiated in
    the chart where its sheet function is flattest; with ``richardson``
    the h and h/2 stencils are extrapolated, taking the agreement of the
    two determinants below 1e-9 on well-separated sheets.

    Returns (det_arg, det_log, im_m, valid); ``valid`` is False where sheet
    tracking was unreliable (nearby root collision).
    """
    z = np.asarray(z, np.complex128)
    w = np.asarray(w, np.complex128)
    if base_w is None:
        ev = p.eval_scaled(z, w)
        with np.errstate(invalid="ignore", divide="ignore"):
            base_w = np.abs(ev.gz) > np.abs(ev.gw)
    if richardson:
        da1, dl1, im1, ok1 = finite_difference_jacobians(p, z, w, h, base_w, richardson=False)
        da2, dl2, im2, ok2 = finite_difference_jacobians(p, z, w, h / 2, base_w, richardson=False)
        return (4 * da2 - da1) / 3, (4 * dl2 - dl1) / 3, im1, ok1 & ok2
    det_arg = np.zeros(z.size)
    det_log = np.zeros(z.size)
    im_m = np.zeros(z.size)
    valid = np.ones(z.size, bool)

    for flag in (False, True):
        sel = np.nonzero(base_w == flag)[0]
        if sel.size == 0:
            continue
        q = p.swapped() if flag else p
        a = w[sel] if flag else z[sel]   # fiber variable of the chart
        b = z[sel] if flag else w[sel]   # solved variable
        da, dl, im, ok = _fd_one_chart(q, a, b, h)
        det_arg[sel] = da
        det_log[sel] = dl
        im_m[sel] = im
        valid[sel] = ok
    return det_arg, det_log, im_m, valid


def _fd_one_chart(q, a, b, h):
    u = np.log(a)
    ev = q.eval_scaled(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        m = -ev.gz / ev.gw
    ok = np.isfinite(m)

    coeffs0 = q.fiber_coeffs(a)
    full_roots, counts, _ = roots_batch(coeffs0)
    gap = np.full(a.size, np.inf)
    for k in range(full_roots.shape[1]):
        col = full_roots[:, k]
        dist = np.abs(col - b)
        away = (dist > 1e-9 * (1 + np.abs(b))) & np.isfinite(col)
        gap = np.where(away, np.minimum(gap, dist), gap)
    ok &= gap > 1e-3 * (1 + np.abs(b))

    shifts = np.array([h, -h, 1j * h, -1j * h])
    solved = []
    for s in shifts:
        a_s = np.exp(u + s)
        predict = b * np.exp(s * m)
        coeffs = q.fiber_coeffs(a_s)
        b_s = newton_track(coeffs, np.where(np.isfinite(predict), predict, b), iters=12)
        drift = np.abs(b_s - b) > 0.2 * (1 + np.abs(b))
        ok &= ~drift
        solved.append(b_s)
    bp, bm, bip, bim = solved

    def wrapdiff(x, y):
        return np.mod(x - y + math.pi, TWO_PI) - math.pi

    dth2_dx1 = wrapdiff(np.angle(bp), np.angle(bm)) / (2 * h)
    dth2_dth1 = wrapdiff(np.angle(bip), np.angle(bim)) / (2 * h)
    dx2_dx1 = (np.log(np.abs(bp)) - np.log(np.abs(bm))) / (2 * h)
    dx2_dth1 = (np.log(np.abs(bip)) - np.log(np.abs(bim))) / (2 * h)

    jac_arg = np.zeros(a.shape + (2, 2))
    jac_arg[..., 0, 0] = 0.0          # d theta1 / d x1
    jac_arg[..., 0, 1] = 1.0          # d theta1 / d theta1
    jac_arg[..., 1, 0] = dth2_dx1
    jac_arg[..., 1, 1] = dth2_dth1
    jac_log = np.zeros(a.shape + (2, 2))
    jac_log[..., 0, 0] = 1.0
    jac_log[..., 0, 1] = 0.0
    jac_log[..., 1, 0] = dx2_dx1
    jac_log[..., 1, 1] = dx2_dth1
    det_arg = np.linalg.det(jac_arg)
    det_log = np.linalg.det(jac_log)
    return det_arg, det_log, np.where(ok, m.imag, 0.0), ok
