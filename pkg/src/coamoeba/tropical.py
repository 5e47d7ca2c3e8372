"""Amoeba spine, dual subdivision, codual lines, and tropical limits.

The spine is the corner locus of  max_a (c_a + <a, x>)  over the orders a
realized by amoeba complement components, where c_a is the Ronkin function
minus its linear part, evaluated at a probe point of the component.  The
subdivision of the Newton polygon dual to the spine is the one induced by
the lifting a -> c_a (upper faces of the lifted point set, matching the
max-plus convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .curves import CurvePointCloud, GridSpec, default_window, sample_curve
from .errors import DomainError
from .measure import log_fiber_count
from .polynomials import BivariatePolynomial, LatticePoint, newton_polygon
from .raster import TorusRaster
from .rasterize import coamoeba_raster, paint_critical_values, quotient_fold  # noqa: F401  (re-exported: raster ops live with the tropical toolkit)

TWO_PI = 2.0 * math.pi
LIFT_FLAT_TOL = 1e-7   # lifts within this of a common plane: one flat cell


# ---------------------------------------------------------------------------
# Ronkin function and the order map
# ---------------------------------------------------------------------------

def ronkin_value(p: BivariatePolynomial, x, M: int = 128, detail: bool = False):
    """Mean of log|f| over the fiber torus at x, by midpoint quadrature.

    Outside the amoeba the integrand is analytic and the value converges
    geometrically in M.  The M-vs-2M disagreement is available via
    ``detail=True``; a fiber touching the zero locus is an error.
    """
    def mean_at(m):
        th = (np.arange(m) + 0.5) * (TWO_PI / m)
        T1, T2 = np.meshgrid(th, th, indexing="ij")
        z = np.exp(x[0] + 1j * T1)
        w = np.exp(x[1] + 1j * T2)
        ev = p.eval_scaled(z, w)
        rel = np.abs(ev.f) / np.where(ev.denom > 0, ev.denom, 1.0)
        if rel.min() < 1e-13:
            raise DomainError("fiber hits zero locus",
                              "|f| vanishes on the fiber torus over x=%r" % (tuple(x),))
        return float(np.mean(np.log(np.abs(ev.f)) + ev.logscale))

    coarse = mean_at(M)
    fine = mean_at(2 * M)
    if detail:
        return fine, abs(fine - coarse)
    return fine


def order_map(p: BivariatePolynomial, x, cloud: CurvePointCloud, M: int = 96) -> LatticePoint:
    """Order of the amoeba complement component containing x.

    The gradient of the Ronkin function, computed as the fiber-torus mean
    of (Re(z fz / f), Re(w fw / f)), is rounded to the nearest lattice
    point.  x must lie outside the amoeba.
    """
    if log_fiber_count(p, x, cloud) > 0:
        raise DomainError("inside amoeba", "x=%r lies on or inside the amoeba" % (tuple(x),))
    grad = _ronkin_gradient(p, x, M)
    nearest = (round(grad[0]), round(grad[1]))
    if math.hypot(grad[0] - nearest[0], grad[1] - nearest[1]) > 0.2:
        raise DomainError("ambiguous rounding",
                          "Ronkin gradient %r is not near a lattice point" % (grad,))
    return LatticePoint(int(nearest[0]), int(nearest[1]))


def _ronkin_gradient(p, x, M):
    th = (np.arange(M) + 0.5) * (TWO_PI / M)
    T1, T2 = np.meshgrid(th, th, indexing="ij")
    z = np.exp(x[0] + 1j * T1)
    w = np.exp(x[1] + 1j * T2)
    ev = p.eval_scaled(z, w)
    rel = np.abs(ev.f) / np.where(ev.denom > 0, ev.denom, 1.0)
    if rel.min() < 1e-13:
        raise DomainError("fiber hits zero locus",
                          "|f| vanishes on the fiber torus over x=%r" % (tuple(x),))
    g1 = float(np.mean((ev.gz / ev.f).real))
    g2 = float(np.mean((ev.gw / ev.f).real))
    return (g1, g2)


# ---------------------------------------------------------------------------
# Regular subdivisions and the tropical curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualSubdivision:
    """Cells of the Newton polygon induced by the lifting's upper faces."""

    cells: tuple          # each cell: tuple of (i, j) vertex pairs, CCW
    lifting: dict         # LatticePoint -> float, realized orders only

    def edges(self):
        """Subdivision edges with incident cell indices: {(a, b): [cells]}."""
        out = {}
        for ci, cell in enumerate(self.cells):
            n = len(cell)
            for k in range(n):
                a, b = cell[k], cell[(k + 1) % n]
                key = (min(a, b), max(a, b))
                out.setdefault(key, []).append(ci)
        return out


@dataclass(frozen=True)
class TropicalVertex:
    position: tuple
    multiplicity: int
    cell_index: int


@dataclass(frozen=True)
class TropicalEdge:
    """A bounded segment or an unbounded ray of the tropical curve."""

    kind: str             # "segment" | "ray"
    tail: int             # vertex index
    head: int             # vertex index, or -1 for rays
    direction: tuple      # primitive integer direction, pointing away from tail
    weight: int
    dual_edge: tuple      # ((i, j), (i, j)) endpoints of the dual subdivision edge


@dataclass(frozen=True)
class TropicalCurve:
    vertices: tuple
    edges: tuple
    dual: DualSubdivision
    lines: tuple = ()     # (point, primitive direction, weight) for rank-1 support

    @property
    def rays(self):
        return tuple(e for e in self.edges if e.kind == "ray")

    @property
    def segments(self):
        return tuple(e for e in self.edges if e.kind == "segment")

    def balancing_defect(self, vertex_index):
        """Integer sum of weight * direction over edges at a vertex."""
        s = np.zeros(2, dtype=np.int64)
        for e in self.edges:
            if e.tail == vertex_index:
                s += e.weight * np.array(e.direction, dtype=np.int64)
            elif e.kind == "segment" and e.head == vertex_index:
                s -= e.weight * np.array(e.direction, dtype=np.int64)
        return (int(s[0]), int(s[1]))

    def to_json_dict(self):
        return {
            "vertices": [{"x": v.position[0], "y": v.position[1],
                          "multiplicity": v.multiplicity} for v in self.vertices],
            "edges": [{"kind": e.kind, "tail": e.tail, "head": e.head,
                       "direction": list(e.direction), "weight": e.weight,
                       "dual_edge": [list(e.dual_edge[0]), list(e.dual_edge[1])]}
                      for e in self.edges],
            "dual_cells": [[list(v) for v in cell] for cell in self.dual.cells],
            "lifting": [{"i": pt.i, "j": pt.j, "c": c}
                        for pt, c in sorted(self.dual.lifting.items())],
            "lines": [{"point": list(pt), "direction": list(d), "weight": w}
                      for pt, d, w in self.lines],
        }


def _primitive(v):
    g = math.gcd(abs(int(v[0])), abs(int(v[1])))
    return (int(v[0]) // g, int(v[1]) // g) if g else (0, 0)


def _cell_area2(cell):
    s = 0
    for k in range(len(cell)):
        a, b = cell[k], cell[(k + 1) % len(cell)]
        s += a[0] * b[1] - a[1] * b[0]
    return abs(s)


def regular_subdivision(points, lifts, tol=LIFT_FLAT_TOL) -> DualSubdivision:
    """Subdivision of the convex hull of ``points`` induced by ``lifts``.

    Upper faces of the lifted 3d point set, with near-coplanar faces merged
    into one flat cell (tolerance ``tol``), so balanced liftings yield
    square cells rather than an arbitrary triangulation.
    """
    pts = np.asarray([(int(a[0]), int(a[1])) for a in points], dtype=np.int64)
    c = np.asarray(lifts, dtype=float)
    lifting = {LatticePoint(int(a[0]), int(a[1])): float(v) for a, v in zip(pts, c)}
    from .polynomials import convex_hull_lattice

    hull2d = convex_hull_lattice([tuple(a) for a in pts])
    if len(hull2d) <= 2:
        return DualSubdivision(cells=(), lifting=lifting)

    # all lifted points on one affine plane -> a single flat cell
    A = np.column_stack([pts, np.ones(len(pts))])
    sol, res, rank, _ = np.linalg.lstsq(A, c, rcond=None)
    flat = np.abs(A @ sol - c).max() <= tol * (1.0 + np.abs(c).max())
    if flat:
        return DualSubdivision(cells=(tuple(tuple(v) for v in hull2d),), lifting=lifting)

    lifted = np.column_stack([pts.astype(float), c])
    try:
        hull = ConvexHull(lifted)
    except QhullError:
        return DualSubdivision(cells=(tuple(tuple(v) for v in hull2d),), lifting=lifting)

    groups = {}
    for eq, simplex in zip(hull.equations, hull.simplices):
        n = eq[:3]
        if n[2] <= 1e-12:
            continue
        plane = (-n[0] / n[2], -n[1] / n[2], -eq[3] / n[2])  # c = px*i + py*j + off
        key = tuple(np.round(plane, 7))
        groups.setdefault(key, set()).update(int(s) for s in simplex)

    # merge groups whose planes agree within tol at their own points
    cells = []
    for key, idxset in sorted(groups.items()):
        px, py, off = key
        on_plane = np.nonzero(np.abs(pts[:, 0] * px + pts[:, 1] * py + off - c)
                              <= tol * (1.0 + np.abs(c).max()))[0]
        members = sorted(set(on_plane.tolist()) | idxset)
        cell_hull = convex_hull_lattice([tuple(pts[k]) for k in members])
        if len(cell_hull) >= 3:
            cells.append(tuple(tuple(v) for v in cell_hull))
    cells = sorted(set(cells))
    return DualSubdivision(cells=tuple(cells), lifting=lifting)


def _vertex_position(cell, lifting):
    base = cell[0]
    c0 = lifting[LatticePoint(*base)]
    rows = []
    rhs = []
    for a in cell[1:]:
        rows.append([a[0] - base[0], a[1] - base[1]])
        rhs.append(c0 - lifting[LatticePoint(*a)])
    sol, _, _, _ = np.linalg.lstsq(np.asarray(rows, float), np.asarray(rhs, float), rcond=None)
    return (float(sol[0]), float(sol[1]))


def tropical_curve_from_subdivision(dual: DualSubdivision) -> TropicalCurve:
    """Dual graph of the subdivision, positioned by the lifting.

    Edge directions rotate the CCW-oriented dual cell edges by -90 degrees,
    which makes the balancing condition an exact integer identity.
    """
    if not dual.cells:
        return _degenerate_curve(dual)
    vertices = []
    for ci, cell in enumerate(dual.cells):
        pos = _vertex_position(cell, dual.lifting)
        vertices.append(TropicalVertex(pos, _cell_area2(cell), ci))

    edge_map = dual.edges()
    edges = []
    for (a, b), cells in sorted(edge_map.items()):
        d = (b[0] - a[0], b[1] - a[1])
        weight = math.gcd(abs(d[0]), abs(d[1]))
        if len(cells) == 2:
            ci, cj = cells
            # orientation of (a, b) within cell ci fixes the outgoing direction
            direction = _outgoing_direction(dual.cells[ci], a, b)
            edges.append(TropicalEdge("segment", ci, cj, direction, weight, (a, b)))
        else:
            ci = cells[0]
            direction = _outgoing_direction(dual.cells[ci], a, b)
            edges.append(TropicalEdge("ray", ci, -1, direction, weight, (a, b)))
    return TropicalCurve(tuple(vertices), tuple(edges), dual)


def _outgoing_direction(cell, a, b):
    n = len(cell)
    for k in range(n):
        p, q = cell[k], cell[(k + 1) % n]
        if (p, q) == (a, b):
            return _primitive((q[1] - p[1], -(q[0] - p[0])))
        if (p, q) == (b, a):
            return _primitive((q[1] - p[1], -(q[0] - p[0])))
    raise DomainError("missing coefficient", "edge %r-%r not on cell" % (a, b))


def _degenerate_curve(dual: DualSubdivision) -> TropicalCurve:
    """Support on a line (or a point): the curve is a family of parallel
    lines from the 1d upper envelope of the lifting."""
    pts = sorted(dual.lifting.keys())
    if len(pts) <= 1:
        return TropicalCurve((), (), dual)
    base = pts[0]
    d = _primitive((pts[-1].i - base.i, pts[-1].j - base.j))
    norm2 = d[0] ** 2 + d[1] ** 2
    s = {}
    for pt in pts:
        # pt - base = step * d with integer step
        step = ((pt.i - base.i) * d[0] + (pt.j - base.j) * d[1]) // norm2
        s[step] = dual.lifting[pt]
    steps = sorted(s)
    # upper concave envelope in 1d
    env = []
    for t in steps:
        env.append((t, s[t]))
        while len(env) >= 3:
            (t0, c0), (t1, c1), (t2, c2) = env[-3:]
            if (c1 - c0) * (t2 - t1) <= (c2 - c1) * (t1 - t0):
                env.pop(-2)
            else:
                break
    lines = []
    perp = (-d[1], d[0])
    for (t0, c0), (t1, c1) in zip(env, env[1:]):
        # breakpoint where c0 + t0*u = c1 + t1*u along u = <d, xi>
        ubreak = (c0 - c1) / (t1 - t0)
        point = (ubreak * d[0] / norm2, ubreak * d[1] / norm2)
        lines.append((point, perp, t1 - t0))
    return TropicalCurve((), (), dual, lines=tuple(lines))


# ---------------------------------------------------------------------------
# Component discovery and the spine
# ---------------------------------------------------------------------------

def lifting_constants(p: BivariatePolynomial, cloud: CurvePointCloud = None,
                      probes_per_order: int = 1, M: int = 96,
                      coarse_steps: int = 13):
    """Ronkin offsets c_a = R(x) - <a, x> per realized complement order.

    Returns {LatticePoint: [(probe, c), ...]}.  Vertex orders of the Newton
    polygon are probed along outward normal-fan directions; bounded
    components are searched on a coarse grid.  Orders whose components are
    not found are simply absent.
    """
    if cloud is None:
        cloud = sample_curve(p, GridSpec(default_window(p), 80, 80))
    polygon = newton_polygon(p)
    X = default_window(p)
    samples = {}

    def try_probe(x, want=None):
        try:
            if log_fiber_count(p, x, cloud) > 0:
                return None
            order = order_map(p, x, cloud, M=M)
        except DomainError:
            return None
        if want is not None and order != want:
            return None
        lst = samples.setdefault(order, [])
        if len(lst) < probes_per_order:
            c = ronkin_value(p, x, M=M) - order.i * x[0] - order.j * x[1]
            lst.append(((float(x[0]), float(x[1])), c))
        return order

    verts = [v.as_tuple() for v in polygon.vertices]
    nv = len(verts)
    if nv >= 3:
        for k, v in enumerate(verts):
            prev = verts[(k - 1) % nv]
            nxt = verts[(k + 1) % nv]
            e_in = (v[0] - prev[0], v[1] - prev[1])
            e_out = (nxt[0] - v[0], nxt[1] - v[1])
            n1 = np.array([e_in[1], -e_in[0]], float)
            n2 = np.array([e_out[1], -e_out[0]], float)
            d = n1 / np.linalg.norm(n1) + n2 / np.linalg.norm(n2)
            d = d / np.linalg.norm(d)
            for r_idx in range(max(probes_per_order, 1)):
                radius = X + 3.0 + 2.0 * r_idx
                try_probe((radius * d[0], radius * d[1]), want=LatticePoint(*v))
    # degenerate hulls (a point or a segment) are covered by the grid probes

    grid = np.linspace(-X, X, coarse_steps)
    for gx in grid:
        for gy in grid:
            try_probe((float(gx), float(gy)))
    return samples


def spine(p: BivariatePolynomial, cloud: CurvePointCloud = None,
          probes_per_order: int = 1, M: int = 96) -> TropicalCurve:
    """Spine of the amoeba as a tropical curve with its dual subdivision."""
    if len(p) == 1:
        lifting = {pt: 0.0 for pt in p.support()}
        return TropicalCurve((), (), DualSubdivision((), lifting))
    samples = lifting_constants(p, cloud, probes_per_order=probes_per_order, M=M)
    if not samples:
        raise DomainError("component not found", "no amoeba complement component was located")
    orders = sorted(samples.keys())
    points = [o.as_tuple() for o in orders]
    lifts = [float(np.mean([c for _, c in samples[o]])) for o in orders]
    dual = regular_subdivision(points, lifts)
    return tropical_curve_from_subdivision(dual)


def extended_lifting(dual: DualSubdivision, support):
    """Lifting values for support points missing from the realized orders,
    read off the upper envelope (so the deformation respects the spine)."""
    out = {pt: c for pt, c in dual.lifting.items()}
    missing = [pt for pt in support if pt not in out]
    if not missing:
        return out
    planes = []
    for cell in dual.cells:
        base = cell[0]
        pos = _vertex_position(cell, dual.lifting)
        c0 = dual.lifting[LatticePoint(*base)]
        # plane c(a) = c0 - <a - base, pos>... corner locus duality:
        # on the cell, c_a + <a, x0> is constant; so c(a) = const - <a, x0>
        const = c0 + base[0] * pos[0] + base[1] * pos[1]
        planes.append((pos, const, cell))
    for pt in missing:
        val = None
        for (pos, const, cell) in planes:
            if _cell_contains(cell, pt.as_tuple()):
                val = const - pt.i * pos[0] - pt.j * pos[1]
                break
        if val is None and planes:
            val = min(const - pt.i * pos[0] - pt.j * pos[1] for (pos, const, _) in planes)
        out[pt] = float(val if val is not None else 0.0)
    return out


def _cell_contains(cell, q):
    n = len(cell)
    for k in range(n):
        a, b = cell[k], cell[(k + 1) % n]
        if (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) < 0:
            return False
    return True


# ---------------------------------------------------------------------------
# Codual lines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoduaLine:
    """Torus line  arg(a_alpha) - arg(a_beta) + <alpha - beta, theta> = pi.

    Stored as <d, theta> = offset (mod 2 pi) with d = alpha - beta; external
    when the dual subdivision edge lies on the Newton polygon boundary.
    """

    alpha: LatticePoint
    beta: LatticePoint
    d: tuple
    offset: float
    is_external: bool

    def distance(self, theta):
        """Flat-torus distance from angle pair(s) to the line."""
        t = np.asarray(theta.as_tuple() if hasattr(theta, "as_tuple") else theta, float)
        val = t[..., 0] * self.d[0] + t[..., 1] * self.d[1] - self.offset
        wrapped = np.abs(np.mod(val + math.pi, TWO_PI) - math.pi)
        return wrapped / math.hypot(self.d[0], self.d[1])


def codual_lines(p: BivariatePolynomial, dual: DualSubdivision):
    """One codual line per subdivision edge, external flags included."""
    polygon = newton_polygon(p)
    support = set(p.support())
    terms = p.terms
    out = []
    for (a, b), cells in sorted(dual.edges().items()):
        pa, pb = LatticePoint(*a), LatticePoint(*b)
        if pa not in support or pb not in support:
            raise DomainError("missing coefficient",
                              "subdivision edge %r-%r has an endpoint outside the support" % (a, b))
        d = (pb.i - pa.i, pb.j - pa.j)
        # arg a_alpha - arg a_beta + <alpha - beta, theta> = pi, alpha=pb here
        offset = math.pi - (np.angle(terms[pb]) - np.angle(terms[pa]))
        external = polygon.boundary_contains_segment(a, b)
        out.append(CoduaLine(pb, pa, d, float(np.mod(offset, TWO_PI)), external))
    return out


# ---------------------------------------------------------------------------
# H_h rescaling, coamoeba rasters, tropical limit runs
# ---------------------------------------------------------------------------

def h_scale(point, h: float):
    """Raise both moduli to the power h, keeping the arguments."""
    if h <= 0:
        raise DomainError("invalid scale", "h must be positive")
    z, w = point
    if z == 0 or w == 0:
        raise DomainError("invalid point", "point must lie in the torus")
    return (abs(z) ** h * z / abs(z), abs(w) ** h * w / abs(w))


def tropical_limit_run(p: BivariatePolynomial, c, t_sequence, resolution: int = 512,
                       nx: int = 250, ntheta: int = 250, window=None):
    """Coamoeba rasters of the deformation family along decreasing t.

    Returns [(t, raster, distance_to_previous)], first distance None.  For
    curves whose coamoeba is already the tropical-limit one the distance
    sequence stays at the raster noise floor.
    """
    from .polynomials import deformation_family
    from .raster import hausdorff_raster_distance

    ts = [float(t) for t in t_sequence]
    if any(not (0 < t <= 1.0 / math.e + 1e-15) for t in ts):
        raise DomainError("t out of range", "all t must lie in (0, 1/e]")
    if any(b >= a for a, b in zip(ts, ts[1:])):
        raise DomainError("t out of range", "t sequence must be strictly decreasing")
    out = []
    prev = None
    for t in ts:
        q = deformation_family(p, c, t)
        raster = coamoeba_raster(q, resolution=resolution, nx=nx, ntheta=ntheta, window=window)
        dist = None if prev is None else hausdorff_raster_distance(prev, raster)
        out.append((t, raster, dist))
        prev = raster
    return out
