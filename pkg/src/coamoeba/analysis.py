"""Coamoeba decomposition, extra-piece detection, and Harnack classification.

The coamoeba minus the critical values of the argument map splits into
components on which the fiber count is locally constant.  A component is an
extra-piece when part of its boundary runs along the critical-value curves
instead of the codual lines; their absence is equivalent to the fiber count
being globally constant, and the maximal-area case characterizes curves
that are real up to a torus action with Harnack real locus.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .curves import critical_values_arg, two_chart_cloud, two_chart_critical_points
from .errors import DomainError
from .measure import alga_area, area_mult_coamoeba, arg_fiber_count, log_fiber_count
from .polynomials import BivariatePolynomial, newton_polygon, real_up_to_torus_action
from .raster import TorusRaster, torus_closing, torus_dilate, torus_distance_cells, torus_label

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ComponentReport:
    """One connected component of the coamoeba minus the critical values.

    ``k`` is the sampled Arg-fiber cardinality on the component;
    ``quotient_k`` additionally sums the fiber counts over the four real
    2-torsion translates, which is the multiplicity of the projection to
    the quotient torus (the constant in the area identity).
    """

    label: int
    cell_count: int
    area: float
    k: Optional[int]
    k_samples: tuple
    quotient_k: Optional[int]
    quotient_samples: tuple
    boundary_on_codual: int
    boundary_on_critical: int
    boundary_unclassified: int
    adjacent_coduals: tuple
    extra_piece: bool


@dataclass(frozen=True)
class RegionReport:
    resolution: int
    components: tuple
    global_k: Optional[int]
    global_quotient_k: Optional[int] = None
    empty: bool = False
    note: str = ""

    @property
    def has_extra_piece(self):
        return any(c.extra_piece for c in self.components)

    def to_json_dict(self):
        return {
            "resolution": self.resolution,
            "empty": self.empty,
            "note": self.note,
            "global_k": self.global_k,
            "global_quotient_k": self.global_quotient_k,
            "has_extra_piece": self.has_extra_piece,
            "components": [
                {
                    "label": c.label,
                    "cell_count": c.cell_count,
                    "area": c.area,
                    "k": c.k,
                    "k_samples": list(c.k_samples),
                    "quotient_k": c.quotient_k,
                    "quotient_samples": list(c.quotient_samples),
                    "boundary_on_codual": c.boundary_on_codual,
                    "boundary_on_critical": c.boundary_on_critical,
                    "boundary_unclassified": c.boundary_unclassified,
                    "adjacent_coduals": list(c.adjacent_coduals),
                    "extra_piece": c.extra_piece,
                }
                for c in self.components
            ],
        }


def _neighbor_shifts(mask):
    return (np.roll(mask, 1, 0), np.roll(mask, -1, 0),
            np.roll(mask, 1, 1), np.roll(mask, -1, 1))


def region_decomposition(raster: TorusRaster, critical_values, coduals,
                         polynomial: BivariatePolynomial = None, cloud=None,
                         k_samples: int = 5, line_tol_cells: float = 2.0,
                         critical_tol_cells: float = 2.0, min_arc_cells: int = 3,
                         line_cut_cells: float = 0.75, closing: bool = True) -> RegionReport:
    """Decompose the occupied raster into constant-fiber-count components.

    A one-cell band around critical-value cells is removed and the raster
    is additionally cut along the codual lines: the fiber count can change
    across a codual line without any fold (a solution escapes through a
    tentacle end there), so components separated only by codual lines must
    not merge.  Cells removed by the line cut are re-attached to their
    nearest component afterwards, so reported areas and boundaries refer
    to the full regions; the critical band stays removed.

    Boundary cells are classified on-codual-line (within ``line_tol_cells``)
    else on-critical-curve (within ``critical_tol_cells`` of a critical
    cell).  A component is an extra-piece when a connected boundary arc of
    at least ``min_arc_cells`` cells lies on the critical curves and off
    every codual line.  Fiber counts are sampled at interior cells when the
    polynomial and a seed cloud are supplied.
    """
    n = raster.resolution
    h = raster.cell_width
    occ = raster.occupancy.copy()
    if closing:
        occ = torus_closing(occ)

    crit_mask = raster.critical.copy()
    for v in critical_values:
        t = v.as_tuple() if hasattr(v, "as_tuple") else tuple(v)
        i1, i2 = raster.cell_index(t[0], t[1])
        crit_mask[i1, i2] = True
    band = torus_dilate(crit_mask, 1)

    centers1 = (np.arange(n) + 0.5) * h
    C1, C2 = np.meshgrid(centers1, centers1, indexing="ij")
    centers = np.stack([C1, C2], axis=-1)
    line_dist = np.full((n, n), np.inf)
    line_hit = np.full((n, n), -1, dtype=np.int64)
    for li, line in enumerate(coduals):
        d = line.distance(centers)
        closer = d < line_dist
        line_dist = np.where(closer, d, line_dist)
        line_hit = np.where(closer, li, line_hit)
    on_line = line_dist <= line_tol_cells * h
    line_cut = line_dist <= line_cut_cells * h

    work = occ & ~band
    if not work.any():
        return RegionReport(n, (), None, empty=True, note="empty coamoeba")

    labels, num = torus_label(work & ~line_cut, connectivity=4)
    # re-attach occupied line-cut cells to the adjacent component
    reclaim = work & (labels == 0)
    for _ in range(int(math.ceil(line_cut_cells)) + 2):
        if not reclaim.any():
            break
        cand = np.full((n, n), np.iinfo(np.int64).max, dtype=np.int64)
        for shifted in _neighbor_shifts(labels):
            cand = np.minimum(cand, np.where(shifted > 0, shifted, cand))
        grow = reclaim & (cand < np.iinfo(np.int64).max)
        labels[grow] = cand[grow]
        reclaim &= ~grow

    crit_cell_dist = torus_distance_cells(crit_mask)
    near_crit = crit_cell_dist <= critical_tol_cells + 1.0  # +1: the removed band

    components = []
    all_samples = []
    for lab in range(1, num + 1):
        mask = labels == lab
        outside = ~mask
        nb = _neighbor_shifts(outside)
        boundary = mask & (nb[0] | nb[1] | nb[2] | nb[3])

        b_line = boundary & on_line
        b_crit = boundary & ~on_line & near_crit
        b_unknown = boundary & ~on_line & ~near_crit

        extra = False
        if b_crit.any():
            arcs, narcs = torus_label(b_crit, connectivity=8)
            for a in range(1, narcs + 1):
                if (arcs == a).sum() >= min_arc_cells:
                    extra = True
                    break

        adjacent = tuple(sorted(set(line_hit[boundary & on_line].tolist())))

        ks = ()
        qs = ()
        kval = qval = None
        if polynomial is not None and cloud is not None:
            ks, qs = _sample_fiber_counts(polynomial, cloud, mask, raster, critical_values,
                                          k_samples)
            if ks:
                kval = _majority(ks)
            if qs:
                qval = _majority(qs)
        all_samples.append((ks, qs))

        components.append(ComponentReport(
            label=lab, cell_count=int(mask.sum()), area=float(mask.sum()) * h * h,
            k=kval, k_samples=tuple(ks), quotient_k=qval, quotient_samples=tuple(qs),
            boundary_on_codual=int(b_line.sum()),
            boundary_on_critical=int(b_crit.sum()),
            boundary_unclassified=int(b_unknown.sum()),
            adjacent_coduals=adjacent, extra_piece=extra))

    flat_k = [v for ks, _ in all_samples for v in ks]
    flat_q = [v for _, qs in all_samples for v in qs]
    global_k = None
    if flat_k and len(set(flat_k)) == 1 and all(c.k is not None for c in components):
        global_k = flat_k[0]
    global_q = None
    if flat_q and len(set(flat_q)) == 1 and all(c.quotient_k is not None for c in components):
        global_q = flat_q[0]
    return RegionReport(n, tuple(components), global_k, global_q)


def _majority(values):
    counts = Counter(values)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]


def _sample_fiber_counts(p, cloud, mask, raster, critical_values, k_samples):
    """Fiber counts at well-interior cells of one component.

    Candidates are taken deepest-first (distance transform inside the
    component) with a spread-out pass; if every candidate is blocked by the
    critical exclusion zone (small components), the zone is relaxed so that
    each component still reports its best fiber-count estimate.
    """
    h = raster.cell_width
    depth = torus_distance_cells(~mask)
    depth = np.where(mask, depth, 0.0)
    order = np.argsort(depth.ravel(), kind="stable")[::-1]
    cand = order[:60 * k_samples]
    cand = cand[depth.ravel()[cand] >= min(2.0, depth.max())]
    chosen = []
    n = raster.resolution
    for flat in cand:
        if len(chosen) >= 3 * k_samples:
            break
        i1, i2 = divmod(int(flat), n)
        pt = ((i1 + 0.5) * h, (i2 + 0.5) * h)
        if chosen:
            dmin = min(math.hypot(
                (pt[0] - q[0] + math.pi) % TWO_PI - math.pi,
                (pt[1] - q[1] + math.pi) % TWO_PI - math.pi) for q in chosen)
            if dmin < 3 * h and len(cand) > k_samples:
                continue
        chosen.append(pt)
    out = []
    quot = []
    for exclusion in (1.5 * h, 0.5 * h, 0.0):
        for pt in chosen:
            if len(out) >= k_samples:
                break
            try:
                base = arg_fiber_count(p, pt, cloud, critical_values=critical_values,
                                       exclusion=exclusion)
            except DomainError:
                continue
            out.append(base)
            total = base
            ok = True
            for shift in ((math.pi, 0.0), (0.0, math.pi), (math.pi, math.pi)):
                try:
                    total += arg_fiber_count(p, (pt[0] + shift[0], pt[1] + shift[1]),
                                             cloud, critical_values=None)
                except DomainError:
                    ok = False
                    break
            if ok:
                quot.append(total)
        if out:
            break
    return tuple(out), tuple(quot)


def check_theorem_1_1(report: RegionReport, polygon) -> dict:
    """Constant-fiber-count vs no-extra-piece equivalence record."""
    if report.empty or not report.components:
        raise DomainError("empty coamoeba", "no components to check")
    ks = [c.k for c in report.components if c.k is not None]
    sample_sets = [set(c.k_samples) for c in report.components if c.k_samples]
    k_constant = (len(ks) == len(report.components) and len(set(ks)) == 1
                  and all(len(s) == 1 for s in sample_sets))
    k_value = ks[0] if k_constant else None
    k_bound = 2.0 * polygon.euclidean_area
    no_extra = not report.has_extra_piece
    return {
        "k_constant": k_constant,
        "k_value": k_value,
        "k_bound": k_bound,
        "no_extra_piece": no_extra,
        "equivalence_holds": k_constant == no_extra,
        "k_within_bound": (k_value <= k_bound + 1e-9) if k_value is not None else None,
    }


class Verdict(Enum):
    MAXIMAL_HARNACK = "MAXIMAL_HARNACK"
    NOT_MAXIMAL = "NOT_MAXIMAL"
    INCONCLUSIVE = "INCONCLUSIVE"


MAXIMAL_RATIO = 0.98
INCONCLUSIVE_RATIO = 0.95


@dataclass(frozen=True)
class HarnackReport:
    ratio: float
    real_torus_phase: object
    max_log_fiber: int
    verdict: Verdict
    area: object
    maximal_threshold: float = MAXIMAL_RATIO
    inconclusive_threshold: float = INCONCLUSIVE_RATIO

    def to_json_dict(self):
        phase = None
        if self.real_torus_phase is not None:
            phase = {"phi0": self.real_torus_phase.phi0,
                     "phi": list(self.real_torus_phase.phi)}
        return {
            "ratio": self.ratio,
            "real_torus_phase": phase,
            "max_log_fiber": self.max_log_fiber,
            "verdict": self.verdict.value,
            "area": self.area.to_json_dict(),
            "thresholds": {"maximal": self.maximal_threshold,
                           "inconclusive": self.inconclusive_threshold},
        }


def harnack_test(p: BivariatePolynomial, n: int = 150, probes: int = 50,
                 seed: int = 0, phase_tol: float = 1e-6,
                 cloud=None, area_report=None) -> HarnackReport:
    """Classify the curve against the maximal coamoeba-area criterion.

    Assembles the area ratio, the real-up-to-torus-action phase, and the
    maximum Log-fiber cardinality over random amoeba probes; the curve is
    MAXIMAL_HARNACK when the ratio reaches 0.98 with a real phase and at
    most 2-to-1 logarithmic projection, INCONCLUSIVE in the (0.95, 0.98)
    band, NOT_MAXIMAL otherwise.
    """
    polygon = newton_polygon(p)
    if polygon.euclidean_area <= 0:
        raise DomainError("degenerate Newton polygon",
                          "the Newton polygon has zero area")
    if area_report is None:
        area_report = area_mult_coamoeba(p, n=n)
    phase = real_up_to_torus_action(p, phase_tol)
    if cloud is None:
        cloud = two_chart_cloud(p, nx=n, ntheta=n)

    crit = two_chart_critical_points(p, nx=n, ntheta=n, tol=1e-10)
    crit_logs = [c.log() for c in crit]
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(cloud), size=4 * probes)
    max_fiber = 0
    used = 0
    for k in idx:
        if used >= probes:
            break
        x = (float(cloud.x1[k]), float(cloud.x2[k]))
        try:
            count = log_fiber_count(p, x, cloud, critical_log=crit_logs, exclusion=0.05)
        except DomainError:
            continue
        used += 1
        max_fiber = max(max_fiber, count)

    ratio = area_report.ratio
    if ratio >= MAXIMAL_RATIO and phase is not None and max_fiber <= 2:
        verdict = Verdict.MAXIMAL_HARNACK
    elif INCONCLUSIVE_RATIO < ratio < MAXIMAL_RATIO:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.NOT_MAXIMAL
    return HarnackReport(ratio, phase, max_fiber, verdict, area_report)


def check_corollary_1_3(p: BivariatePolynomial, report: RegionReport,
                        alga_area_value: float, area_mult_value: float,
                        harnack: HarnackReport = None) -> dict:
    """Verify area_mult = k * Area(Alga); stronger identities for Harnack.

    The k of the identity is the multiplicity over the quotient torus (the
    fiber count summed over the four real 2-torsion translates); on curves
    like the standard line, where only one translate meets the coamoeba,
    it coincides with the plain Arg-fiber count.
    """
    if report.has_extra_piece or report.global_quotient_k is None:
        raise DomainError("not applicable",
                          "the identity requires constant k and no extra-piece")
    k = report.global_quotient_k
    lhs = area_mult_value
    rhs = k * alga_area_value
    identity = abs(lhs - rhs) <= 0.05 * max(lhs, 1e-12)
    out = {
        "k": k,
        "area_mult": lhs,
        "k_times_alga": rhs,
        "identity_holds": bool(identity),
    }
    if harnack is not None and harnack.verdict == Verdict.MAXIMAL_HARNACK:
        polygon = newton_polygon(p)
        out["k_equals_2area"] = bool(abs(k - 2.0 * polygon.euclidean_area) < 1e-9)
        out["alga_is_pi_squared"] = bool(abs(alga_area_value - math.pi**2) <= 0.02 * math.pi**2)
    return out


def _is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def check_corollary_1_4(p: BivariatePolynomial, spine_curve, report: RegionReport,
                        harnack: HarnackReport = None) -> dict:
    """Prime half-area consistency: no extra-piece iff Harnack or a
    one-vertex spine with maximally sparse defining polynomial."""
    polygon = newton_polygon(p)
    twice_area = int(round(2.0 * polygon.euclidean_area))
    if abs(2.0 * polygon.euclidean_area - twice_area) > 1e-9 or not _is_prime(twice_area):
        raise DomainError("precondition fails",
                          "2*Area(Newton polygon) = %r is not a prime integer"
                          % (2.0 * polygon.euclidean_area))
    if harnack is None:
        harnack = harnack_test(p)
    no_extra = not report.has_extra_piece and not report.empty
    sparse = set(p.support()) == set(polygon.vertices)
    vcount = len(spine_curve.vertices)
    is_harnack = harnack.verdict == Verdict.MAXIMAL_HARNACK
    return {
        "no_extra_piece": no_extra,
        "harnack_verdict": harnack.verdict.value,
        "spine_vertex_count": vcount,
        "maximally_sparse": sparse,
        "corollary_consistent": no_extra == (is_harnack or (vcount == 1 and sparse)),
    }
