"""Rasters and metric utilities on the flat torus [0, 2*pi)^2.

Cells are indexed [i1, i2] with axis 0 along theta1.  All neighborhood
operations wrap around, so connected components and distance transforms are
computed on the torus, not on the square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DomainError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TorusPoint:
    """Angle pair (theta1, theta2), reduced to [0, 2*pi)."""

    theta1: float
    theta2: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", float(np.mod(self.theta1, TWO_PI)))
        object.__setattr__(self, "theta2", float(np.mod(self.theta2, TWO_PI)))

    def as_tuple(self):
        return (self.theta1, self.theta2)


@dataclass(frozen=True)
class QuotientPoint:
    """Angle pair in the quotient torus [0, pi)^2 (angles mod pi)."""

    eta1: float
    eta2: float

    def __post_init__(self):
        object.__setattr__(self, "eta1", float(np.mod(self.eta1, math.pi)))
        object.__setattr__(self, "eta2", float(np.mod(self.eta2, math.pi)))

    def as_tuple(self):
        return (self.eta1, self.eta2)


def flat_distance(a, b, period=TWO_PI):
    """Flat-torus distance between angle pairs (arrays broadcast)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.abs(np.mod(a - b + period / 2.0, period) - period / 2.0)
    return np.sqrt((d**2).sum(axis=-1))


@dataclass
class TorusRaster:
    """Regular grid over the torus with occupancy, density, critical flags."""

    resolution: int
    occupancy: np.ndarray = field(default=None)
    density: np.ndarray = field(default=None)
    critical: np.ndarray = field(default=None)
    period: float = TWO_PI

    def __post_init__(self):
        n = self.resolution
        if self.occupancy is None:
            self.occupancy = np.zeros((n, n), dtype=bool)
        if self.density is None:
            self.density = np.zeros((n, n), dtype=np.float64)
        if self.critical is None:
            self.critical = np.zeros((n, n), dtype=bool)

    @property
    def cell_width(self):
        return self.period / self.resolution

    def cell_index(self, th1, th2):
        n = self.resolution
        i1 = np.floor(np.mod(th1, self.period) / self.cell_width).astype(np.int64) % n
        i2 = np.floor(np.mod(th2, self.period) / self.cell_width).astype(np.int64) % n
        return i1, i2

    def cell_center(self, i1, i2):
        h = self.cell_width
        return ((np.asarray(i1) + 0.5) * h, (np.asarray(i2) + 0.5) * h)

    def mark_points(self, th1, th2, weights=None):
        """Set occupancy for the cells hit by the points; accumulate density."""
        i1, i2 = self.cell_index(np.asarray(th1, float), np.asarray(th2, float))
        self.occupancy[i1, i2] = True
        if weights is not None:
            np.add.at(self.density, (i1, i2), np.asarray(weights, float) / self.cell_width**2)

    def mark_critical(self, points):
        for pt in points:
            t = pt.as_tuple() if hasattr(pt, "as_tuple") else tuple(pt)
            i1, i2 = self.cell_index(t[0], t[1])
            self.critical[i1, i2] = True

    def occupied_area(self):
        return float(self.occupancy.sum()) * self.cell_width**2


def wrap_pad(mask, width=1):
    return np.pad(mask, width, mode="wrap")


def torus_dilate(mask, iterations=1):
    """Binary dilation (8-neighborhood) with periodic wrap."""
    out = mask
    for _ in range(iterations):
        padded = wrap_pad(out, 1)
        padded = ndimage.binary_dilation(padded, structure=np.ones((3, 3), bool))
        out = padded[1:-1, 1:-1]
    return out


def torus_closing(mask):
    """Fill single-cell sampling holes: dilation followed by erosion, wrapped."""
    padded = wrap_pad(mask, 2)
    closed = ndimage.binary_closing(padded, structure=np.ones((3, 3), bool))
    return closed[2:-2, 2:-2]


def torus_label(mask, connectivity=4):
    """Connected component labels on the torus.

    scipy labels the flat array first; labels touching across the seams are
    then merged with a union-find pass.  Returned labels are renumbered
    1..k in scan order, deterministically.
    """
    structure = ndimage.generate_binary_structure(2, 1 if connectivity == 4 else 2)
    labels, num = ndimage.label(mask, structure=structure)
    if num == 0:
        return labels, 0
    parent = list(range(num + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    n0, n1 = mask.shape
    for j in range(n1):
        a, b = labels[0, j], labels[n0 - 1, j]
        if a and b:
            union(a, b)
    for i in range(n0):
        a, b = labels[i, 0], labels[i, n1 - 1]
        if a and b:
            union(a, b)
    if connectivity == 8:
        for j in range(n1):
            a = labels[0, j]
            for dj in (-1, 0, 1):
                b = labels[n0 - 1, (j + dj) % n1]
                if a and b:
                    union(a, b)
        for i in range(n0):
            a = labels[i, 0]
            for di in (-1, 0, 1):
                b = labels[(i + di) % n0, n1 - 1]
                if a and b:
                    union(a, b)

    remap = {}
    out = np.zeros_like(labels)
    flat_roots = np.array([find(x) for x in range(num + 1)])
    rooted = flat_roots[labels]
    order = []
    for i in range(n0):
        for j in range(n1):
            r = rooted[i, j]
            if r and r not in remap:
                remap[r] = len(remap) + 1
                order.append(r)
    for r, new in remap.items():
        out[rooted == r] = new
    return out, len(remap)


def torus_distance_cells(mask):
    """Distance (in cell units) from every cell to the nearest True cell.

    Computed with a Euclidean distance transform on a 3x3 tiling, which is
    exact on the torus since no geodesic exceeds one period.
    """
    if not mask.any():
        return np.full(mask.shape, np.inf)
    tiled = np.tile(mask, (3, 3))
    dist = ndimage.distance_transform_edt(~tiled)
    n0, n1 = mask.shape
    return dist[n0:2 * n0, n1:2 * n1]


def hausdorff_raster_distance(a: TorusRaster, b: TorusRaster) -> float:
    """Symmetric Hausdorff distance between occupied sets, flat-torus metric.

    Empty vs empty is 0 by the sup-over-empty-set convention; empty vs
    nonempty is infinite.
    """
    if a.resolution != b.resolution:
        raise DomainError("resolution mismatch",
                          "rasters have resolutions %d and %d" % (a.resolution, b.resolution))
    occ_a, occ_b = a.occupancy, b.occupancy
    if not occ_a.any() and not occ_b.any():
        return 0.0
    if not occ_a.any() or not occ_b.any():
        return math.inf
    dist_to_b = torus_distance_cells(occ_b)
    dist_to_a = torus_distance_cells(occ_a)
    sup_ab = dist_to_b[occ_a].max()
    sup_ba = dist_to_a[occ_b].max()
    return float(max(sup_ab, sup_ba)) * a.cell_width


@dataclass
class PlaneRaster:
    """Plain (non-periodic) raster over a square window, for amoeba images."""

    window: float
    resolution: int
    occupancy: np.ndarray = field(default=None)
    density: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.resolution
        if self.occupancy is None:
            self.occupancy = np.zeros((n, n), dtype=bool)
        if self.density is None:
            self.density = np.zeros((n, n), dtype=np.float64)

    @property
    def cell_width(self):
        return 2.0 * self.window / self.resolution

    def mark_points(self, x1, x2, weights=None):
        n = self.resolution
        i1 = np.floor((np.asarray(x1, float) + self.window) / self.cell_width).astype(np.int64)
        i2 = np.floor((np.asarray(x2, float) + self.window) / self.cell_width).astype(np.int64)
        keep = (i1 >= 0) & (i1 < n) & (i2 >= 0) & (i2 < n)
        self.occupancy[i1[keep], i2[keep]] = True
        if weights is not None:
            w = np.asarray(weights, float)[keep]
            np.add.at(self.density, (i1[keep], i2[keep]), w / self.cell_width**2)
