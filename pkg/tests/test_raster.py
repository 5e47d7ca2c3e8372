import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coamoeba import DomainError, TorusRaster, hausdorff_raster_distance
from coamoeba.raster import flat_distance, torus_distance_cells, torus_label


def one_cell_raster(n, th1, th2):
    r = TorusRaster(n)
    r.mark_points(np.array([th1]), np.array([th2]))
    return r


class TestHausdorff:
    def test_identical_rasters(self):
        a = one_cell_raster(128, 0.3, 5.1)
        assert hausdorff_raster_distance(a, a) == 0.0

    def test_antipodal_cells(self):
        a = one_cell_raster(128, 0.0, 0.0)
        b = one_cell_raster(128, math.pi, math.pi)
        d = hausdorff_raster_distance(a, b)
        assert abs(d - math.pi * math.sqrt(2)) <= 2 * a.cell_width

    def test_wraparound_is_short(self):
        a = one_cell_raster(128, 0.01, 0.0)
        b = one_cell_raster(128, 2 * math.pi - 0.01, 0.0)
        assert hausdorff_raster_distance(a, b) < 0.1

    def test_empty_conventions(self):
        a = TorusRaster(64)
        b = one_cell_raster(64, 1.0, 1.0)
        assert hausdorff_raster_distance(a, TorusRaster(64)) == 0.0
        assert hausdorff_raster_distance(a, b) == math.inf

    def test_resolution_mismatch(self):
        with pytest.raises(DomainError, match="resolution mismatch"):
            hausdorff_raster_distance(TorusRaster(64), TorusRaster(128))

    @given(st.floats(0, 2 * math.pi - 1e-9), st.floats(0, 2 * math.pi - 1e-9),
           st.floats(0, 2 * math.pi - 1e-9), st.floats(0, 2 * math.pi - 1e-9))
    @settings(max_examples=40, deadline=None)
    def test_matches_flat_metric_for_single_cells(self, a1, a2, b1, b2):
        n = 64
        ra = one_cell_raster(n, a1, a2)
        rb = one_cell_raster(n, b1, b2)
        d = hausdorff_raster_distance(ra, rb)
        ref = flat_distance(np.array([a1, a2]), np.array([b1, b2]))
        assert abs(d - ref) <= 2 * math.sqrt(2) * ra.cell_width


class TestLabeling:
    def test_wraparound_component(self):
        mask = np.zeros((16, 16), bool)
        mask[0, 3] = mask[15, 3] = True
        labels, num = torus_label(mask)
        assert num == 1

    def test_two_components(self):
        mask = np.zeros((16, 16), bool)
        mask[2:4, 2:4] = True
        mask[10:12, 10:12] = True
        labels, num = torus_label(mask)
        assert num == 2

    def test_labels_deterministic(self):
        rng = np.random.default_rng(5)
        mask = rng.random((64, 64)) < 0.4
        l1, n1 = torus_label(mask)
        l2, n2 = torus_label(mask)
        assert n1 == n2 and (l1 == l2).all()


def test_distance_transform_wraps():
    mask = np.zeros((32, 32), bool)
    mask[0, 0] = True
    d = torus_distance_cells(mask)
    assert d[31, 31] == pytest.approx(math.sqrt(2))
    assert d[16, 16] == pytest.approx(16 * math.sqrt(2))
