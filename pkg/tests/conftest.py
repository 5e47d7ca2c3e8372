"""Shared fixtures: the expensive pipeline artifacts are built once."""

import numpy as np
import pytest

from coamoeba import (
    GridSpec,
    codual_lines,
    critical_points,
    critical_values_arg,
    default_window,
    merge_clouds,
    parse_polynomial,
    region_decomposition,
    sample_curve,
    spine,
)
from coamoeba.rasterize import coamoeba_raster, paint_critical_values


class Pipeline:
    """Everything the analysis of one curve needs, computed once."""

    def __init__(self, text, nx=200, resolution=256):
        self.p = parse_polynomial(text)
        X = default_window(self.p)
        self.cloud_z = sample_curve(self.p, GridSpec(X, nx, nx, "z"))
        self.cloud_w = sample_curve(self.p, GridSpec(X, nx, nx, "w"))
        self.cloud = merge_clouds(self.cloud_z, self.cloud_w)
        self.critical = (critical_points(self.cloud_z, tol=1e-12)
                         + critical_points(self.cloud_w, tol=1e-12))
        self.critical_values = critical_values_arg(self.critical)
        self.spine = spine(self.p, self.cloud)
        self.coduals = codual_lines(self.p, self.spine.dual)
        self.raster = coamoeba_raster(self.p, resolution=resolution, cloud=self.cloud)
        paint_critical_values(self.raster, self.critical)
        self.regions = region_decomposition(
            self.raster, self.critical_values, self.coduals,
            polynomial=self.p, cloud=self.cloud)


@pytest.fixture(scope="session")
def line_pipeline():
    return Pipeline("1+z+w")


@pytest.fixture(scope="session")
def quadric_pipeline():
    """The non-real perturbation with extra-pieces."""
    return Pipeline("1+z+w+i*z*w")


@pytest.fixture(scope="session")
def harnack_square_pipeline():
    """A real curve of maximal coamoeba area on the unit square."""
    return Pipeline("1+z+w-z*w")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0)
