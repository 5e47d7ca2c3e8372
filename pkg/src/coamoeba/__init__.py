"""Numerical geometry of complex algebraic plane curves in the torus.

Computes amoebas, coamoebas, logarithmic Gauss maps and their shared
critical locus, multiplicity-counted coamoeba areas and fiber counts, the
tropical spine with its dual subdivision and codual lines, deformation
(tropical limit) experiments, and the extra-piece / maximal-area Harnack
classification of curves in the complex 2-torus.
"""

from .analysis import (
    ComponentReport,
    HarnackReport,
    RegionReport,
    Verdict,
    check_corollary_1_3,
    check_corollary_1_4,
    check_theorem_1_1,
    harnack_test,
    region_decomposition,
)
from .curves import (
    BaseCoordinate,
    CurvePoint,
    CurvePointCloud,
    GaussValue,
    GridSpec,
    critical_points,
    critical_values_arg,
    default_grid,
    default_window,
    fiber_roots,
    finite_difference_jacobians,
    gauss_map,
    merge_clouds,
    point_at,
    sample_curve,
    two_chart_cloud,
    two_chart_critical_points,
)
from .errors import DomainError, ParseError
from .measure import (
    AreaReport,
    alga_area,
    alga_project,
    area_mult_coamoeba,
    arg_fiber_count,
    log_fiber_count,
)
from .polynomials import (
    BivariatePolynomial,
    LatticePoint,
    NewtonPolygon,
    TorusPhase,
    deformation_family,
    newton_polygon,
    parse_polynomial,
    real_up_to_torus_action,
    truncate,
)
from .raster import (
    PlaneRaster,
    QuotientPoint,
    TorusPoint,
    TorusRaster,
    flat_distance,
    hausdorff_raster_distance,
)
from .rasterize import coamoeba_raster, paint_critical_values, quotient_fold
from .tropical import (
    CoduaLine,
    DualSubdivision,
    TropicalCurve,
    TropicalEdge,
    TropicalVertex,
    codual_lines,
    extended_lifting,
    h_scale,
    lifting_constants,
    order_map,
    regular_subdivision,
    ronkin_value,
    spine,
    tropical_limit_run,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
