import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coamoeba import (
    BivariatePolynomial,
    DomainError,
    TorusPoint,
    alga_area,
    alga_project,
    area_mult_coamoeba,
    arg_fiber_count,
    log_fiber_count,
    newton_polygon,
    parse_polynomial,
    two_chart_cloud,
)
from coamoeba.measure import area_single_chart

from oracles import cone_membership_line

PI2 = math.pi**2


class TestAreaMult:
    def test_line_reaches_bound(self):
        rep = area_mult_coamoeba(parse_polynomial("1+z+w"), n=100)
        assert rep.bound == pytest.approx(PI2)
        assert rep.area_mult == pytest.approx(PI2, rel=0.01)
        assert rep.ratio == pytest.approx(1.0, abs=0.01)
        assert rep.quadrature_error < 0.01 * PI2

    def test_factored_curve_measure_zero(self):
        rep = area_mult_coamoeba(parse_polynomial("1+z+w+zw"), n=80)
        assert rep.area_mult == pytest.approx(0.0, abs=1e-3)
        assert rep.bound == pytest.approx(2 * PI2)

    def test_degenerate_polygon(self):
        rep = area_mult_coamoeba(parse_polynomial("z - w"), n=60)
        assert rep.area_mult == 0.0
        assert rep.bound == 0.0
        assert rep.ratio == 0.0

    def test_cubic_sparse_one_third(self):
        # w^3 = -(1+z): three sheets of the line with slope m/3 each, so the
        # total equals the line's pi^2 while the bound triples
        rep = area_mult_coamoeba(parse_polynomial("1+z+w^3"), n=100)
        assert rep.area_mult == pytest.approx(PI2, rel=0.02)
        assert rep.ratio == pytest.approx(1.0 / 3.0, abs=0.01)

    def test_json_keys(self):
        rep = area_mult_coamoeba(parse_polynomial("1+z+w"), n=60)
        assert set(rep.to_json_dict()) == {"area_mult", "bound", "ratio", "quad_error"}

    def test_chart_consistency(self):
        p = parse_polynomial("1+2z+w")
        az = area_single_chart(p, "z", 600)
        aw = area_single_chart(p, "w", 600)
        assert abs(az - aw) <= 0.01 * az


class TestArgFiberCount:
    def test_inside_cone(self, line_pipeline):
        count = arg_fiber_count(line_pipeline.p, (2 * math.pi / 3, 4 * math.pi / 3),
                                line_pipeline.cloud)
        assert count == 1
        assert cone_membership_line(2 * math.pi / 3, 4 * math.pi / 3) == 1

    def test_outside_cone(self, line_pipeline):
        assert arg_fiber_count(line_pipeline.p, (math.pi / 4, math.pi / 3),
                               line_pipeline.cloud) == 0
        assert cone_membership_line(math.pi / 4, math.pi / 3) == 0

    def test_origin_is_outside(self, line_pipeline):
        # 1 + r + s > 0 for positive moduli
        assert arg_fiber_count(line_pipeline.p, (0.0, 0.0), line_pipeline.cloud) == 0

    def test_near_critical_query_rejected(self, line_pipeline):
        with pytest.raises(DomainError, match="near-critical query"):
            arg_fiber_count(line_pipeline.p, (math.pi, math.pi + 1e-4),
                            line_pipeline.cloud,
                            critical_values=line_pipeline.critical_values)

    def test_solution_continuum_counts_once(self):
        p = parse_polynomial("1+z+w+zw")
        cloud = two_chart_cloud(p, nx=100, ntheta=100)
        assert arg_fiber_count(p, (math.pi, 2.0), cloud) == 1


class TestLogFiberCount:
    def test_line_at_origin(self, line_pipeline):
        # |z| = |w| = 1 with z + w = -1 forces z = e^{+-2 pi i/3}
        assert log_fiber_count(line_pipeline.p, (0.0, 0.0), line_pipeline.cloud) == 2

    def test_outside_amoeba(self, line_pipeline):
        assert log_fiber_count(line_pipeline.p, (10.0, 0.0), line_pipeline.cloud) == 0

    def test_factored_branch_continuum(self):
        p = parse_polynomial("1+z+w+zw")
        cloud = two_chart_cloud(p, nx=100, ntheta=100)
        assert log_fiber_count(p, (0.0, 5.0), cloud) == 1


class TestAlga:
    def test_projection_examples(self):
        assert alga_project((math.pi + 0.3, 0.2)).as_tuple() == pytest.approx((0.3, 0.2))
        assert alga_project((0.0, 0.0)).as_tuple() == pytest.approx((0.0, 0.0))
        q = alga_project((math.pi - 1e-9, math.pi))
        assert q.as_tuple() == pytest.approx((math.pi - 1e-9, 0.0), abs=1e-12)

    @given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi),
           st.sampled_from([0.0, math.pi]), st.sampled_from([0.0, math.pi]))
    @settings(max_examples=60, deadline=None)
    def test_half_period_translation_invariance(self, t1, t2, v1, v2):
        def circle_gap(x, y):  # distance on the quotient circle R/(pi Z)
            d = abs(x - y) % math.pi
            return min(d, math.pi - d)

        a = alga_project((t1, t2))
        b = alga_project((t1 + v1, t2 + v2))
        assert circle_gap(a.eta1, b.eta1) < 1e-9
        assert circle_gap(a.eta2, b.eta2) < 1e-9

    def test_line_covers_quotient(self, line_pipeline):
        area = alga_area(line_pipeline.p, line_pipeline.cloud, 128,
                         critical_values=line_pipeline.critical_values)
        assert area == pytest.approx(PI2, rel=0.02)

    def test_factored_curve_near_zero(self):
        p = parse_polynomial("1+z+w+zw")
        cloud = two_chart_cloud(p, nx=100, ntheta=100)
        # two circles fold to two 1-cell-wide lines: pure grid slack
        assert alga_area(p, cloud, 128) < 0.35

    def test_binomial_diagonal_near_zero(self):
        p = parse_polynomial("z - w")
        cloud = two_chart_cloud(p, nx=80, ntheta=80)
        assert alga_area(p, cloud, 128) < 0.35


def test_monte_carlo_fiber_count_identity(line_pipeline):
    """Average fiber count over a 200-point shifted lattice times (2 pi)^2
    reproduces the multiplicity-counted area (the defining identity)."""
    p = line_pipeline.p
    total = used = 0
    for i in range(10):
        for j in range(20):
            a = (((i + 0.5) / 10 + 1 / math.sqrt(2)) % 1) * 2 * math.pi
            b = (((j + 0.5) / 20 + 1 / math.sqrt(3)) % 1) * 2 * math.pi
            try:
                total += arg_fiber_count(p, (a, b), line_pipeline.cloud,
                                         critical_values=line_pipeline.critical_values)
                used += 1
            except DomainError:
                continue
    assert used >= 190
    estimate = total / used * 4 * PI2
    rep = area_mult_coamoeba(p, n=100)
    assert abs(estimate - rep.area_mult) <= 0.05 * rep.area_mult


def test_upper_bound_on_random_instances(rng):
    polygons = ([(0, 0), (1, 0), (0, 1)],
                [(0, 0), (1, 0), (0, 1), (1, 1)])
    for supp in polygons:
        for _ in range(3):
            coeffs = {pt: rng.uniform(0.5, 2) * np.exp(2j * math.pi * rng.uniform())
                      for pt in supp}
            p = BivariatePolynomial(coeffs)
            rep = area_mult_coamoeba(p, n=80)
            assert rep.ratio <= 1.02
