import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coamoeba import (
    BivariatePolynomial,
    DomainError,
    LatticePoint,
    ParseError,
    deformation_family,
    newton_polygon,
    parse_polynomial,
    real_up_to_torus_action,
    truncate,
)

from oracles import phase_system_solvable, shoelace


class TestParser:
    def test_line(self):
        p = parse_polynomial("1 + z + w")
        assert {pt.as_tuple() for pt in p.support()} == {(0, 0), (1, 0), (0, 1)}
        assert all(c == 1 for c in p.terms.values())

    def test_complex_coefficient(self):
        p = parse_polynomial("(2-3i)*z^2*w")
        assert p.terms == {LatticePoint(2, 1): complex(2, -3)}

    def test_cancellation_is_empty(self):
        with pytest.raises(DomainError, match="empty polynomial"):
            parse_polynomial("z + (-1)*z")

    def test_unit_phase_coefficient(self):
        p = parse_polynomial("e^{ipi/3}*z")
        assert p.coefficient((1, 0)) == pytest.approx(cmath.exp(1j * math.pi / 3))
        q = parse_polynomial("e^{-ipi/7}w")
        assert q.coefficient((0, 1)) == pytest.approx(cmath.exp(-1j * math.pi / 7))

    def test_imaginary_unit_and_implicit_product(self):
        p = parse_polynomial("i*zw + 2z")
        assert p.coefficient((1, 1)) == 1j
        assert p.coefficient((1, 0)) == 2

    def test_minus_chain_and_scientific(self):
        p = parse_polynomial("1e2*z - -w")
        assert p.coefficient((1, 0)) == 100.0
        assert p.coefficient((0, 1)) == 1.0

    def test_negative_exponent_rejected(self):
        with pytest.raises(DomainError, match="negative exponent"):
            parse_polynomial("z^-1 + w")

    def test_syntax_error_has_position(self):
        with pytest.raises(ParseError) as err:
            parse_polynomial("1 + $")
        assert err.value.position == 4

    def test_roundtrip_examples(self):
        for text in ("1+z+w", "(2-3i)*z^2*w", "i + i*z", "1 - w^3 + 0.5*z*w"):
            p = parse_polynomial(text)
            assert parse_polynomial(p.to_text()) == p


@st.composite
def polynomials(draw):
    n = draw(st.integers(1, 6))
    terms = {}
    for _ in range(n):
        ij = (draw(st.integers(0, 4)), draw(st.integers(0, 4)))
        re = draw(st.floats(-5, 5, allow_nan=False).filter(lambda x: abs(x) > 1e-3))
        im = draw(st.floats(-5, 5, allow_nan=False))
        terms[ij] = complex(re, im)
    return BivariatePolynomial(terms)


@given(polynomials())
@settings(max_examples=60, deadline=None)
def test_print_parse_idempotent(p):
    again = parse_polynomial(p.to_text())
    assert again == p
    assert parse_polynomial(again.to_text()) == again


@given(polynomials())
@settings(max_examples=60, deadline=None)
def test_json_roundtrip(p):
    assert BivariatePolynomial.from_json_dict(p.to_json_dict()) == p


class TestNewtonPolygon:
    def test_unit_simplex(self):
        hull = newton_polygon(parse_polynomial("1+z+w"))
        assert hull.euclidean_area == 0.5
        assert {v.as_tuple() for v in hull.vertices} == {(0, 0), (1, 0), (0, 1)}

    def test_unit_square(self):
        hull = newton_polygon(parse_polynomial("1+z+w+zw"))
        assert hull.euclidean_area == 1.0

    def test_degenerate_segment(self):
        hull = newton_polygon(parse_polynomial("z - w"))
        assert hull.euclidean_area == 0.0
        assert len(hull.vertices) == 2

    def test_area_matches_shoelace(self):
        p = parse_polynomial("1 + z^3 + w^2 + z*w^4 + z^2*w")
        hull = newton_polygon(p)
        assert hull.euclidean_area == pytest.approx(
            abs(shoelace([v.as_tuple() for v in hull.vertices])))

    def test_support_inside_hull(self):
        p = parse_polynomial("1 + z^2 + w^2 + z*w + z + w")
        hull = newton_polygon(p)
        assert all(hull.contains(pt) for pt in p.support())

    @given(polynomials())
    @settings(max_examples=40, deadline=None)
    def test_swap_invariance(self, p):
        a = newton_polygon(p).euclidean_area
        b = newton_polygon(p.swapped()).euclidean_area
        assert a == pytest.approx(b)

    def test_union_monotone(self, rng):
        pts_a = [(1, 0), (0, 2), (3, 1)]
        pts_b = pts_a + [(4, 4), (0, 0)]
        pa = BivariatePolynomial({pt: 1 for pt in pts_a})
        pb = BivariatePolynomial({pt: 1 for pt in pts_b})
        assert newton_polygon(pb).euclidean_area >= newton_polygon(pa).euclidean_area


class TestTruncate:
    def test_restriction(self):
        p = parse_polynomial("1+z+w+zw")
        q = truncate(p, {(0, 0), (1, 0)})
        assert {pt.as_tuple() for pt in q.support()} == {(0, 0), (1, 0)}

    def test_identity(self):
        p = parse_polynomial("1+z+w")
        assert truncate(p, [pt.as_tuple() for pt in p.support()]) == p

    def test_empty_cell(self):
        with pytest.raises(DomainError, match="empty truncation"):
            truncate(parse_polynomial("1+z+w"), {(2, 2)})


class TestDeformationFamily:
    def test_identity_at_one_over_e(self):
        p = parse_polynomial("1 + 2z + (0.5-0.25i)w + z^2*w")
        c = {pt: 0.7 * pt.i - 1.3 * pt.j for pt in p.support()}
        assert deformation_family(p, c, 1 / math.e) == p

    def test_zero_lifting_is_constant(self):
        p = parse_polynomial("1+z+w")
        c = {pt: 0.0 for pt in p.support()}
        assert deformation_family(p, c, 0.05) == p

    def test_square_coefficient_scaling(self):
        # reference value from directly evaluating (e*t)^(-c)
        p = parse_polynomial("1+z+w+zw")
        c = {(0, 0): 0, (1, 0): 0, (0, 1): 0, (1, 1): -1}
        t = 1 / (2 * math.e)
        expected = 1.0 * (math.e * t) ** 1
        q = deformation_family(p, c, t)
        assert q.coefficient((1, 1)) == pytest.approx(expected)
        assert q.coefficient((1, 1)) == pytest.approx(0.5)

    def test_t_out_of_range(self):
        p = parse_polynomial("1+z")
        with pytest.raises(DomainError, match="t out of range"):
            deformation_family(p, {(0, 0): 0, (1, 0): 0}, 0.5)


class TestRealUpToTorusAction:
    def test_real_polynomial(self):
        phase = real_up_to_torus_action(parse_polynomial("1+z+w"), 1e-9)
        assert phase is not None
        assert phase.phi0 == pytest.approx(0.0, abs=1e-12)
        assert phase.phi == pytest.approx((0.0, 0.0), abs=1e-12)

    def test_global_imaginary_factor(self):
        phase = real_up_to_torus_action(parse_polynomial("i + i*z + i*w"), 1e-9)
        assert phase is not None
        assert phase.phi0 == pytest.approx(math.pi / 2, abs=1e-12)

    def test_obstructed_instance(self):
        # oracle: exhaustive branch search over the 3-equation mod-pi system
        p = parse_polynomial("1 + e^{ipi/3}z + w + e^{ipi/7}*z*w")
        exps = [pt.as_tuple() for pt in p.support()]
        args = [np.angle(p.terms[pt]) for pt in p.support()]
        assert not phase_system_solvable(exps, args, 1e-6)
        assert real_up_to_torus_action(p, 1e-6) is None

    def test_solvable_matches_oracle(self):
        # zw argument is pi/3 + pi: solvable only through the mod-pi branch
        p = parse_polynomial("1 + e^{ipi/3}z + w + e^{i4pi/3}*z*w")
        exps = [pt.as_tuple() for pt in p.support()]
        args = [np.angle(p.terms[pt]) for pt in p.support()]
        assert phase_system_solvable(exps, args, 1e-6)
        phase = real_up_to_torus_action(p, 1e-6)
        assert phase is not None

    def test_transformed_arguments_near_real(self):
        # built to be solvable: a = +/- m * exp(i(phi0 + <alpha, phi>))
        phi0, phi = 0.3, (0.6, -0.4)
        terms = {}
        for sign, mod, ij in ((1, 2.0, (0, 0)), (-1, 1.5, (1, 0)),
                              (1, 3.0, (0, 1)), (-1, 0.5, (1, 2))):
            ang = phi0 + ij[0] * phi[0] + ij[1] * phi[1]
            terms[ij] = sign * mod * cmath.exp(1j * ang)
        p = BivariatePolynomial(terms)
        phase = real_up_to_torus_action(p, 1e-6)
        assert phase is not None
        q = phase.apply(p)
        for coeff in q.terms.values():
            r = np.angle(coeff) % math.pi
            assert min(r, math.pi - r) < 1e-6

    @given(polynomials())
    @settings(max_examples=30, deadline=None)
    def test_all_real_coefficients_always_solvable(self, p):
        real = BivariatePolynomial({pt.as_tuple(): c.real if c.real != 0 else 1.0
                                    for pt, c in p.terms.items()})
        phase = real_up_to_torus_action(real, 1e-9)
        assert phase is not None
        q = phase.apply(real)
        for coeff in q.terms.values():
            r = np.angle(coeff) % math.pi
            assert min(r, math.pi - r) < 1e-9


@pytest.fixture
def rng():
    return np.random.default_rng(7)
