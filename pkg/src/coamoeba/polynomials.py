"""Bivariate complex polynomials on the algebraic torus.

A polynomial is a finite sum  sum_{(i,j)} a_ij z^i w^j  with nonzero complex
coefficients and natural exponents.  This module provides parsing/printing,
Newton polygons (exact integer convex hulls), truncation to a cell, the
one-parameter coefficient deformation used for tropical limits, and the
"real up to a torus action" phase solver.
"""

from __future__ import annotations

import cmath
import json
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError, ParseError

TWO_PI = 2.0 * math.pi


def wrap_angle(a):
    """Reduce an angle (scalar or array) to [0, 2*pi)."""
    return np.mod(a, TWO_PI)


def wrap_signed(a):
    """Reduce an angle (scalar or array) to (-pi, pi]."""
    r = np.mod(np.asarray(a) + math.pi, TWO_PI) - math.pi
    return np.where(r == -math.pi, math.pi, r) if np.ndim(r) else (math.pi if r == -math.pi else float(r))


class ScaledEval(NamedTuple):
    """Overflow-safe evaluation of f and its logarithmic gradient.

    All four value fields are the true quantities times exp(-logscale):
    ``f`` is f(z,w), ``gz`` is z*df/dz, ``gw`` is w*df/dw and ``denom`` is
    sum |a_ij z^i w^j| (the natural scale for relative residuals).
    """

    f: np.ndarray
    gz: np.ndarray
    gw: np.ndarray
    denom: np.ndarray
    logscale: np.ndarray


@dataclass(frozen=True, order=True)
class LatticePoint:
    """Exponent pair (i, j), both natural numbers."""

    i: int
    j: int

    def __post_init__(self):
        if self.i < 0 or self.j < 0:
            raise DomainError("negative exponent", "exponents must be natural: (%d, %d)" % (self.i, self.j))

    def as_tuple(self):
        return (self.i, self.j)


class BivariatePolynomial:
    """Immutable association of lattice exponents to nonzero coefficients."""

    __slots__ = ("_terms", "__dict__")

    def __init__(self, terms):
        """``terms``: mapping {(i, j): complex} or {LatticePoint: complex}."""
        cleaned = {}
        for key, val in terms.items():
            pt = key if isinstance(key, LatticePoint) else LatticePoint(int(key[0]), int(key[1]))
            c = complex(val)
            if c == 0:
                continue
            cleaned[pt] = cleaned.get(pt, 0) + c
        cleaned = {k: v for k, v in cleaned.items() if v != 0}
        if not cleaned:
            raise DomainError("empty polynomial")
        object.__setattr__(self, "_terms", tuple(sorted(cleaned.items(), key=lambda kv: kv[0])))

    @property
    def terms(self):
        return dict(self._terms)

    def support(self):
        return [pt for pt, _ in self._terms]

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        return isinstance(other, BivariatePolynomial) and self._terms == other._terms

    def __hash__(self):
        return hash(self._terms)

    def __repr__(self):
        return "BivariatePolynomial(%s)" % self.to_text()

    @cached_property
    def exps(self):
        """(n, 2) integer exponent array, lexicographically sorted."""
        return np.array([pt.as_tuple() for pt, _ in self._terms], dtype=np.int64)

    @cached_property
    def coeffs(self):
        return np.array([c for _, c in self._terms], dtype=np.complex128)

    @cached_property
    def degrees(self):
        return int(self.exps[:, 0].max()), int(self.exps[:, 1].max())

    def coefficient(self, point):
        pt = point if isinstance(point, LatticePoint) else LatticePoint(*point)
        return dict(self._terms).get(pt, 0j)

    def swapped(self):
        """The polynomial with the roles of z and w exchanged."""
        return BivariatePolynomial({(pt.j, pt.i): c for pt, c in self._terms})

    # -- evaluation ---------------------------------------------------------

    def eval_scaled(self, z, w):
        """Evaluate f, z*fz, w*fw at arbitrary torus points without overflow.

        Works in log space:  z^i w^j = exp(i log z + j log w), rescaled per
        point by the largest term modulus.  Safe for |w| as large as the
        root finder ever reports.
        """
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        lz = np.log(z)
        lw = np.log(w)
        ii = self.exps[:, 0].reshape((-1,) + (1,) * lz.ndim)
        jj = self.exps[:, 1].reshape((-1,) + (1,) * lz.ndim)
        logm = ii * lz[None, ...] + jj * lw[None, ...]
        s = logm.real.max(axis=0)
        m = np.exp(logm - s[None, ...])
        a = self.coeffs.reshape(ii.shape)
        f = (a * m).sum(axis=0)
        gz = (a * ii * m).sum(axis=0)
        gw = (a * jj * m).sum(axis=0)
        denom = (np.abs(a) * np.abs(m)).sum(axis=0)
        return ScaledEval(f, gz, gw, denom, s)

    def fiber_coeffs(self, zvals):
        """Coefficients of w -> f(z, w) for an array of z values.

        Returns an (F, J+1) array, index j = power of w.
        """
        zvals = np.asarray(zvals, dtype=np.complex128).ravel()
        jmax = self.degrees[1]
        out = np.zeros((zvals.size, jmax + 1), dtype=np.complex128)
        for (i, j), a in zip(self.exps.tolist(), self.coeffs.tolist()):
            out[:, j] += a * zvals**i
        return out

    # -- serialization ------------------------------------------------------

    def to_text(self):
        """Deterministic text form; parse(to_text()) reproduces the terms."""
        parts = []
        for pt, c in self._terms:
            mono = []
            if pt.i == 1:
                mono.append("z")
            elif pt.i > 1:
                mono.append("z^%d" % pt.i)
            if pt.j == 1:
                mono.append("w")
            elif pt.j > 1:
                mono.append("w^%d" % pt.j)
            coef = _format_coefficient(c, bool(mono))
            body = "*".join(([coef] if coef else []) + mono)
            parts.append(body if body else "0")
        text = parts[0]
        for p in parts[1:]:
            if p.startswith("-") and not p.startswith("(-"):
                text += " - " + p[1:]
            else:
                text += " + " + p
        return text

    def to_json_dict(self):
        return {
            "terms": [
                {"i": pt.i, "j": pt.j, "re": c.real, "im": c.imag}
                for pt, c in self._terms
            ]
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, data):
        return cls({(t["i"], t["j"]): complex(t["re"], t["im"]) for t in data["terms"]})


def _format_coefficient(c, has_monomial):
    """Render a complex coefficient for to_text()."""
    if c.imag == 0:
        r = c.real
        if has_monomial and r == 1:
            return ""
        if has_monomial and r == -1:
            return "-"
        return _format_real(r)
    if c.real == 0:
        if c.imag == 1:
            return "i"
        if c.imag == -1:
            return "-i"
        return "(0%s%si)" % ("+" if c.imag >= 0 else "-", _format_real(abs(c.imag)))
    return "(%s%s%si)" % (_format_real(c.real), "+" if c.imag >= 0 else "-", _format_real(abs(c.imag)))


def _format_real(x):
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<ephase>e\^\{[^}]*\})
  | (?P<number>(\d+\.?\d*|\.\d+)([eE][+-]?\d+(?![.\d^]))?)
  | (?P<name>[zwi])
  | (?P<op>[-+*^()·])
    """,
    re.VERBOSE,
)

_PHASE_RE = re.compile(
    r"^(?P<sign>[+-]?)(?P<pre>\d+\.?\d*|\.\d+)?i(?P<post>\d+\.?\d*|\.\d+)?"
    r"(?P<pi>pi|π)?(?:/(?P<div>\d+\.?\d*|\.\d+))?$"
)


def _parse_phase(body, pos):
    """Evaluate the {...} body of a unit-modulus coefficient e^{i...}."""
    s = body.replace(" ", "").replace("*", "").replace("⋅", "")
    m = _PHASE_RE.match(s)
    if not m or (m.group("pre") and m.group("post")):
        raise ParseError("malformed phase exponent '%s'" % body, pos)
    value = float(m.group("pre") or m.group("post") or 1.0)
    if m.group("sign") == "-":
        value = -value
    if m.group("pi"):
        value *= math.pi
    if m.group("div"):
        value /= float(m.group("div"))
    return cmath.exp(1j * value)


class _Lexer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        while self.pos < len(text):
            m = _TOKEN_RE.match(text, self.pos)
            if m is None:
                raise ParseError("unexpected character %r" % text[self.pos], self.pos)
            if not m.group("ws"):
                kind = m.lastgroup
                self.tokens.append((kind, m.group(0), self.pos))
            self.pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def next(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok


def parse_polynomial(text):
    """Parse polynomial text into a :class:`BivariatePolynomial`.

    Grammar: a signed sum of terms; each term is an optional coefficient
    (real literal, ``i``, parenthesized ``(a+bi)``, or unit phase
    ``e^{i...}``) times optional ``z``/``w`` powers with natural exponents.
    ``*`` between factors is optional.  Terms with the same exponents are
    combined; exact cancellations that empty the polynomial are an error.
    """
    lex = _Lexer(text)
    acc = {}
    first = True
    while True:
        kind, val, pos = lex.peek()
        if kind == "end":
            if first:
                raise ParseError("empty input", pos)
            break
        sign = 1.0
        if val in "+-":
            if first and val == "+":
                pass
            while lex.peek()[1] in "+-":
                _, v, _ = lex.next()
                if v == "-":
                    sign = -sign
        elif not first:
            raise ParseError("expected '+' or '-' between terms", pos)
        coeff, i, j = _parse_term(lex)
        first = False
        key = (i, j)
        acc[key] = acc.get(key, 0j) + sign * coeff
    acc = {k: v for k, v in acc.items() if v != 0}
    if not acc:
        raise DomainError("empty polynomial", "all terms cancelled")
    return BivariatePolynomial(acc)


def _parse_term(lex):
    coeff = 1 + 0j
    i = j = 0
    saw_factor = False
    while True:
        kind, val, pos = lex.peek()
        if kind == "end" or val in "+-":
            break
        if val in ("*", "·"):
            lex.next()
            continue
        if kind == "number":
            lex.next()
            coeff *= float(val)
        elif kind == "ephase":
            lex.next()
            coeff *= _parse_phase(val[3:-1], pos)
        elif val == "i":
            lex.next()
            coeff *= 1j
        elif val == "(":
            coeff *= _parse_paren_complex(lex)
        elif val in ("z", "w"):
            lex.next()
            exp = 1
            if lex.peek()[1] == "^":
                lex.next()
                kind2, val2, pos2 = lex.next()
                neg = False
                if val2 == "-":
                    neg = True
                    kind2, val2, pos2 = lex.next()
                if kind2 != "number" or "." in val2:
                    raise ParseError("exponent must be a natural number", pos2)
                if neg:
                    raise DomainError("negative exponent", "negative exponent at position %d" % pos2)
                exp = int(val2)
            if val == "z":
                i += exp
            else:
                j += exp
        else:
            raise ParseError("unexpected token %r" % val, pos)
        saw_factor = True
    if not saw_factor:
        raise ParseError("empty term", lex.peek()[2])
    return coeff, i, j


def _parse_paren_complex(lex):
    _, _, pos0 = lex.next()  # consume '('
    sign = 1.0
    if lex.peek()[1] in "+-":
        if lex.next()[1] == "-":
            sign = -1.0
    kind, val, pos = lex.next()
    if kind == "number":
        first = sign * float(val)
        kind2, val2, pos2 = lex.next()
        if val2 == ")":
            return complex(first, 0.0)
        if val2 == "i":
            if lex.next()[1] != ")":
                raise ParseError("expected ')'", pos2)
            return complex(0.0, first)
        if val2 not in "+-":
            raise ParseError("expected '+', '-', 'i' or ')'", pos2)
        isign = 1.0 if val2 == "+" else -1.0
        kind3, val3, pos3 = lex.next()
        imag = 1.0
        if kind3 == "number":
            imag = float(val3)
            kind3, val3, pos3 = lex.next()
        if val3 != "i":
            raise ParseError("expected 'i'", pos3)
        if lex.next()[1] != ")":
            raise ParseError("expected ')'", pos3)
        return complex(first, isign * imag)
    if val == "i":
        if lex.next()[1] != ")":
            raise ParseError("expected ')'", pos)
        return complex(0.0, sign)
    raise ParseError("malformed parenthesized coefficient", pos0)


# ---------------------------------------------------------------------------
# Newton polygon
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NewtonPolygon:
    """Convex hull of the support, counterclockwise, with shoelace area."""

    vertices: tuple
    euclidean_area: float

    def contains(self, point, strict=False):
        """Lattice-exact containment test (boundary counts unless strict)."""
        p = point.as_tuple() if isinstance(point, LatticePoint) else tuple(point)
        verts = [v.as_tuple() for v in self.vertices]
        if len(verts) == 1:
            return p == verts[0] and not strict
        for k in range(len(verts)):
            a, b = verts[k], verts[(k + 1) % len(verts)]
            cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            if cross < 0 or (strict and cross == 0):
                return False
            if len(verts) == 2 and cross != 0:
                return False
        if len(verts) == 2:
            a, b = verts
            t0 = min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            t1 = min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
            return t0 and t1
        return True

    def boundary_contains_segment(self, a, b):
        """True if the segment [a, b] lies inside one edge of the polygon."""
        a = a.as_tuple() if isinstance(a, LatticePoint) else tuple(a)
        b = b.as_tuple() if isinstance(b, LatticePoint) else tuple(b)
        verts = [v.as_tuple() for v in self.vertices]
        n = len(verts)
        if n == 1:
            return False
        edges = [(verts[k], verts[(k + 1) % n]) for k in range(n if n > 2 else 1)]
        for p, q in edges:
            d = (q[0] - p[0], q[1] - p[1])
            ca = d[0] * (a[1] - p[1]) - d[1] * (a[0] - p[0])
            cb = d[0] * (b[1] - p[1]) - d[1] * (b[0] - p[0])
            if ca != 0 or cb != 0:
                continue
            dots = []
            for r in (a, b):
                dots.append((r[0] - p[0]) * d[0] + (r[1] - p[1]) * d[1])
            dd = d[0] * d[0] + d[1] * d[1]
            if all(0 <= t <= dd for t in dots):
                return True
        return False

    def lattice_points(self):
        """All integer points inside or on the polygon."""
        verts = [v.as_tuple() for v in self.vertices]
        xs = [v[0] for v in verts]
        ys = [v[1] for v in verts]
        out = []
        for x in range(min(xs), max(xs) + 1):
            for y in range(min(ys), max(ys) + 1):
                if self.contains((x, y)):
                    out.append(LatticePoint(x, y))
        return out


def convex_hull_lattice(points):
    """Andrew monotone chain on integer points; CCW vertex order.

    Degenerate inputs are allowed: a single point or a collinear set give a
    1- or 2-vertex "polygon" with zero area.
    """
    pts = sorted(set((int(p[0]), int(p[1])) for p in points))
    if len(pts) == 1:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2 and len(pts) >= 2:  # collinear support
        return [pts[0], pts[-1]]
    return hull


def newton_polygon(p: BivariatePolynomial) -> NewtonPolygon:
    """Convex hull of the exponents of the nonzero coefficients."""
    hull = convex_hull_lattice([pt.as_tuple() for pt in p.support()])
    twice_area = 0
    for k in range(len(hull)):
        a, b = hull[k], hull[(k + 1) % len(hull)]
        twice_area += a[0] * b[1] - a[1] * b[0]
    return NewtonPolygon(tuple(LatticePoint(*v) for v in hull), abs(twice_area) / 2.0)


def truncate(p: BivariatePolynomial, cell) -> BivariatePolynomial:
    """Restrict the terms of p to the exponents in ``cell``."""
    wanted = set(pt if isinstance(pt, LatticePoint) else LatticePoint(*pt) for pt in cell)
    kept = {pt: c for pt, c in p.terms.items() if pt in wanted}
    if not kept:
        raise DomainError("empty truncation", "no support point lies in the requested cell")
    return BivariatePolynomial(kept)


def deformation_family(p: BivariatePolynomial, c, t: float) -> BivariatePolynomial:
    """Rescale each coefficient by (e*t)^(-c_ij); the t -> 0 tropical family.

    ``c`` maps every support point to a real lifting constant.  At t = 1/e
    the family returns p itself, bitwise.
    """
    if not (0 < t <= 1.0 / math.e + 1e-15):
        raise DomainError("t out of range", "t must lie in (0, 1/e], got %r" % t)
    cmap = {}
    for key, val in dict(c).items():
        pt = key if isinstance(key, LatticePoint) else LatticePoint(*key)
        cmap[pt] = float(val)
    base = math.e * t
    if math.isclose(base, 1.0, rel_tol=4e-16):
        base = 1.0  # t == fl(1/e); keeps the identity case exact
    out = {}
    for pt, a in p.terms.items():
        if pt not in cmap:
            raise DomainError("missing coefficient", "no deformation constant for %s" % (pt,))
        nu = -cmap[pt]
        out[pt] = a if nu == 0 or base == 1.0 else a * base**nu
    return BivariatePolynomial(out)


# ---------------------------------------------------------------------------
# Real-up-to-torus-action phase solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TorusPhase:
    """Global phase phi0 and torus angles (phi1, phi2), all in [0, 2*pi)."""

    phi0: float
    phi: tuple

    def apply(self, p: BivariatePolynomial) -> BivariatePolynomial:
        """Substitute z -> e^{-i phi1} z, w -> e^{-i phi2} w, times e^{-i phi0}."""
        out = {}
        for pt, a in p.terms.items():
            out[pt] = a * cmath.exp(-1j * (self.phi0 + pt.i * self.phi[0] + pt.j * self.phi[1]))
        return BivariatePolynomial(out)


def _phase_residual(psis, exps, phi0, phi):
    pred = phi0 + exps[:, 0] * phi[0] + exps[:, 1] * phi[1]
    r = np.mod(psis - pred, math.pi)
    return np.minimum(r, math.pi - r)


def real_up_to_torus_action(p: BivariatePolynomial, tol: float) -> Optional[TorusPhase]:
    """Find (phi0, phi) with arg(a_ij) = phi0 + i*phi1 + j*phi2 (mod pi).

    Solves the doubled system 2*psi = c0 + <alpha, c> (mod 2*pi), which is
    branch-free in increments of pi; candidate torus angles are enumerated
    from a pivot pair of support differences and polished by least squares
    over the implied branch integers.  Returns None when the best residual
    exceeds ``tol``.
    """
    if tol <= 0:
        raise DomainError("invalid tolerance", "tol must be positive")
    exps = p.exps.astype(np.float64)
    psis = np.angle(p.coeffs)
    n = len(psis)
    if n == 1:
        phi0 = float(np.mod(psis[0], math.pi))
        return TorusPhase(phi0, (0.0, 0.0))

    d = p.exps[1:] - p.exps[0]          # integer difference vectors
    g = np.mod(2.0 * (psis[1:] - psis[0]), TWO_PI)

    candidates = _phase_candidates(d, g)
    best = None
    for t1, t2 in candidates:
        # fix branch integers at this candidate, then re-solve in lstsq sense
        lhs = d[:, 0] * t1 + d[:, 1] * t2
        k = np.round((lhs - g) / TWO_PI)
        target = g + TWO_PI * k
        A = d.astype(np.float64)
        sol, _, rank, _ = np.linalg.lstsq(A, target, rcond=None)
        if rank < 2:
            sol = np.array([t1, t2])
        phi = (sol[0] / 2.0, sol[1] / 2.0)
        phi0 = psis[0] - exps[0, 0] * phi[0] - exps[0, 1] * phi[1]
        res = float(_phase_residual(psis, exps, phi0, phi).max())
        if best is None or res < best[0] - 1e-15:
            best = (res, phi0, phi)
    if best is None or best[0] > tol:
        return None
    res, phi0, phi = best
    return TorusPhase(
        float(np.mod(phi0, TWO_PI)),
        (float(np.mod(phi[0], TWO_PI)), float(np.mod(phi[1], TWO_PI))),
    )


def _phase_candidates(d, g):
    """Candidate doubled-phase vectors for the mod-2pi linear system."""
    n = len(d)
    best_pair = None
    best_det = 0
    for a in range(n):
        for b in range(a + 1, n):
            det = int(d[a, 0]) * int(d[b, 1]) - int(d[a, 1]) * int(d[b, 0])
            if abs(det) > abs(best_det):
                best_det = det
                best_pair = (a, b)
    out = []
    if best_pair is None:
        # rank <= 1: all differences are integer multiples of one primitive
        nz = [k for k in range(n) if d[k, 0] != 0 or d[k, 1] != 0]
        if not nz:
            out.append((0.0, 0.0))
            return out
        k0 = min(nz, key=lambda k: abs(d[k, 0]) + abs(d[k, 1]))
        gg = math.gcd(abs(int(d[k0, 0])), abs(int(d[k0, 1])))
        prim = d[k0] // gg
        norm2 = float(prim[0] ** 2 + prim[1] ** 2)
        m0 = int(round(d[k0, 0] / prim[0])) if prim[0] else int(round(d[k0, 1] / prim[1]))
        for br in range(abs(m0)):
            s = (g[k0] + TWO_PI * br) / m0
            out.append((s * prim[0] / norm2, s * prim[1] / norm2))
        return out
    a, b = best_pair
    det = float(best_det)
    inv = np.array([[d[b, 1], -d[a, 1]], [-d[b, 0], d[a, 0]]], dtype=np.float64) / det
    nd = abs(best_det)
    seen = set()
    for k1 in range(nd):
        for k2 in range(nd):
            rhs = np.array([g[a] + TWO_PI * k1, g[b] + TWO_PI * k2])
            t = inv @ rhs
            key = (round(t[0] % TWO_PI, 9), round(t[1] % TWO_PI, 9))
            if key in seen:
                continue
            seen.add(key)
            out.append((float(t[0]), float(t[1])))
    return out
