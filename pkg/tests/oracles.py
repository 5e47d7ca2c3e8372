"""Independent oracles the tests check the library against.

Everything here is deliberately brute force and shares no code with the
library paths it validates: fiber counts come from exhaustive sign-change
scans over a moduli grid (plus a plain 2d Newton polish for dedup), the
standard line's coamoeba membership from closed-form cone geometry, and
the mod-pi phase system from exhaustive branch enumeration.
"""

import math

import numpy as np
from scipy import ndimage


def cone_membership_line(theta1, theta2):
    """Arg-fiber count of 1 + z + w by closed form.

    (theta1, theta2) is attained iff -1 lies in the open cone spanned by
    e^{i theta1} and e^{i theta2}; solving the 2x2 linear system for the
    positive moduli decides it.
    """
    det = math.cos(theta1) * math.sin(theta2) - math.sin(theta1) * math.cos(theta2)
    if abs(det) < 1e-12:
        return 0
    r = -math.sin(theta2) / det
    s = math.sin(theta1) / det
    return 1 if (r > 1e-12 and s > 1e-12) else 0


def line_boundary_distance(theta1, theta2):
    """Flat distance to the coamoeba boundary of 1 + z + w (3 codual lines)."""
    two_pi = 2 * math.pi
    d1 = abs((theta1 - math.pi + math.pi) % two_pi - math.pi)
    d2 = abs((theta2 - math.pi + math.pi) % two_pi - math.pi)
    d3 = abs((theta1 - theta2 - math.pi + math.pi) % two_pi - math.pi) / math.sqrt(2)
    return min(d1, d2, d3)


def scan_fiber_count(p, theta, window=9.0, n=220):
    """Arg-fiber count by exhaustive sign-change scan over an (x1, x2) grid.

    Grid cells where both Re f and Im f change sign are clustered; one 2d
    Newton polish per cluster dedups them into actual solutions.
    """
    xs = np.linspace(-window, window, n)
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    z = np.exp(X1 + 1j * theta[0])
    w = np.exp(X2 + 1j * theta[1])
    f = p.eval_scaled(z, w).f

    def sign_change(a):
        s = np.sign(a)
        return ((s[:-1, :-1] * s[1:, :-1] <= 0)
                | (s[:-1, :-1] * s[:-1, 1:] <= 0)
                | (s[:-1, :-1] * s[1:, 1:] <= 0))

    cand = sign_change(f.real) & sign_change(f.imag)
    labels, num = ndimage.label(cand)
    if num == 0:
        return 0
    h = xs[1] - xs[0]
    solutions = []
    for k in range(1, num + 1):
        ii, jj = np.nonzero(labels == k)
        u = np.array([xs[ii].mean() + h / 2, xs[jj].mean() + h / 2])
        u = _polish(p, u, theta)
        if u is None:
            continue
        if np.abs(u).max() > window + 2:
            continue
        if all(math.hypot(u[0] - v[0], u[1] - v[1]) > 1e-5 for v in solutions):
            solutions.append(u)
    return len(solutions)


def _polish(p, u, theta, iters=60):
    for _ in range(iters):
        z = np.exp(u[0] + 1j * theta[0])
        w = np.exp(u[1] + 1j * theta[1])
        ev = p.eval_scaled(np.array([z]), np.array([w]))
        fval, a, b = ev.f[0], ev.gz[0], ev.gw[0]
        det = a.real * b.imag - b.real * a.imag
        if abs(det) < 1e-300:
            return None
        du = np.array([(-fval.real * b.imag + fval.imag * b.real) / det,
                       (-fval.imag * a.real + fval.real * a.imag) / det])
        norm = np.abs(du).max()
        if norm > 1.0:
            du *= 1.0 / norm
        u = u + du
        if np.abs(ev.f[0]) / ev.denom[0] < 1e-12 and norm < 1e-10:
            break
    z = np.exp(u[0] + 1j * theta[0])
    w = np.exp(u[1] + 1j * theta[1])
    ev = p.eval_scaled(np.array([z]), np.array([w]))
    if np.abs(ev.f[0]) / ev.denom[0] > 1e-10:
        return None
    return u


def phase_system_solvable(exponents, args, tol):
    """Exhaustive branch search for arg(a) = phi0 + <alpha, phi> (mod pi).

    Eliminates phi0 against the first equation and tries every branch
    vector k in {-3..3}^m for the remaining m equations, solving each by
    least squares.  Independent of the library's coset-enumeration solver.
    """
    exps = np.asarray(exponents, float)
    psis = np.asarray(args, float)
    d = exps[1:] - exps[0]
    g = psis[1:] - psis[0]
    m = len(g)
    if m == 0:
        return True
    best = math.inf
    from itertools import product
    for ks in product(range(-3, 4), repeat=m):
        target = g + math.pi * np.asarray(ks)
        sol, _, _, _ = np.linalg.lstsq(d, target, rcond=None)
        res = np.abs(d @ sol - target).max()
        best = min(best, res)
    return best <= tol


def shoelace(points):
    """Reference polygon area (counterclockwise positive)."""
    s = 0.0
    n = len(points)
    for k in range(n):
        a, b = points[k], points[(k + 1) % n]
        s += a[0] * b[1] - a[1] * b[0]
    return s / 2.0
