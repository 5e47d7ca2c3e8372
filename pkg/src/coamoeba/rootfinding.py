"""Batched univariate polynomial root finding.

The fiber solvers need all roots of many small polynomials (one per grid
point), so the workhorse is a Durand-Kerner (Weierstrass) simultaneous
iteration vectorized over fibers, with numpy's companion-matrix solver as a
fallback for the few fibers where the iteration stalls (typically clustered
or multiple roots near branch points).
"""

from __future__ import annotations

import numpy as np

LEAD_TRIM = 1e-12     # relative: leading coefficients below this are a degree drop
ROOT_AT_ZERO = 1e-12  # relative: trailing coefficients below this give roots at w = 0


def _polyval_many(coeffs, x):
    """Evaluate sum_j coeffs[:, j] x**j for (F, D+1) coeffs and (F, K) x."""
    acc = np.zeros_like(x)
    for j in range(coeffs.shape[1] - 1, -1, -1):
        acc = acc * x + coeffs[:, j, None]
    return acc


def _dk_batch(monic, iters=120, tol=1e-14):
    """Durand-Kerner on a batch of monic polynomials of equal degree.

    ``monic``: (F, d) ascending coefficients of x^0..x^{d-1}; leading 1
    implied.  Returns (roots (F, d), converged (F,) bool).
    """
    F, d = monic.shape
    if d == 0:
        return np.zeros((F, 0), np.complex128), np.ones(F, bool)
    if d == 1:
        return -monic[:, :1].copy(), np.ones(F, bool)
    # geometric-mean modulus of the roots as a starting radius
    mod0 = np.abs(monic[:, 0])
    radius = np.where(mod0 > 0, mod0 ** (1.0 / d), 1.0)
    radius = np.clip(radius, 1e-8, 1e8)
    angles = 2j * np.pi * (np.arange(d) + 0.25) / d + 0.35j
    roots = radius[:, None] * np.exp(angles)[None, :]
    full = np.concatenate([monic, np.ones((F, 1), np.complex128)], axis=1)
    converged = np.zeros(F, bool)
    active = np.arange(F)
    for _ in range(iters):
        r = roots[active]
        p = _polyval_many(full[active], r)
        diff = r[:, :, None] - r[:, None, :]
        np.einsum("fii->fi", diff)[:] = 1.0
        denom = diff.prod(axis=2)
        bad = np.abs(denom) < 1e-290
        if bad.any():
            denom = np.where(bad, 1e-290, denom)
        step = p / denom
        r = r - step
        roots[active] = r
        done = (np.abs(step) <= tol * (1.0 + np.abs(r))).all(axis=1)
        converged[active[done]] = True
        active = active[~done]
        if active.size == 0:
            break
    return roots, converged


def roots_batch(coeffs, scale=None):
    """All complex roots of many polynomials with shared maximal degree.

    Parameters
    ----------
    coeffs : (F, D+1) complex array, ascending powers.
    scale : optional (F,) positive floats used for the relative degree-drop
        and root-at-zero trims; defaults to the max coefficient modulus.

    Returns
    -------
    roots : (F, D) complex array, padded with nan beyond each fiber's count.
    counts : (F,) int number of valid (nonzero) roots per fiber.
    zero_mult : (F,) int multiplicity of the discarded root at the origin.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    F, D1 = coeffs.shape
    D = D1 - 1
    mags = np.abs(coeffs)
    if scale is None:
        scale = mags.max(axis=1)
    scale = np.where(scale > 0, scale, 1.0)

    lead = np.full(F, -1, np.int64)
    trail = np.zeros(F, np.int64)
    ok = mags > (LEAD_TRIM * scale)[:, None]
    any_ok = ok.any(axis=1)
    idx = np.arange(D1)
    lead[any_ok] = np.where(ok[any_ok], idx[None, :], -1).max(axis=1)
    trail_ok = mags > (ROOT_AT_ZERO * scale)[:, None]
    trail[any_ok] = np.where(trail_ok[any_ok], idx[None, :], D1).min(axis=1)

    roots = np.full((F, D), np.nan + 0j, np.complex128)
    counts = np.zeros(F, np.int64)
    need_fallback = []

    degrees = lead - trail
    for d in np.unique(degrees):
        if d <= 0:
            continue
        sel = np.nonzero(degrees == d)[0]
        sub = np.zeros((sel.size, d + 1), np.complex128)
        for j in range(d + 1):
            sub[:, j] = coeffs[sel, trail[sel] + j]
        monic = sub[:, :d] / sub[:, d, None]
        got, conv = _dk_batch(monic)
        got = _newton_polish(sub, got)
        roots[sel, :d] = got
        counts[sel] = d
        need_fallback.extend(sel[~conv].tolist())

    for f in need_fallback:
        d = int(degrees[f])
        sub = coeffs[f, trail[f]:lead[f] + 1]
        r = np.roots(sub[::-1])
        r = _newton_polish(sub[None, :], r[None, :])[0]
        roots[f, :d] = r

    return roots, counts, trail.copy()


def _newton_polish(coeffs, roots, passes=1):
    """Vector Newton refinement; leaves roots with tiny derivative alone."""
    F, D1 = coeffs.shape
    dcoeffs = coeffs[:, 1:] * np.arange(1, D1)[None, :]
    r = roots
    for _ in range(passes):
        p = _polyval_many(coeffs, r)
        dp = _polyval_many(dcoeffs, r) if D1 > 1 else np.ones_like(r)
        safe = np.abs(dp) > 1e-280
        step = np.where(safe, p / np.where(safe, dp, 1.0), 0.0)
        r = r - step
    return r


def roots_single(coeffs):
    """Roots of one polynomial given ascending coefficients (1d array)."""
    c = np.asarray(coeffs, dtype=np.complex128)[None, :]
    roots, counts, zero_mult = roots_batch(c)
    return roots[0, :counts[0]], int(zero_mult[0])


def newton_track(coeffs, guesses, iters=8, tol=1e-14):
    """Converge each guess to the nearby root of its own fiber polynomial.

    ``coeffs``: (F, D+1) ascending; ``guesses``: (F,) complex.  Used for
    sheet tracking in finite differences and bisection refinement, where a
    good predictor is available and a full resolve would be wasteful.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    F, D1 = coeffs.shape
    dcoeffs = coeffs[:, 1:] * np.arange(1, D1)[None, :]
    r = np.asarray(guesses, dtype=np.complex128).copy()
    for _ in range(iters):
        p = _polyval_many(coeffs, r[:, None])[:, 0]
        dp = _polyval_many(dcoeffs, r[:, None])[:, 0] if D1 > 1 else np.ones_like(r)
        safe = np.abs(dp) > 1e-280
        step = np.where(safe, p / np.where(safe, dp, 1.0), 0.0)
        r = r - step
        if (np.abs(step) <= tol * (1.0 + np.abs(r))).all():
            break
    return r
