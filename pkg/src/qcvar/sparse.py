"""Line averages and intersection bounds for coefficients supported on crescent gardens."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .audit import AuditReport
from .coeff import (
    Cell, CoefficientError, Garden, PiecewiseCoefficient, RECT, build_garden, garden_to_coefficient,
    pushforward_exp,
)
from .kernels import normalized_deriv
from .variance import linear_fit

PI = math.pi
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _as_coefficient(src, tol: float = 0.05) -> PiecewiseCoefficient:
    if isinstance(src, Garden):
        return garden_to_coefficient(src, 1.0, tol)
    if src.domain != "halfplane":
        raise CoefficientError("sparse audits need a half-plane coefficient")
    return src


def _support_x(mu: PiecewiseCoefficient) -> np.ndarray:
    if len(mu) == 0:
        return np.zeros(0)
    return np.array([0.5 * (c.a0 + c.a1) for c in mu.cells])


def _panels(x0: float, x1: float, y: float, centres: np.ndarray, growth: float = 0.25) -> np.ndarray:
    """Breakpoints on ``[x0, x1]``: width ``growth * max(y, distance to support)``."""
    pts = [x0]
    while pts[-1] < x1:
        x = pts[-1]
        d = float(np.min(np.abs(centres - x))) if centres.size else math.inf
        w = growth * max(y, min(d, 1e300))
        pts.append(min(x + w, x1))
    return np.array(pts)


def _rule(edges: np.ndarray):
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X[None, :]
    w = 0.5 * (b - a) * _GL_W[None, :]
    return x.ravel(), w.ravel()


def line_length(y0: float, R: float) -> float:
    """Euclidean length of a horizontal segment at height ``y0`` of hyperbolic size ``R/2``."""
    return y0 * math.expm1(R / 2)


def line_average(src, y0: float, R: float | None = None, x0: float = 0.0, length: float | None = None,
                 tol: float = 0.05) -> float:
    """Mean of ``|2 y (S mu)'|^2`` over ``[x0 + i y0, x0 + length + i y0]``.

    ``length`` defaults to ``y0 (e^{R/2} - 1)``. Quadrature panels shrink to
    ``y0 / 4`` near the support and grow with the distance to it.
    """
    mu = _as_coefficient(src, tol)
    if y0 <= 0:
        raise CoefficientError("the line must lie in the upper half-plane")
    if length is None:
        if R is None:
            raise ValueError("give either R or length")
        length = line_length(y0, R)
    if length <= 0:
        raise ValueError("line length must be positive")
    if len(mu) == 0:
        return 0.0
    x, w = _rule(_panels(x0, x0 + length, y0, _support_x(mu)))
    z = x + 1j * y0
    for c in mu.cells:
        if np.any(c.contains(z)):
            raise CoefficientError("the line meets the coefficient support")
    g = normalized_deriv(mu, z)
    return float(np.sum(w * np.abs(g) ** 2) / length)


def intersection_length(src, y: float, tol: float = 0.05) -> float:
    """Euclidean length of ``supp mu`` on the line ``Im z = -y``.

    Gardens use the exact crescent shape (vertical geodesics); coefficients
    sum the widths of the rectangles crossing the line.
    """
    if isinstance(src, Garden):
        total = []
        for c in src.crescents:
            if not c.vertical:
                raise CoefficientError("exact intersection supports vertical geodesics only")
            lo, hi = sorted((-c.a.imag, -c.b.imag))
            sh, ch = math.sinh(c.S), math.cosh(c.S)
            if lo <= y <= hi:
                half = y * sh
            else:
                yc = lo if y < lo else hi
                d = (yc * sh) ** 2 - (y - yc * ch) ** 2
                half = math.sqrt(d) if d > 0 else 0.0
            if half > 0:
                total.append((c.a.real - half, c.a.real + half))
        return _union_length(total)
    mu = _as_coefficient(src, tol)
    spans = []
    for c in mu.cells:
        if c.kind != RECT:
            raise CoefficientError("intersection lengths need rectangle cells")
        if c.b0 <= -y < c.b1:
            spans.append((c.a0, c.a1))
    return _union_length(spans)


def _union_length(spans) -> float:
    total, end = 0.0, -math.inf
    for a, b in sorted(spans):
        if b <= end:
            continue
        total += b - max(a, end)
        end = b
    return total


def max_intersection(mu: PiecewiseCoefficient) -> float:
    """``sup_y`` of :func:`intersection_length` (piecewise constant in ``y``)."""
    if len(mu) == 0:
        return 0.0
    ys = np.unique(np.concatenate([[-c.b0, -c.b1] for c in mu.cells]))
    mids = 0.5 * (ys[:-1] + ys[1:])
    return max(intersection_length(mu, float(y)) for y in mids)


def small_intersection_bound(src, y: float, reach: float = 1e5, tol: float = 0.05):
    """``(lhs, rhs)``: ``int |2 y (S mu)'| dx`` over the whole line at height ``y``
    against ``(8/pi) sup_y' |supp mu cap {Im = -y'}|``.

    The line integral covers the support's shadow widened by ``reach`` times
    its scale; the integrand decays like ``|x|^-3`` so the omitted tail is
    below ``1 / reach^2`` relative.
    """
    mu = _as_coefficient(src, tol)
    if y <= 0:
        raise CoefficientError("the line must lie in the upper half-plane")
    if len(mu) == 0:
        return 0.0, 0.0
    xs = _support_x(mu)
    lo = min(c.a0 for c in mu.cells)
    hi = max(c.a1 for c in mu.cells)
    depth = max(-c.b0 for c in mu.cells)
    scale = max(hi - lo, depth, y)
    x, w = _rule(_panels(lo - reach * scale, hi + reach * scale, y, xs))
    g = normalized_deriv(mu, x + 1j * y)
    lhs = float(np.sum(w * np.abs(g)))
    return lhs, 8.0 / PI * max_intersection(mu)


def sparse_dim_formula(S: float, R: float, t: complex, C_of_S: Callable[[float], float] | float) -> float:
    """``1 + C(S) e^{-R/2} |t|^2``."""
    if math.isinf(R):
        return 1.0
    C = C_of_S(S) if callable(C_of_S) else float(C_of_S)
    return 1.0 + C * math.exp(-R / 2) * abs(t) ** 2


# ------------------------------------------------------------- sweeps


def sweep_garden(R: float, S: float = 1.0, y0: float = 1.0, extra: int = 2) -> Garden:
    """Vertical garden for the line at height ``y0``.

    One crescent crosses the reflected line above ``x = 0``; ``extra``
    further crescents sit on either side beyond the line's far end, at the
    closest spacing with core geodesics ``R + 2S`` apart.
    """
    lo, hi = y0 / math.e, y0 * math.e
    D = 2 * hi * math.sinh((R + 2 * S) / 2) * 1.01
    D = max(D, 1.5 * line_length(y0, R))
    xs = [0.0]
    for j in range(1, extra + 1):
        xs.append(j * D if j % 2 else -((j + 1) // 2) * D)
    return build_garden([(complex(x, -lo), complex(x, -hi)) for x in xs], S, R)


def r_sweep(Rs=(4, 6, 8, 10), S: float = 1.0, y0: float = 1.0, tol: float = 0.05) -> dict:
    """Line averages over ``R`` with the fitted slope of ``log`` average in ``R``."""
    rows = []
    for R in Rs:
        g = sweep_garden(R, S, y0)
        rows.append((float(R), line_average(g, y0, R, tol=tol)))
    fit = linear_fit(np.array([r for r, _ in rows]), np.log([v for _, v in rows]))
    C = float(np.max([v * math.exp(R / 2) for R, v in rows]))
    return {"rows": rows, "slope": fit["slope"], "r2": fit["r2"], "C": C}


def sparse_trace(garden: Garden, t: float, N: int = 2048, delta: float = 2.0 ** -6, q: int = 6,
                 margin: float = 0.1, tol: float = 0.1) -> dict:
    """Trace the map solving the Beltrami equation for ``t`` times the garden.

    The garden is scaled into one period ``[margin, 1 - margin]`` and carried
    to the unit disk by the exponential map before solving.
    """
    from .neumann import NeumannSolution, trace_curve
    from .spectrum import minkowski_dim

    mu = garden_to_coefficient(garden, 1.0, tol)
    lo = min(c.a0 for c in mu.cells)
    hi = max(c.a1 for c in mu.cells)
    a = (1 - 2 * margin) / (hi - lo)
    b = margin - a * lo
    cells = tuple(c.mapped(a, b) for c in mu.cells)
    disk = pushforward_exp(PiecewiseCoefficient(cells, mu.values, "halfplane"))
    sol = NeumannSolution(disk, t, 3, q)
    curve = trace_curve(sol, N, delta)
    return {"t": t, "cells": len(disk), "minkowski": minkowski_dim(curve).value}


def sparse_audit(Rs=(4, 6, 8, 10), S: float = 1.0, ys=(0.5, 1.0, 2.0), slope=(-0.65, -0.35)) -> AuditReport:
    rep = AuditReport("sparse")
    sw = r_sweep(Rs, S)
    rep.metrics["r_sweep"] = sw
    rep.check("line-average decay slope upper", sw["slope"], slope[1], kind="le")
    rep.check("line-average decay slope lower", sw["slope"], slope[0], kind="ge")
    for R in Rs:
        mu = garden_to_coefficient(sweep_garden(R, S), 1.0, 0.05)
        for y in ys:
            lhs, rhs = small_intersection_bound(mu, y)
            rep.check(f"small-intersection R={R} y={y}", lhs, rhs, kind="le",
                      note=f"slack {rhs - lhs:.4g}")
    return rep
