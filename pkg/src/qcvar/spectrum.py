"""Integral means, growth exponents and dimension relations.

Fields passed here are ``log f'`` evaluators. Half-plane fields are read on
horizontal lines ``Im z = y`` over one period; exterior-disk fields on
circles ``|z| = 1 + y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import FieldEvaluator
from .variance import SpectrumEstimate, _box_rule, linear_fit

PI = math.pi


class BranchError(ArithmeticError):
    """The sampled logarithm jumps by more than pi between neighbouring nodes."""


# ------------------------------------------------------------ sampling


def _points(domain: str, y: float, n: int) -> np.ndarray:
    if domain == "halfplane":
        return (np.arange(n) + 0.5) / n + 1j * y
    if domain == "disk":
        return (1.0 + y) * np.exp(2j * PI * np.arange(n) / n)
    raise ValueError(f"unknown domain {domain!r}")


def default_nodes(domain: str, y: float, p_max: float = 2.0) -> int:
    """Node count resolving oscillations at the scale of the distance to the boundary."""
    per = 1.0 / y if domain == "halfplane" else 2 * PI / y
    return int(min(max(128, math.ceil(8.0 * (1.0 + 0.5 * p_max) * per)), 2 ** 17))


def sample_log(fld: FieldEvaluator, y: float, n: int, check_branch: bool = True) -> np.ndarray:
    """``log f'`` on the line or circle at scale ``y`` (``n`` equispaced nodes)."""
    v = np.asarray(fld.value(_points(fld.domain, y, n)))
    if check_branch and v.size > 1:
        jumps = np.abs(np.diff(np.concatenate([v.imag, v.imag[:1]])))
        if np.max(jumps) > PI:
            raise BranchError(f"log f' branch jump {np.max(jumps):.3g} at scale {y:.3g}")
    return v


def _mean_exp(v: np.ndarray, p: complex) -> float:
    return float(np.mean(np.exp((p * v).real)))


def integral_means(fld: FieldEvaluator, p: complex, y: float, nodes: int | None = None,
                   rtol: float = 1e-10, max_nodes: int = 2 ** 17) -> float:
    """``I_p`` at scale ``y``: mean of ``|f'^p| = exp(Re(p log f'))`` over one period.

    Without ``nodes`` the trapezoid rule is doubled until two successive
    values agree to ``rtol``.
    """
    if y <= 0:
        raise ValueError("scale must be positive")
    if p == 0:
        return 1.0
    if nodes is not None:
        return _mean_exp(sample_log(fld, y, nodes), p)
    n = 64
    v = sample_log(fld, y, n)
    prev = _mean_exp(v, p)
    while n < max_nodes:
        n *= 2
        v = sample_log(fld, y, n)
        cur = _mean_exp(v, p)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return prev


@dataclass
class MeansSeries:
    """Integral means ``I_p`` along a ladder of scales.

    ``d1`` and ``d2`` are derivatives of ``I_p`` with respect to ``log y``
    (central differences on the ladder).
    """

    p: complex
    scales: np.ndarray
    values: np.ndarray
    domain: str = "halfplane"
    errors: np.ndarray | None = None
    d1: np.ndarray = field(init=False)
    d2: np.ndarray = field(init=False)

    def __post_init__(self):
        self.scales = np.asarray(self.scales, float)
        self.values = np.asarray(self.values, float)
        s = np.log(self.scales)
        if self.scales.size >= 3:
            self.d1 = np.gradient(self.values, s)
            self.d2 = np.gradient(self.d1, s)
        else:
            self.d1 = np.zeros_like(self.values)
            self.d2 = np.zeros_like(self.values)

    def to_rows(self) -> list:
        return [{"scale": float(a), "I": float(b), "dI_dlogy": float(c)}
                for a, b, c in zip(self.scales, self.values, self.d1)]


def ladder(lo: float, hi: float, count: int = 16) -> np.ndarray:
    """Geometric ladder from ``hi`` down to ``lo``."""
    return np.geomspace(hi, lo, count)


class MeansSampler:
    """Cache of ``log f'`` samples on a ladder so many exponents reuse them."""

    def __init__(self, fld: FieldEvaluator, scales, nodes=None, p_max: float = 2.0):
        self.field = fld
        self.scales = np.asarray(scales, float)
        self.samples = []
        for y in self.scales:
            n = nodes or default_nodes(fld.domain, y, p_max)
            n += n % 2
            v = sample_log(fld, y, n)
            self.samples.append(v)
        self.p_max = p_max

    def series(self, p: complex) -> MeansSeries:
        vals, errs = [], []
        for v in self.samples:
            full = _mean_exp(v, p)
            half = _mean_exp(v[::2], p)
            vals.append(full)
            errs.append(abs(full - half))
        return MeansSeries(p, self.scales, np.array(vals), self.field.domain, np.array(errs))

    def beta(self, p: complex) -> float:
        return beta_estimate(self.series(p)).value


def means_series(fld: FieldEvaluator, p: complex, scales, nodes=None) -> MeansSeries:
    return MeansSampler(fld, scales, nodes, abs(p)).series(p)


def beta_estimate(series: MeansSeries, window: int = 4) -> SpectrumEstimate:
    """Slope of ``log I_p`` against ``log(1/y)`` over the deepest half of the ladder.

    The largest slope over sliding windows of ``window`` consecutive scales
    is reported in ``extra["max_window_slope"]`` as a limsup surrogate.
    """
    order = np.argsort(series.scales)[::-1]
    y = series.scales[order]
    v = series.values[order]
    if np.any(v <= 0):
        raise ValueError("integral means must be positive")
    deep = slice(len(y) // 2, None)
    x = np.log(1.0 / y)
    ly = np.log(v)
    fit = linear_fit(x[deep], ly[deep])
    slopes = [linear_fit(x[i:i + window], ly[i:i + window])["slope"]
              for i in range(len(y) // 2, len(y) - window + 1)]
    extra = {"max_window_slope": float(max(slopes)) if slopes else fit["slope"], "p": str(series.p)}
    return SpectrumEstimate(fit["slope"], list(zip(y.tolist(), v.tolist())), fit, "beta", extra)


# ------------------------------------------------------------ Hardy identity


def hardy_terms(fld: FieldEvaluator, p: complex, y: float, step: float, nodes: int):
    """Central difference of ``I_p`` at ``y`` and ``|p|^2 int |f'^p| |f''/f'|^2 dx``."""
    if fld.domain != "halfplane":
        raise ValueError("the line identity needs a periodic half-plane field")
    if step <= 0 or step >= y:
        raise ValueError("step must lie in (0, y)")
    x = (np.arange(nodes) + 0.5) / nodes
    I = [float(np.mean(np.exp((p * fld.value(x + 1j * yy)).real))) for yy in (y - step, y, y + step)]
    fd = (I[0] - 2 * I[1] + I[2]) / step ** 2
    z = x + 1j * y
    b, db = fld.value(z), fld.deriv(z)
    rhs = abs(p) ** 2 * float(np.mean(np.exp((p * b).real) * np.abs(db) ** 2))
    return fd, rhs


def hardy_residual(fld: FieldEvaluator, p: complex, y: float, step: float,
                   nodes: int | None = None) -> float:
    """``|I_p''(y) - |p|^2 int |f'^p| |f''/f'|^2 dx|`` with a central difference."""
    nodes = nodes or default_nodes("halfplane", y, abs(p))
    fd, rhs = hardy_terms(fld, p, y, step, nodes)
    return abs(fd - rhs)


def hardy_richardson(fld: FieldEvaluator, p: complex, y: float, step: float, halvings: int = 2,
                     nodes: int | None = None) -> dict:
    """Residuals at ``step / 2^i`` and the ratios of successive residuals."""
    nodes = nodes or default_nodes("halfplane", y, abs(p))
    res = [hardy_residual(fld, p, y, step / 2 ** i, nodes) for i in range(halvings + 1)]
    ratios = [b / a if a > 0 else 0.0 for a, b in zip(res[:-1], res[1:])]
    return {"residuals": res, "ratios": ratios}


# ---------------------------------------------------- differential inequality


def diffineq_exponent(alpha: float) -> float:
    """Positive root of ``beta^2 + beta = alpha``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return 2.0 * alpha / (1.0 + math.sqrt(1.0 + 4.0 * alpha))


def averaged_means(series: MeansSeries, n: float, q: int = 16) -> MeansSeries:
    """``u(y) / log n`` with ``u(y) = int_{y/n}^y I_p(h) dh / h``.

    ``I_p`` is interpolated linearly in ``(log y, log I)``; only scales with
    ``y / n`` inside the ladder are returned.
    """
    if n <= 1:
        raise ValueError("n must exceed 1")
    order = np.argsort(series.scales)
    ls, lv = np.log(series.scales[order]), np.log(series.values[order])
    gx, gw = np.polynomial.legendre.leggauss(q)
    keep, vals = [], []
    for y in series.scales:
        a, b = math.log(y / n), math.log(y)
        if a < ls[0] - 1e-12:
            continue
        s = 0.5 * (a + b) + 0.5 * (b - a) * gx
        u = 0.5 * (b - a) * float(np.sum(gw * np.exp(np.interp(s, ls, lv))))
        keep.append(y)
        vals.append(u / math.log(n))
    return MeansSeries(series.p, np.array(keep), np.array(vals), series.domain)


def averaged_ratio(series: MeansSeries, n: float) -> float:
    """``max |log(u / (I_p log n))|`` over the scales where ``u`` is defined."""
    avg = averaged_means(series, n)
    lookup = dict(zip(series.scales.tolist(), series.values.tolist()))
    r = [abs(math.log(u / lookup[y])) for y, u in zip(avg.scales.tolist(), avg.values.tolist())]
    return max(r) if r else 0.0


def quotient(fld: FieldEvaluator, box, p: float, q: int = 8) -> float:
    """``int_B |f'^p| |2 y n_f|^2 dA/y`` over ``int_B |f'^p| dA/y`` for a half-plane field."""
    num = den = 0.0
    for Z, W in _box_rule(box.x_min, box.x_max, box.y_bottom, box.y_top, q):
        w = W * np.exp((p * fld.value(Z)).real)
        num += float(np.sum(w * np.abs(2.0 * Z.imag * fld.deriv(Z)) ** 2))
        den += float(np.sum(w))
    return num / den


# ------------------------------------------------------------ dimensions


@dataclass(frozen=True)
class DimEstimate:
    value: float
    flag: str
    probes: tuple

    def to_dict(self) -> dict:
        return {"value": self.value, "flag": self.flag,
                "probes": [{"p": p, "gap": g} for p, g in self.probes]}


def dim_from_beta(beta_fn, tol: float = 1e-4, p_hi: float = 2.0 - 1e-9) -> DimEstimate:
    """Solve ``beta(p) = p - 1`` for ``p`` in ``[1, 2)`` by bisection.

    ``beta_fn`` maps an exponent to a growth estimate (for a field use
    ``MeansSampler(...).beta``). Returns 1 with flag ``"flat"`` when the gap
    never becomes positive at ``p = 1``.
    """
    probes = []

    def gap(p):
        g = float(beta_fn(p)) - (p - 1.0)
        probes.append((p, g))
        return g

    g_lo = gap(1.0)
    if g_lo <= 0:
        return DimEstimate(1.0, "flat", tuple(probes))
    g_hi = gap(p_hi)
    if g_hi >= 0:
        return DimEstimate(2.0, "no_root", tuple(probes))
    grid = [gap(p) for p in np.linspace(1.0, p_hi, 6)[1:-1]]
    seq = [g_lo] + grid + [g_hi]
    flag = "ok" if all(b <= a + 1e-9 for a, b in zip(seq[:-1], seq[1:])) else "non_monotone"
    lo, hi = 1.0, p_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return DimEstimate(lo, flag, tuple(probes))


def antisymmetrize(k_prime: float) -> float:
    """``2 k' / (1 + k'^2)``."""
    if not 0.0 <= k_prime < 1.0:
        raise ValueError("k' must lie in [0, 1)")
    return 2.0 * k_prime / (1.0 + k_prime * k_prime)


def antisymmetrize_inverse(k: float) -> float:
    if not 0.0 <= k < 1.0:
        raise ValueError("k must lie in [0, 1)")
    return k / (1.0 + math.sqrt(1.0 - k * k))


def _densify(poly: np.ndarray, spacing: float, closed: bool) -> np.ndarray:
    pts = np.asarray(poly, complex)
    if closed:
        pts = np.append(pts, pts[0])
    segs = []
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(1, int(math.ceil(abs(b - a) / spacing)))
        segs.append(a + (b - a) * np.arange(m) / m)
    segs.append(pts[-1:])
    return np.concatenate(segs)


def minkowski_dim(polyline, sizes=None, closed: bool = True, shifts: int = 4) -> SpectrumEstimate:
    """Box-counting dimension: slope of ``log N(eps)`` against ``log(1/eps)``.

    The default ladder is dyadic from a quarter of the diameter down to four
    times the largest vertex spacing. Counts are averaged over ``shifts``
    fixed grid offsets, which removes most of the coarse-scale bias (a
    circle reads 0.997 instead of 1.028 with a single grid).
    """
    pts = np.asarray(polyline, complex)
    if pts.size < 3:
        raise ValueError("polyline needs at least three vertices")
    steps = np.abs(np.diff(np.append(pts, pts[0]) if closed else pts))
    diam = float(max(np.ptp(pts.real), np.ptp(pts.imag)))
    floor = 4.0 * float(steps.max())
    if sizes is None:
        sizes = []
        e = diam / 4.0
        while e >= floor:
            sizes.append(e)
            e /= 2.0
    sizes = np.asarray(sizes, float)
    if sizes.size < 3:
        raise ValueError("box ladder too short; refine the polyline")
    counts = []
    for e in sizes:
        dense = _densify(pts, e / 4.0, closed)
        total = 0
        for s in range(shifts):
            shifted = dense + e * s / shifts * (1.0 + 0.37j)
            keys = np.stack([np.floor(shifted.real / e), np.floor(shifted.imag / e)], axis=1)
            total += len(np.unique(keys, axis=0))
        counts.append(total / shifts)
    fit = linear_fit(np.log(1.0 / sizes), np.log(counts))
    return SpectrumEstimate(fit["slope"], list(zip(sizes.tolist(), counts)), fit, "box")


def dimension_bounds(k: float, sigma2: float | None = None) -> dict:
    """Upper bounds ``1 + k^2`` and ``1 + 36 k^2`` and the expansion ``1 + sigma2 k^2``."""
    if not 0.0 <= k < 1.0:
        raise ValueError("k must lie in [0, 1)")
    k2 = k * k
    return {"k": k, "smirnov": round(1.0 + k2, 15), "becker_pommerenke": round(1.0 + 36.0 * k2, 15),
            "expansion": None if sigma2 is None else 1.0 + sigma2 * k2}
