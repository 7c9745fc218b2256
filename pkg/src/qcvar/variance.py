"""Asymptotic variance estimators, box averages and their audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .audit import AuditReport
from .coeff import (BoxSpec, Cell, CoefficientError, GridSpec, NadicPeriodic, PiecewiseCoefficient,
                    make_nadic_grid)
from .kernels import FieldEvaluator, halfplane_from_disk, periodic_transform, transform
from .neumann import NeumannSolution, log_derivative_field

PI = math.pi
RELIABLE_RESIDUAL = 0.1


@dataclass
class SpectrumEstimate:
    """A fitted limit with the finite-scale series behind it.

    ``scale_series`` holds ``(scale, raw)`` pairs and ``fit`` the slope,
    intercept and residual norm of the regression used.
    """

    value: float
    scale_series: list
    fit: dict
    method: str
    extra: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return float(self.fit.get("residual", 0.0))

    @property
    def unreliable(self) -> bool:
        denom = max(abs(self.value), 1e-3)
        return self.residual / denom > RELIABLE_RESIDUAL

    def to_dict(self) -> dict:
        return {"schema_version": 1, "method": self.method, "value": self.value,
                "residual": self.residual, "unreliable": self.unreliable, "fit": self.fit,
                "series": [{"scale": s, "value": v} for s, v in self.scale_series],
                **({"extra": self.extra} if self.extra else {})}


def linear_fit(x, y) -> dict:
    """Least-squares line ``y = intercept + slope x`` with residual and ``R^2``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        raise ValueError("need at least two points to fit")
    A = np.stack([np.ones_like(x), x], axis=1)
    (b0, b1), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (b0 + b1 * x)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res ** 2)) / ss if ss > 0 else 1.0
    return {"intercept": float(b0), "slope": float(b1),
            "residual": float(np.sqrt(np.mean(res ** 2))), "r2": r2}


def _fit_limit(scales, raws, method, extra=None) -> SpectrumEstimate:
    scales, raws = np.asarray(scales, float), np.asarray(raws, float)
    if np.all(raws == 0):
        fit = {"intercept": 0.0, "slope": 0.0, "residual": 0.0, "r2": 1.0}
    else:
        fit = linear_fit(1.0 / np.abs(np.log(scales)), raws)
    return SpectrumEstimate(fit["intercept"], [(float(s), float(r)) for s, r in zip(scales, raws)],
                            fit, method, extra or {})


def _check_depths(j_min, j_max):
    if j_max - j_min + 1 < 4:
        raise ValueError("at least four depths are required")


def circle_nodes(j: int) -> int:
    return int(64 * math.ceil(2 ** (j / 2)))


def circle_mean(g: FieldEvaluator, R: float, nodes: int) -> float:
    """Trapezoidal mean of ``|g|^2`` over ``|z| = R``."""
    th = 2 * PI * np.arange(nodes) / nodes
    v = g.value(R * np.exp(1j * th))
    return float(np.mean(np.abs(v) ** 2))


def sigma2_circle(g: FieldEvaluator, j_min: int = 4, j_max: int = 20) -> SpectrumEstimate:
    """Fit of ``(1 / 2 pi |log(R - 1)|) int_{|z|=R} |g|^2 |dz|`` over ``R_j = 1 + 2^-j``.

    Exact circle moments are used when the field provides them.
    """
    _check_depths(j_min, j_max)
    scales, raws = [], []
    for j in range(j_min, j_max + 1):
        R = 1.0 + 2.0 ** -j
        if g.line_moments is not None:
            m = g.line_moments(R)[0]
        else:
            m = circle_mean(g, R, circle_nodes(j))
        scales.append(R - 1.0)
        raws.append(R * m / abs(math.log(R - 1.0)))
    return _fit_limit(scales, raws, "circle")


def line_nodes(y: float, j: int) -> int:
    return int(min(max(64 * math.ceil(2 ** (j / 2)), math.ceil(4.0 / y)), 2 ** 18))


def line_mean(b: FieldEvaluator, y: float, nodes: int, deriv: bool = False) -> float:
    """Midpoint mean over ``0 <= x <= 1`` of ``|b|^2`` (or ``|b'|^2``)."""
    x = (np.arange(nodes) + 0.5) / nodes
    z = x + 1j * y
    v = b.deriv(z) if deriv else b.value(z)
    return float(np.mean(np.abs(v) ** 2))


def sigma2_strip(b: FieldEvaluator, j_min: int = 4, j_max: int = 20) -> SpectrumEstimate:
    """Fit of ``(1/|log y|) int_0^1 |b(x + iy)|^2 dx`` over ``y_j = 2^-j``."""
    _check_depths(j_min, j_max)
    scales, raws = [], []
    for j in range(j_min, j_max + 1):
        y = 2.0 ** -j
        m = b.line_moments(y)[0] if b.line_moments is not None else line_mean(b, y, line_nodes(y, j))
        scales.append(y)
        raws.append(m / abs(math.log(y)))
    return _fit_limit(scales, raws, "strip")


def _log_panels(lo: float, hi: float, width: float = 0.5, q: int = 8):
    """Gauss-Legendre nodes in ``s = log y`` on ``[log lo, log hi]``."""
    s0, s1 = math.log(lo), math.log(hi)
    npan = max(1, math.ceil((s1 - s0) / width))
    x, w = np.polynomial.legendre.leggauss(q)
    edges = np.linspace(s0, s1, npan + 1)
    out = []
    for a, c in zip(edges[:-1], edges[1:]):
        out.append((0.5 * (a + c) + 0.5 * (c - a) * x, 0.5 * (c - a) * w))
    return out


def sigma2_cesaro(b: FieldEvaluator, j_min: int = 4, j_max: int = 20) -> SpectrumEstimate:
    """Fit of ``(1/|log h|) int_h^1 int_0^1 |2 y b'|^2 dx dy / y`` over ``h_j = 2^-j``."""
    _check_depths(j_min, j_max)
    scales, raws = [], []
    acc, top = 0.0, 1.0
    for j in range(j_min, j_max + 1):
        h = 2.0 ** -j
        if j == j_min:
            lo, hi = h, 1.0
        else:
            lo, hi = h, top
        part = 0.0
        for s, w in _log_panels(lo, hi):
            for sk, wk in zip(s, w):
                y = math.exp(sk)
                if b.line_moments is not None:
                    m1 = b.line_moments(y)[1]
                else:
                    m1 = line_mean(b, y, line_nodes(y, j), deriv=True)
                part += wk * 4.0 * y * y * m1
        acc += part
        top = h
        scales.append(h)
        raws.append(acc / abs(math.log(h)))
    return _fit_limit(scales, raws, "cesaro")


# ------------------------------------------------------------ box averages


def _box_rule(x0: float, x1: float, y0: float, y1: float, q: int = 8, xfac: float = 2.0):
    """Nodes and weights for ``dx dy / y`` on a box, panel by panel in ``log y``."""
    gx, gw = np.polynomial.legendre.leggauss(q)
    for s, ws in _log_panels(y0, y1, 0.5, q):
        ylow = math.exp(s.min())
        npx = max(1, math.ceil((x1 - x0) / (xfac * ylow)))
        edges = np.linspace(x0, x1, npx + 1)
        h = (edges[1] - edges[0]) * 0.5
        xs = (0.5 * (edges[:-1] + edges[1:])[:, None] + h * gx[None, :]).ravel()
        wx = np.tile(h * gw, npx)
        ys = np.exp(s)
        Z = xs[None, :] + 1j * ys[:, None]
        W = ws[:, None] * wx[None, :]
        yield Z.ravel(), W.ravel()


def box_average(fld: FieldEvaluator, box: BoxSpec, domain: str | None = None,
                q: int = 8) -> float:
    """Mean of ``|2 g' / rho|^2`` against ``rho |dz|^2`` over a box.

    Half-plane fields use ``rho = 1/y``. For exterior-disk fields the box is
    read in the coordinate ``w`` with ``xi = exp(-2 pi i w)`` and the
    measure is ``rho_* |d xi|^2``, ``rho_* = 2 / (|xi|^2 - 1)``.
    """
    domain = domain or fld.domain
    if box.y_bottom <= 0:
        raise CoefficientError("box touches the boundary")
    num = den = 0.0
    for Z, W in _box_rule(box.x_min, box.x_max, box.y_bottom, box.y_top, q):
        if domain == "halfplane":
            v = np.abs(2.0 * Z.imag * fld.deriv(Z)) ** 2
            num += float(np.sum(W * v))
            den += float(np.sum(W))
        elif domain == "disk":
            xi = np.exp(-2j * PI * Z)
            a2 = np.abs(xi) ** 2
            v = ((a2 - 1.0) * np.abs(fld.deriv(xi))) ** 2
            # rho_* |d xi|^2 = 2 / (|xi|^2 - 1) * 4 pi^2 |xi|^2 dx dy, and dx dy = y dx dy / y
            jac = 2.0 / (a2 - 1.0) * 4 * PI ** 2 * a2 * Z.imag
            num += float(np.sum(W * jac * v))
            den += float(np.sum(W * jac))
        else:
            raise ValueError(f"unknown domain {domain!r}")
    return num / den


def _agree_on(mu1: PiecewiseCoefficient, mu2: PiecewiseCoefficient, cell, m: int = 24) -> bool:
    u = cell.a0 + (cell.a1 - cell.a0) * (np.arange(m) + 0.5) / m
    v = cell.b0 + (cell.b1 - cell.b0) * (np.arange(m) + 0.5) / m
    z = (u[:, None] + 1j * v[None, :]).ravel()
    return bool(np.allclose(mu1.evaluate(z), mu2.evaluate(z), atol=1e-12))


def perturbation_gap(mu1: PiecewiseCoefficient, mu2: PiecewiseCoefficient, box: BoxSpec) -> float:
    """``|box_average(S mu1) - box_average(S mu2)|`` for coefficients agreeing on the box."""
    if not _agree_on(mu1, mu2, box.reflected()):
        raise CoefficientError("coefficients differ on the reflected box")
    a1 = box_average(transform(mu1, "S"), box, "halfplane") if len(mu1) else 0.0
    a2 = box_average(transform(mu2, "S"), box, "halfplane") if len(mu2) else 0.0
    return abs(a1 - a2)


def perturbation_pair(n: float, alpha: float = 1.0, c: complex = 0.9, blocks: str = "top"):
    """Coefficients agreeing on the reflected ``(n, alpha)`` box and differing around it.

    ``mu1`` is ``c`` on the reflected box ``[0, alpha] x [-1, -1/n]``. ``mu2``
    adds a block of modulus 0.9 below the box (``blocks="top"``), or also
    unit blocks of other phases on both sides and between the box and the
    real axis (``blocks="all"``).
    """
    box = BoxSpec(0.0, alpha, 1.0, n)
    core = box.reflected()
    mu1 = PiecewiseCoefficient((core,), np.array([c]), "halfplane")
    extra = [(Cell.rect(0.0, alpha, -3.0, -1.0), 0.9j)]
    if blocks == "all":
        extra += [(Cell.rect(-3.0, 0.0, -3.0, 0.0), 0.9), (Cell.rect(alpha, alpha + 3.0, -3.0, 0.0), -0.9),
                  (Cell.rect(0.0, alpha, -1.0 / n, 0.0), -0.9j)]
    elif blocks != "top":
        raise ValueError(f"unknown block layout {blocks!r}")
    mu2 = PiecewiseCoefficient((core,) + tuple(e[0] for e in extra),
                               np.array([c] + [e[1] for e in extra]), "halfplane")
    return mu1, mu2, box


def fit_inverse_log(ns, gaps) -> dict:
    """Fit ``gap = C1 / log n``; relative residual is ``|gap - fit| / |gap|``."""
    x = 1.0 / np.log(np.asarray(ns, float))
    g = np.asarray(gaps, float)
    c1 = float(np.sum(x * g) / np.sum(x * x))
    rel = float(np.linalg.norm(g - c1 * x) / np.linalg.norm(g)) if np.any(g) else 0.0
    return {"C1": c1, "relative_residual": rel}


def box_lemma_audit(mu_per, grid: GridSpec, sigma2: float | None = None,
                    spread_tol: float = 0.02, mean_tol: float = 0.05,
                    j_range=(4, 20)) -> AuditReport:
    """Box averages over every box of a grid window for a periodic field.

    Reports min, max and mean, their relative spread and the comparison
    with the Cesaro variance of the same field.
    """
    if isinstance(mu_per, NadicPeriodic):
        fld = periodic_transform(mu_per)
    elif isinstance(mu_per, FieldEvaluator):
        fld = mu_per
    else:
        fld = transform(mu_per, "S#")
    boxes = make_nadic_grid(grid)
    avgs = np.array([box_average(fld, b, "halfplane") for b in boxes])
    rep = AuditReport("box_lemma")
    mean = float(np.mean(avgs))
    spread = float((avgs.max() - avgs.min()) / mean) if mean > 0 else 0.0
    rep.metrics.update({"n": grid.n, "boxes": len(boxes), "min": float(avgs.min()),
                        "max": float(avgs.max()), "mean": mean, "relative_spread": spread,
                        "averages": avgs.tolist()})
    rep.check("relative spread of box averages", spread, spread_tol)
    if sigma2 is None and fld.line_moments is not None:
        sigma2 = sigma2_cesaro(fld, *j_range).value
    if sigma2 is not None:
        rel = abs(mean - sigma2) / max(abs(sigma2), 1e-12)
        rep.metrics["sigma2_cesaro"] = sigma2
        rep.check("mean box average vs Cesaro variance (relative)", rel, mean_tol)
    # log-scale consistency: the spread should sit below a C/log n envelope with C = mean
    rep.check("spread within C/log n envelope", float(avgs.max() - avgs.min()),
              mean / math.log(grid.n) if grid.n > 1 else None)
    return rep


# --------------------------------------------------- exceptional sets / tails


@dataclass
class TailTable:
    """Tail measures ``|{x : |Re(g - g(z_B))| > eta}|`` on lines ``y = e^-S``."""

    rows: list
    c0: float
    k: float
    slopes: dict
    r2: dict

    def to_dict(self) -> dict:
        return {"schema_version": 1, "c0": self.c0, "k": self.k,
                "rows": [dict(zip(("S", "eta", "measured", "bound"), r)) for r in self.rows],
                "slopes": {str(s): v for s, v in self.slopes.items()},
                "r2": {str(s): v for s, v in self.r2.items()}}


def exceptional_set(source, R: float, depths=None, etas=None, k: float | None = None,
                    samples: int | None = None, x_range=(0.0, 1.0)) -> TailTable:
    """Sub-Gaussian tail audit on the box ``[0,1] x [e^-R, 1]``.

    ``source`` is a half-plane field or a :class:`NeumannSolution` (carried
    to the half-plane by ``xi = exp(-2 pi i w)``). For each depth ``S`` the
    set where ``|Re(g - g(z_B))| > eta`` is measured on the line
    ``y = e^-S``, ``z_B = 1/2 + i``; ``c0`` is fitted to
    ``measure ~ 2 exp(-c0 eta^2 / (k^2 S))``.
    """
    if isinstance(source, NeumannSolution):
        fld = halfplane_from_disk(log_derivative_field(source))
        k = abs(source.t) * source.k if k is None else k
    else:
        fld = source
    if k is None or k <= 0:
        k = 1.0
    if depths is None:
        depths = np.linspace(R / 4, R, 4)
    width = x_range[1] - x_range[0]
    zb = complex(0.5 * (x_range[0] + x_range[1]), 1.0)
    gb = complex(fld.value(np.array([zb]))[0])
    rows, slopes, r2 = [], {}, {}
    per_line = []
    for S in depths:
        y = math.exp(-S)
        need = int(math.ceil(8 * width / y))
        n = need if samples is None else samples
        if n < need:
            raise ValueError(f"{n} samples too sparse at depth {S:.3g}; need {need}")
        x = x_range[0] + (np.arange(n) + 0.5) * width / n
        v = np.abs((fld.value(x + 1j * y) - gb).real)
        per_line.append((S, v))
    if etas is None:
        scale = max(float(np.std(np.concatenate([v for _, v in per_line]))), 1e-300)
        etas = scale * np.linspace(0.5, 3.0, 11)
    xs_all, ys_all = [], []
    for S, v in per_line:
        meas = np.array([np.mean(v > e) for e in etas])
        good = meas > 0
        if np.sum(good) >= 3:
            fit = linear_fit(np.asarray(etas)[good] ** 2, np.log(meas[good]))
            slopes[float(S)], r2[float(S)] = fit["slope"], fit["r2"]
        for e, m in zip(etas, meas):
            if m > 0:
                xs_all.append(e * e / (k * k * S))
                ys_all.append(math.log(m / 2.0))
        per_line_rows = [(float(S), float(e), float(m)) for e, m in zip(etas, meas)]
        rows.extend(per_line_rows)
    xs_all, ys_all = np.array(xs_all), np.array(ys_all)
    c0 = float(-np.sum(xs_all * ys_all) / np.sum(xs_all ** 2)) if xs_all.size else 0.0
    rows = [(S, e, m, 2.0 * math.exp(-c0 * e * e / (k * k * S))) for S, e, m in rows]
    return TailTable(rows, c0, k, slopes, r2)
