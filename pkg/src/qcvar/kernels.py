"""Closed-form Cauchy/Beurling-type transforms of piecewise-constant densities.

Every cell integral ``int_cell (zeta - z)^-m dA`` is reduced by Green's
formula to a boundary integral of ``conj(zeta - c) (zeta - z)^-m dzeta``.
On straight edges ``conj(zeta - c)`` is affine in ``zeta`` and on arcs it is
``r^2 / zeta``, so each edge has an elementary antiderivative. Interior
points get the principal value (symmetric excision); the ``m = 1`` kernel
picks up the excised-disc term ``-pi conj(z - c)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import binom

from .coeff import (RECT, SECTOR, Cell, CoefficientError, NadicPeriodic,
                    PiecewiseCoefficient, subtract_cell)
from .parallel import map_points

PI = math.pi
BLOCH_KERNEL_BOUND = 8.0 / PI

ORDERS = {"C": 1, "S": 2, "S'": 3, "S''": 4}


class SingularLocationError(ValueError):
    """Evaluation point on a cell edge or corner."""

    def __init__(self, msg, cell_index=None):
        super().__init__(msg if cell_index is None else f"cell {cell_index}: {msg}")
        self.cell_index = cell_index


# ------------------------------------------------------------- cell geometry


def _boundary(cell: Cell):
    """Positively oriented boundary pieces and the Green centre."""
    if cell.kind == RECT:
        c = cell.center
        p = [complex(cell.a0, cell.b0), complex(cell.a1, cell.b0),
             complex(cell.a1, cell.b1), complex(cell.a0, cell.b1)]
        return c, [("seg", p[i], p[(i + 1) % 4]) for i in range(4)]
    r0, r1, t0, t1 = cell.a0, cell.a1, cell.b0, cell.b1
    pieces = []
    if not cell.full_turn:
        pieces.append(("seg", r0 * np.exp(1j * t0), r1 * np.exp(1j * t0)))
    pieces.append(("arc", r1, t0, t1))
    if not cell.full_turn:
        pieces.append(("seg", r1 * np.exp(1j * t1), r0 * np.exp(1j * t1)))
    if r0 > 0:
        pieces.append(("arc", r0, t1, t0))
    return 0j, pieces


def boundary_distance(cell: Cell, z) -> np.ndarray:
    z = np.asarray(z, complex)
    _, pieces = _boundary(cell)
    d = np.full(z.shape, np.inf)
    for piece in pieces:
        if piece[0] == "seg":
            a, b = piece[1], piece[2]
            ab = b - a
            s = np.clip(((z - a) * np.conj(ab)).real / abs(ab) ** 2, 0.0, 1.0)
            d = np.minimum(d, np.abs(z - (a + s * ab)))
        else:
            r, ts, te = piece[1:]
            lo, hi = min(ts, te), max(ts, te)
            th = lo + np.mod(np.angle(z) - lo, 2 * PI)
            on = th <= hi
            ends = np.minimum(np.abs(z - r * np.exp(1j * ts)), np.abs(z - r * np.exp(1j * te)))
            d = np.minimum(d, np.where(on, np.abs(np.abs(z) - r), ends))
    return d


# --------------------------------------------------------- edge antiderivatives


def _power_diff(ua, ub, p, log_diff):
    """``[u^(p+1)/(p+1)]_ua^ub`` (``log_diff`` when ``p = -1``)."""
    if p == -1:
        return log_diff
    return (ub ** (p + 1) - ua ** (p + 1)) / (p + 1)


def _seg_term(a, b, c, z, m):
    d = b - a
    beta = np.conj(d) / d
    alpha = np.conj(a - c) - beta * (a - z)
    ua, ub = a - z, b - z
    logd = np.log(ub / ua)
    return alpha * _power_diff(ua, ub, -m, logd) + beta * _power_diff(ua, ub, 1 - m, logd)


def _arc_log_change(r, ts, te, z):
    """Continuous change of ``log(zeta - z)`` along the arc ``r e^{it}``."""
    span = te - ts
    npieces = max(1, math.ceil(abs(span) / (PI / 2)))
    out = np.zeros(z.shape, complex)
    sgn = 1.0 if span > 0 else -1.0
    inside_disc = np.abs(z) < r
    for i in range(npieces):
        s0 = ts + span * i / npieces
        s1 = ts + span * (i + 1) / npieces
        za, zb = r * np.exp(1j * s0), r * np.exp(1j * s1)
        out += np.log((zb - z) / (za - z))
        mid = 0.5 * (za + zb)
        # z between chord and arc: the principal value misses one full turn
        in_seg = inside_disc & ((z * np.conj(mid)).real > abs(mid) ** 2)
        out += np.where(in_seg, 2j * PI * sgn, 0.0)
    return out


def _arc_term(r, ts, te, z, m):
    """``int_arc (r^2 / zeta) (zeta - z)^-m dzeta``."""
    out = np.zeros(z.shape, complex)
    small = np.abs(z) < 0.5 * r
    if np.any(small):
        zs = z[small]
        acc = np.zeros(zs.shape, complex)
        for k in range(90):
            q = m + k
            ang = (np.exp(-1j * q * te) - np.exp(-1j * q * ts)) / (-1j * q)
            acc += binom(m + k - 1, k) * zs ** k * r ** (-q) * ang
        out[small] = 1j * r * r * acc
    big = ~small
    if np.any(big):
        zb = z[big]
        ua, ub = r * np.exp(1j * ts) - zb, r * np.exp(1j * te) - zb
        logu = _arc_log_change(r, ts, te, zb)
        acc = (-1) ** m / zb ** m * (1j * (te - ts))
        for i in range(m):
            acc = acc + (-1) ** i / zb ** (i + 1) * _power_diff(ua, ub, i - m, logu)
        out[big] = r * r * acc
    return out


def kernel_integral(cell: Cell, z, m: int, tol: float = 1e-11) -> np.ndarray:
    """``int_cell (zeta - z)^-m dA`` (principal value inside the cell)."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, complex))
    scale = cell.diameter
    if np.any(boundary_distance(cell, z) <= tol * max(scale, 1.0)):
        raise SingularLocationError("evaluation point on the cell boundary")
    c, pieces = _boundary(cell)
    acc = np.zeros(z.shape, complex)
    for piece in pieces:
        if piece[0] == "seg":
            acc += _seg_term(piece[1], piece[2], c, z, m)
        else:
            acc += _arc_term(piece[1], piece[2], piece[3], z, m)
    out = acc / 2j
    if m == 1:
        inside = cell.contains(z, closed=False)
        out = out - np.where(inside, PI * np.conj(z - c), 0.0)
    return complex(out[0]) if scalar else out


def _order_scale(m: int) -> float:
    return -math.factorial(m - 1) / PI


def cauchy_cell(cell: Cell, z):
    """``-(1/pi) int_cell (zeta - z)^-1 dA``."""
    return _order_scale(1) * kernel_integral(cell, z, 1)


def beurling_cell(cell: Cell, z):
    """``-(1/pi) p.v. int_cell (zeta - z)^-2 dA``."""
    return _order_scale(2) * kernel_integral(cell, z, 2)


def beurling_deriv_cell(cell: Cell, z):
    """``-(2/pi) int_cell (zeta - z)^-3 dA``: derivative of :func:`beurling_cell`."""
    return _order_scale(3) * kernel_integral(cell, z, 3)


def modified_beurling_cell(cell: Cell, z):
    """``-(1/pi) int_cell [(zeta - z)^-2 - zeta^-2] dA`` for half-plane cells."""
    if cell.kind != RECT or cell.b1 > 0:
        raise CoefficientError("modified transform needs a lower half-plane rectangle")
    if cell.contains(0j):
        raise CoefficientError("cell closure contains the origin")
    return beurling_cell(cell, z) - beurling_cell(cell, 0j)


# ---------------------------------------------------------- periodic kernels


def _periodic_prims(u, m):
    """``A = int K_m``, ``G = u A - int A`` for the 1-periodic kernels.

    ``K_2 = pi^2 csc^2(pi u)`` and ``K_3 = sum_j (u + j)^-3``, written in
    ``q = exp(-2 pi i u)`` with ``Im u < 0`` so ``|q| < 1`` on every edge.
    """
    q = np.exp(-2j * PI * u)
    if m == 2:
        A = -2j * PI * q / (1 - q)
        return A, u * A + np.log1p(-q)
    A = 2 * PI ** 2 * q / (1 - q) ** 2
    return A, u * A - 1j * PI * q / (1 - q)


def periodic_kernel_integral(cell: Cell, z, m: int) -> np.ndarray:
    """``int_cell sum_j (zeta + j - z)^-m dA`` for ``m in (2, 3)``, ``Im z > 0``."""
    z = np.asarray(z, complex)
    if cell.kind != RECT or cell.b1 > 0:
        raise CoefficientError("periodic kernels need lower half-plane rectangles")
    if np.any(z.imag <= 0):
        raise SingularLocationError("periodic transform needs Im z > 0")
    c, pieces = _boundary(cell)
    acc = np.zeros(z.shape, complex)
    for _, a, b in pieces:
        d = b - a
        beta = np.conj(d) / d
        alpha = np.conj(a - c) - beta * (a - z)
        Aa, Ga = _periodic_prims(a - z, m)
        Ab, Gb = _periodic_prims(b - z, m)
        acc += alpha * (Ab - Aa) + beta * (Gb - Ga)
    return acc / 2j


# ------------------------------------------------------------------ fields


@dataclass(frozen=True)
class FieldEvaluator:
    """A holomorphic field ``g`` with derivative ``g'`` on one domain.

    ``line_moments(y)`` (periodic half-plane fields only) returns the exact
    means of ``|g|^2`` and ``|g'|^2`` over ``0 <= x <= 1`` at height ``y``.
    """

    value_fn: Callable
    deriv_fn: Callable
    domain: str
    tag: str
    deriv2_fn: Callable | None = None
    line_moments: Callable | None = None

    def value(self, z):
        return map_points(self.value_fn, z)

    def deriv(self, z):
        return map_points(self.deriv_fn, z)

    def deriv2(self, z):
        if self.deriv2_fn is None:
            raise NotImplementedError(f"{self.tag} has no second derivative")
        return map_points(self.deriv2_fn, z)

    __call__ = value

    def scaled(self, t: complex, tag: str | None = None) -> "FieldEvaluator":
        lm = None
        if self.line_moments is not None:
            lm = lambda y, f=self.line_moments: tuple(abs(t) ** 2 * v for v in f(y))
        d2 = None if self.deriv2_fn is None else (lambda z, f=self.deriv2_fn: t * f(z))
        return FieldEvaluator(lambda z: t * self.value_fn(z), lambda z: t * self.deriv_fn(z),
                              self.domain, tag or f"{t}*{self.tag}", d2, lm)


def zero_field(domain: str) -> FieldEvaluator:
    zero = lambda z: np.zeros(np.shape(z), complex)
    return FieldEvaluator(zero, zero, domain, "zero", zero, lambda y: (0.0, 0.0))


def _kahan_cells(mu: PiecewiseCoefficient, z, fn) -> np.ndarray:
    """Compensated sum of ``value * fn(cell, z)`` in cell order."""
    s = np.zeros(z.shape, complex)
    comp = np.zeros(z.shape, complex)
    for i, (cell, v) in enumerate(zip(mu.cells, mu.values)):
        if v == 0:
            continue
        try:
            term = v * fn(cell, z)
        except SingularLocationError as exc:
            raise SingularLocationError(str(exc), i) from None
        y = term - comp
        t = s + y
        comp = (t - s) - y
        s = t
    return s


def cell_sum(mu: PiecewiseCoefficient, z, m: int) -> np.ndarray:
    """``-(m-1)!/pi * sum_c mu_c int_c (zeta - z)^-m dA``."""
    z = np.asarray(z, complex)
    return _order_scale(m) * _kahan_cells(mu, z, lambda c, w: kernel_integral(c, w, m))


def transform(mu: PiecewiseCoefficient, which: str = "S") -> FieldEvaluator:
    """Field evaluator for ``which`` in ``{"S", "S#", "S'", "C"}``.

    The evaluator's derivative is the next kernel order, so ``transform(mu,
    "S").deriv`` is the derivative transform.
    """
    if which == "S#":
        if mu.domain != "halfplane":
            raise CoefficientError("the modified transform is defined on the half-plane only")
        for i, c in enumerate(mu.cells):
            if c.contains(0j):
                raise CoefficientError(f"cell {i} contains the origin in its closure")
        origin = np.zeros(1, complex)
        s0 = cell_sum(mu, origin, 2)[0] if len(mu) else 0j
        return FieldEvaluator(lambda z: cell_sum(mu, z, 2) - s0,
                              lambda z: cell_sum(mu, z, 3), mu.domain, "S#",
                              lambda z: cell_sum(mu, z, 4))
    if which not in ORDERS:
        raise ValueError(f"unknown transform {which!r}")
    m = ORDERS[which]
    d2 = (lambda z: cell_sum(mu, z, m + 2)) if m + 2 <= 5 else None
    return FieldEvaluator(lambda z: cell_sum(mu, z, m), lambda z: cell_sum(mu, z, m + 1),
                          mu.domain, which, d2)


# ---------------------------------------------------- n-adic periodic fields


LEVEL_CUTOFF = 7.5  # levels with n^k Im z beyond this contribute < e^{-47}


def _levels(n: int, y_min: float) -> int:
    return max(0, math.ceil(math.log(LEVEL_CUTOFF / max(y_min, 1e-300)) / math.log(n))) + 1


def periodic_level_sum(per: NadicPeriodic, z, m: int) -> np.ndarray:
    """Value (``m = 2``) or derivative (``m = 3``) of the periodized transform.

    ``b(z) = sum_k V(n^k z)`` and ``b'(z) = sum_k n^k P(n^k z)`` where ``V``
    and ``P`` are the 1-periodic transforms of the base box.
    """
    z = np.asarray(z, complex)
    n = per.n
    out = np.zeros(z.shape, complex)
    if z.size == 0 or len(per.base) == 0:
        return out
    kmax = _levels(n, float(np.min(z.imag)))
    scale = _order_scale(m)
    for k in range(kmax):
        w = z * float(n) ** k
        live = w.imag < LEVEL_CUTOFF * 1.0001
        if not np.any(live):
            break
        part = scale * _kahan_cells(per.base, w[live], lambda c, x: periodic_kernel_integral(c, x, m))
        if m == 3:
            part = part * float(n) ** k
        out[live] += part
    return out


@dataclass(frozen=True)
class NadicSpectrum:
    """Fourier representation ``b(z) = sum_f coef_f exp(2 pi i f z)``."""

    freqs: np.ndarray
    coef: np.ndarray

    def value(self, z):
        z = np.asarray(z, complex)
        return map_points(lambda w: self._eval(w, 0), z)

    def deriv(self, z):
        z = np.asarray(z, complex)
        return map_points(lambda w: self._eval(w, 1), z)

    def _eval(self, w, order):
        out = np.zeros(w.shape, complex)
        c = self.coef * (2j * PI * self.freqs) ** order
        for start in range(0, len(self.freqs), 256):
            f = self.freqs[start:start + 256]
            out += np.sum(c[start:start + 256][None, :] * np.exp(2j * PI * w[:, None] * f[None, :]), axis=1)
        return out

    def line_moments(self, y):
        """Exact means of ``|b|^2`` and ``|b'|^2`` over one period at height ``y``."""
        damp = np.exp(-4 * PI * self.freqs * y)
        p = np.abs(self.coef) ** 2 * damp
        return float(np.sum(p)), float(np.sum(p * (2 * PI * self.freqs) ** 2))


def cell_fourier(cell: Cell, m_max: int) -> np.ndarray:
    """``int_cell exp(-2 pi i m zeta) dA`` for ``m = 1..m_max``."""
    m = np.arange(1, m_max + 1, dtype=float)
    fx = (np.exp(-2j * PI * m * cell.a1) - np.exp(-2j * PI * m * cell.a0)) / (-2j * PI * m)
    fy = (np.exp(2 * PI * m * cell.b1) - np.exp(2 * PI * m * cell.b0)) / (2 * PI * m)
    return fx * fy


def nadic_fourier_basis(per_or_cells, n: int, y_min: float):
    """Per-cell Fourier coefficients of the periodized value transform.

    Returns ``(freqs, basis)`` with ``coef = basis @ values`` for the cell
    values of the base coefficient.
    """
    cells = per_or_cells.base.cells if isinstance(per_or_cells, NadicPeriodic) else per_or_cells
    top = max((c.b1 for c in cells), default=-1.0 / n)
    # base cells sit at depth >= |top|; harmonics beyond m_max are below 1e-18
    m_max = max(1, math.ceil(41.5 / (2 * PI * max(-top, 1e-9))))
    f_cap = 41.5 / (4 * PI * y_min)
    hat = np.array([cell_fourier(c, m_max) for c in cells]).T  # (m, cells)
    mm = np.arange(1, m_max + 1)
    rows, freqs = [], []
    k = 0
    while True:
        f = mm * n ** k
        keep = f <= max(f_cap, n)
        if not np.any(keep):
            break
        freqs.append(f[keep])
        rows.append(4 * PI * mm[keep, None] * hat[keep])
        k += 1
    freqs = np.concatenate(freqs)
    rows = np.concatenate(rows)
    uniq, inv = np.unique(freqs, return_inverse=True)
    basis = np.zeros((len(uniq), rows.shape[1]), complex)
    np.add.at(basis, inv, rows)
    return uniq.astype(float), basis


def nadic_spectrum(per: NadicPeriodic, y_min: float) -> NadicSpectrum:
    freqs, basis = nadic_fourier_basis(per, per.n, y_min)
    return NadicSpectrum(freqs, basis @ per.base.values)


def periodic_transform(per: NadicPeriodic, y_min: float = 2.0 ** -22) -> FieldEvaluator:
    """Periodized modified transform (zero horizontal mean) and its derivative.

    Pointwise values come from the closed-form level sums; ``line_moments``
    uses the exact Fourier series, valid for heights ``>= y_min``.
    """
    spec = nadic_spectrum(per, y_min)
    return FieldEvaluator(lambda z: periodic_level_sum(per, z, 2),
                          lambda z: periodic_level_sum(per, z, 3),
                          "halfplane", f"S#per(n={per.n})", None, spec.line_moments)


def periodic_fourier_field(per: NadicPeriodic, y_min: float = 2.0 ** -22) -> FieldEvaluator:
    """Same field as :func:`periodic_transform`, evaluated from its Fourier series."""
    spec = nadic_spectrum(per, y_min)
    return FieldEvaluator(lambda z: spec._eval(z, 0), lambda z: spec._eval(z, 1),
                          "halfplane", f"S#fourier(n={per.n})", lambda z: spec._eval(z, 2),
                          spec.line_moments)


# --------------------------------------------------------------- locality


def square_neighbourhood(x: float, y: float, L: float) -> Cell:
    """Reflection ``Q_L(x - iy)`` of the square neighbourhood of ``x + iy``."""
    e = math.exp(L)
    return Cell.rect(x - e * y, x + e * y, -e * y, -y / e)


def normalized_deriv(mu: PiecewiseCoefficient, z) -> np.ndarray:
    """``2 (S mu)' / rho_H = 2 Im(z) (S mu)'(z)`` for half-plane coefficients."""
    z = np.asarray(z, complex)
    return 2.0 * z.imag * map_points(lambda w: cell_sum(mu, w, 3), z)


def locality_gap(mu: PiecewiseCoefficient, x: float, y: float, L: float) -> float:
    """``|2 (S mu)' / rho_H (x + iy)|`` after zeroing ``mu`` on ``Q_L(x - iy)``."""
    if L <= 0:
        trimmed = mu
    else:
        trimmed = subtract_cell(mu, square_neighbourhood(x, y, L))
    if len(trimmed) == 0:
        return 0.0
    return float(abs(normalized_deriv(trimmed, np.array([complex(x, y)]))[0]))


def aligned_outside_coefficient(x: float, y: float, L: float, reach: float = 8.0,
                                ratio: float = 1.25) -> PiecewiseCoefficient:
    """Unit-modulus coefficient outside ``Q_L`` whose phases align the kernel.

    Each cell gets the phase making ``(zeta - z)^-3`` real and negative at its
    centre, so the derivative transform at ``x + iy`` nearly attains
    ``(2/pi) int |zeta - z|^-3``. The domain is truncated at
    ``e^(L + reach) y``.
    """
    e = math.exp(L)
    far = math.exp(L + reach) * y

    def ladder(lo, hi):
        pts = [lo]
        while pts[-1] * ratio < hi:
            pts.append(pts[-1] * ratio)
        pts.append(hi)
        return pts

    g = ladder(0.05 * y, far)
    xs = sorted(set([x] + [x + s for s in g] + [x - s for s in g] + [x - e * y, x + e * y]))
    ys = sorted(set([0.0, y / e, e * y] + [-(-t) for t in ladder(0.05 * y, far)]))
    ys = [t for t in ys if t <= far]
    hole = square_neighbourhood(x, y, L)
    z = complex(x, y)
    cells, vals = [], []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        for h0, h1 in zip(ys[:-1], ys[1:]):
            c = Cell.rect(x0, x1, -h1, -h0)
            cx, cy = 0.5 * (x0 + x1), -0.5 * (h0 + h1)
            if hole.a0 <= cx <= hole.a1 and hole.b0 <= cy <= hole.b1:
                continue
            k = (complex(cx, cy) - z) ** -3
            cells.append(c)
            vals.append(-np.conj(k) / abs(k))
    return PiecewiseCoefficient(tuple(cells), np.array(vals), "halfplane")


# ------------------------------------------------------- domain adapters


def disk_from_periodic(b: FieldEvaluator) -> FieldEvaluator:
    """``g(xi) = b(w)`` on the exterior disk with ``xi = exp(-2 pi i w)``.

    ``line_moments`` of the result take a radius ``R`` and return circle
    means of ``|g|^2`` and ``|g'|^2``.
    """

    def to_w(xi):
        return 1j * np.log(xi) / (2 * PI)

    def value(xi):
        return b.value_fn(to_w(xi))

    def deriv(xi):
        return b.deriv_fn(to_w(xi)) * 1j / (2 * PI * xi)

    lm = None
    if b.line_moments is not None:
        def lm(R):
            m0, m1 = b.line_moments(math.log(R) / (2 * PI))
            return m0, m1 / (4 * PI ** 2 * R ** 2)
    return FieldEvaluator(value, deriv, "disk", f"disk({b.tag})", None, lm)


def halfplane_from_disk(g: FieldEvaluator) -> FieldEvaluator:
    """``b(w) = g(exp(-2 pi i w))``, a 1-periodic field on the upper half-plane."""

    def value(w):
        return g.value_fn(np.exp(-2j * PI * w))

    def deriv(w):
        xi = np.exp(-2j * PI * w)
        return g.deriv_fn(xi) * (-2j * PI * xi)

    lm = None
    if g.line_moments is not None:
        def lm(y):
            R = math.exp(2 * PI * y)
            m0, m1 = g.line_moments(R)
            return m0, m1 * 4 * PI ** 2 * R ** 2
    return FieldEvaluator(value, deriv, "halfplane", f"halfplane({g.tag})", None, lm)
