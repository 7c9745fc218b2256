"""Piecewise-constant Beltrami coefficients, hyperbolic boxes and n-adic grids.

Coefficients live either on the closed lower half-plane (``"halfplane"``) or
on the unit disk (``"disk"``). Cells are closed axis-parallel rectangles or
annular sectors; overlaps along boundaries are ignored since every consumer
integrates over them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

RECT = "rect"
SECTOR = "sector"
DOMAINS = ("halfplane", "disk")


class CoefficientError(ValueError):
    """Invalid coefficient, grid or garden input."""


@dataclass(frozen=True)
class Cell:
    """A rectangle ``[a0, a1] x [b0, b1]`` or an annular sector.

    For rectangles ``(a0, a1, b0, b1) = (x_min, x_max, y_min, y_max)``; for
    sectors ``(r_min, r_max, theta_min, theta_max)``.
    """

    kind: str
    a0: float
    a1: float
    b0: float
    b1: float

    def __post_init__(self):
        if self.kind == RECT:
            if not self.a0 < self.a1:
                raise CoefficientError(f"rectangle needs x_min < x_max, got {self}")
            if not self.b0 < self.b1:
                raise CoefficientError(f"rectangle needs y_min < y_max, got {self}")
            if self.b0 * self.b1 < 0:
                raise CoefficientError(f"rectangle crosses the real axis: {self}")
        elif self.kind == SECTOR:
            if not 0.0 <= self.a0 < self.a1:
                raise CoefficientError(f"sector needs 0 <= r_min < r_max, got {self}")
            span = self.b1 - self.b0
            if not 0.0 < span <= TWO_PI + 1e-12:
                raise CoefficientError(f"sector angle span must lie in (0, 2pi], got {self}")
        else:
            raise CoefficientError(f"unknown cell kind {self.kind!r}")

    @classmethod
    def rect(cls, x_min, x_max, y_min, y_max) -> "Cell":
        return cls(RECT, float(x_min), float(x_max), float(y_min), float(y_max))

    @classmethod
    def sector(cls, r_min, r_max, th_min, th_max) -> "Cell":
        return cls(SECTOR, float(r_min), float(r_max), float(th_min), float(th_max))

    @property
    def full_turn(self) -> bool:
        return self.kind == SECTOR and abs(self.b1 - self.b0 - TWO_PI) < 1e-12

    @property
    def area(self) -> float:
        if self.kind == RECT:
            return (self.a1 - self.a0) * (self.b1 - self.b0)
        return 0.5 * (self.b1 - self.b0) * (self.a1 ** 2 - self.a0 ** 2)

    @property
    def center(self) -> complex:
        """Image of the parameter-space midpoint."""
        return complex(self.to_complex(0.5 * (self.a0 + self.a1), 0.5 * (self.b0 + self.b1)))

    @property
    def diameter(self) -> float:
        if self.kind == RECT:
            return math.hypot(self.a1 - self.a0, self.b1 - self.b0)
        pts = self.to_complex(np.array([self.a0, self.a0, self.a1, self.a1]),
                              np.array([self.b0, self.b1, self.b0, self.b1]))
        chord = 2.0 * self.a1 * math.sin(min(self.b1 - self.b0, math.pi) / 2.0)
        return max(float(np.max(np.abs(pts[:, None] - pts[None, :]))), chord)

    def to_complex(self, u, v):
        """Map parameter coordinates to points of the plane."""
        if self.kind == RECT:
            return np.asarray(u) + 1j * np.asarray(v)
        return np.asarray(u) * np.exp(1j * np.asarray(v))

    def jacobian(self, u, v):
        if self.kind == RECT:
            return np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape)
        return np.asarray(u) * np.ones_like(np.asarray(v, dtype=float))

    def to_param(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == RECT:
            return z.real, z.imag
        th = np.angle(z)
        th = self.b0 + np.mod(th - self.b0, TWO_PI)
        return np.abs(z), th

    def contains(self, z, closed: bool = True):
        u, v = self.to_param(z)
        if closed:
            return (u >= self.a0) & (u <= self.a1) & (v >= self.b0) & (v <= self.b1)
        return (u > self.a0) & (u < self.a1) & (v > self.b0) & (v < self.b1)

    def mapped(self, scale: float, shift: float) -> "Cell":
        """Image under ``z -> scale * z + shift`` (rectangles only)."""
        if self.kind != RECT:
            raise CoefficientError("affine transport is defined for rectangles only")
        return Cell.rect(scale * self.a0 + shift, scale * self.a1 + shift,
                         scale * self.b0, scale * self.b1)

    def to_dict(self) -> dict:
        if self.kind == RECT:
            return {"kind": RECT, "x_min": self.a0, "x_max": self.a1,
                    "y_min": self.b0, "y_max": self.b1}
        return {"kind": SECTOR, "r_min": self.a0, "r_max": self.a1,
                "theta_min": self.b0, "theta_max": self.b1}

    @classmethod
    def from_dict(cls, d: dict) -> "Cell":
        if d["kind"] == RECT:
            return cls.rect(d["x_min"], d["x_max"], d["y_min"], d["y_max"])
        if d["kind"] == SECTOR:
            return cls.sector(d["r_min"], d["r_max"], d["theta_min"], d["theta_max"])
        raise CoefficientError(f"unknown cell kind {d['kind']!r}")


@dataclass(frozen=True)
class PiecewiseCoefficient:
    """Beltrami coefficient equal to ``values[i]`` on ``cells[i]``."""

    cells: tuple
    values: np.ndarray
    domain: str = "halfplane"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "values", vals)
        if len(self.cells) != len(vals):
            raise CoefficientError("cells and values differ in length")
        if self.domain not in DOMAINS:
            raise CoefficientError(f"domain must be one of {DOMAINS}")
        for c in self.cells:
            if self.domain == "halfplane":
                if c.kind != RECT or c.b1 > 0:
                    raise CoefficientError(f"half-plane cells must be rectangles in Im <= 0: {c}")
            elif c.kind == SECTOR:
                if c.a1 > 1.0 + 1e-12:
                    raise CoefficientError(f"disk cell leaves the unit disk: {c}")
            elif abs(complex(c.a0, c.b0)) > 1 or abs(complex(c.a1, c.b1)) > 1 \
                    or abs(complex(c.a0, c.b1)) > 1 or abs(complex(c.a1, c.b0)) > 1:
                raise CoefficientError(f"disk cell leaves the unit disk: {c}")

    @classmethod
    def empty(cls, domain: str = "halfplane") -> "PiecewiseCoefficient":
        return cls((), np.zeros(0, complex), domain)

    def __len__(self):
        return len(self.cells)

    @property
    def k(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0

    def scaled(self, t: complex) -> "PiecewiseCoefficient":
        return PiecewiseCoefficient(self.cells, t * self.values, self.domain)

    def __add__(self, other: "PiecewiseCoefficient") -> "PiecewiseCoefficient":
        if other.domain != self.domain:
            raise CoefficientError("cannot add coefficients on different domains")
        return PiecewiseCoefficient(self.cells + other.cells,
                                    np.concatenate([self.values, other.values]), self.domain)

    def mapped(self, scale: float, shift: float) -> "PiecewiseCoefficient":
        return PiecewiseCoefficient(tuple(c.mapped(scale, shift) for c in self.cells),
                                    self.values.copy(), self.domain)

    def evaluate(self, z) -> np.ndarray:
        """Pointwise value (first matching cell wins on shared boundaries)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, complex)
        hit = np.zeros(z.shape, bool)
        for c, v in zip(self.cells, self.values):
            m = c.contains(z) & ~hit
            out[m] = v
            hit |= m
        return out

    def support_area(self) -> float:
        return float(sum(c.area for c in self.cells))

    def to_dict(self) -> dict:
        cells = []
        for c, v in zip(self.cells, self.values):
            d = c.to_dict()
            d["re"], d["im"] = float(v.real), float(v.imag)
            cells.append(d)
        return {"schema_version": 1, "domain": self.domain, "cells": cells, "k": self.k}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseCoefficient":
        try:
            cells = [Cell.from_dict(c) for c in d["cells"]]
            values = [complex(c.get("re", 0.0), c.get("im", 0.0)) for c in d["cells"]]
            return cls(tuple(cells), np.array(values, complex), d["domain"])
        except (KeyError, TypeError) as exc:
            raise CoefficientError(f"malformed coefficient JSON: {exc}") from exc

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def from_json(cls, path) -> "PiecewiseCoefficient":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CoefficientError(f"malformed coefficient JSON: {exc}") from exc
        return cls.from_dict(data)


# ---------------------------------------------------------------- boxes, grids


@dataclass(frozen=True)
class BoxSpec:
    """Box ``[x_min, x_max] x [y_top / n, y_top]`` in the upper half-plane."""

    x_min: float
    x_max: float
    y_top: float
    n: float

    def __post_init__(self):
        if not self.n > 1:
            raise CoefficientError("box ratio n must exceed 1")
        if not (self.x_min < self.x_max and self.y_top > 0):
            raise CoefficientError(f"degenerate box {self}")

    @property
    def y_bottom(self) -> float:
        return self.y_top / self.n

    @property
    def alpha(self) -> float:
        return (self.x_max - self.x_min) / self.y_top

    @property
    def type(self) -> tuple:
        return (self.n, self.alpha)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_top - self.y_bottom)

    def reflected(self) -> Cell:
        return Cell.rect(self.x_min, self.x_max, -self.y_top, -self.y_bottom)

    def similar_to(self, other: "BoxSpec", rtol: float = 1e-9) -> bool:
        return (abs(self.n - other.n) <= rtol * self.n
                and abs(self.alpha - other.alpha) <= rtol * max(self.alpha, 1.0))

    def affine_to(self, other: "BoxSpec") -> tuple:
        """``(a, b)`` with ``L(z) = a z + b`` carrying this box onto ``other``."""
        a = other.y_top / self.y_top
        return a, other.x_min - a * self.x_min


@dataclass(frozen=True)
class GridSpec:
    """A finite window of the n-adic grid.

    Levels ``k_min..k_max`` and base-level indices ``j_min..j_max``: level ``k``
    contains the boxes over ``[j n^-k, (j+1) n^-k]`` covering
    ``[j_min, j_max + 1]``. With ``hatted`` the grid instead returns the
    dominated-box tiling of the strip ``R x [strip_y / n, strip_y]``.
    """

    n: int
    k_min: int = 0
    k_max: int = 0
    j_min: int = 0
    j_max: int = 0
    hatted: bool = False
    strip_y: float | None = None

    def validate(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise CoefficientError("grid needs integer n >= 2")
        if self.k_max < self.k_min or self.j_max < self.j_min:
            raise CoefficientError("empty index range in grid spec")
        if self.hatted and not (self.strip_y and self.strip_y > 0):
            raise CoefficientError("hatted grid needs a positive strip_y")


def nadic_box(n: int, j: int, k: int) -> BoxSpec:
    w = float(n) ** (-k)
    return BoxSpec(j * w, (j + 1) * w, w, float(n))


def make_nadic_grid(spec: GridSpec) -> list:
    """Enumerate the n-adic boxes (or the hatted strip tiling) of ``spec``."""
    spec.validate()
    n = spec.n
    if spec.hatted:
        return hatted_strip_tiling(n, spec.strip_y, spec.j_min, spec.j_max + 1)
    boxes = []
    for k in range(spec.k_min, spec.k_max + 1):
        if k >= 0:
            lo, hi = spec.j_min * n ** k, (spec.j_max + 1) * n ** k
            boxes.extend(nadic_box(n, j, k) for j in range(lo, hi))
        else:
            step = n ** (-k)
            lo = math.floor(spec.j_min / step)
            hi = math.ceil((spec.j_max + 1) / step)
            boxes.extend(nadic_box(n, j, k) for j in range(lo, hi))
    return boxes


def hatted_strip_tiling(n: int, y: float, x_lo: float, x_hi: float) -> list:
    """Boxes of the hatted grid tiling ``[x_lo, x_hi] x [y/n, y]``.

    The strip is tiled by boxes dominated (with ``1/n < theta <= 1``) by the
    n-adic boxes of the unique level ``k`` with ``n^-(k+1) < y <= n^-k``.
    """
    if y <= 0:
        raise CoefficientError("strip height must be positive")
    k = math.floor(-math.log(y) / math.log(n) + 1e-12)
    w = float(n) ** (-k)
    if not (w / n < y <= w * (1 + 1e-12)):
        k += 1 if y <= w / n else -1
        w = float(n) ** (-k)
    j0 = math.floor(x_lo / w + 1e-12)
    j1 = math.ceil(x_hi / w - 1e-12)
    return [BoxSpec(j * w, (j + 1) * w, y, float(n)) for j in range(j0, j1)]


def restrict_to_cell(mu: PiecewiseCoefficient, window: Cell) -> PiecewiseCoefficient:
    """Intersect every rectangle cell with ``window``."""
    cells, vals = [], []
    for c, v in zip(mu.cells, mu.values):
        if c.kind != RECT:
            raise CoefficientError("rectangle clipping needs rectangle cells")
        x0, x1 = max(c.a0, window.a0), min(c.a1, window.a1)
        y0, y1 = max(c.b0, window.b0), min(c.b1, window.b1)
        if x1 > x0 and y1 > y0:
            cells.append(Cell.rect(x0, x1, y0, y1))
            vals.append(v)
    return PiecewiseCoefficient(tuple(cells), np.array(vals, complex), mu.domain)


def subtract_cell(mu: PiecewiseCoefficient, hole: Cell) -> PiecewiseCoefficient:
    """Zero ``mu`` on the rectangle ``hole`` (each cell split into <= 4 pieces)."""
    cells, vals = [], []
    for c, v in zip(mu.cells, mu.values):
        x0, x1 = max(c.a0, hole.a0), min(c.a1, hole.a1)
        y0, y1 = max(c.b0, hole.b0), min(c.b1, hole.b1)
        if not (x1 > x0 and y1 > y0):
            cells.append(c)
            vals.append(v)
            continue
        pieces = [(c.a0, c.a1, y1, c.b1), (c.a0, c.a1, c.b0, y0),
                  (c.a0, x0, y0, y1), (x1, c.a1, y0, y1)]
        for a0, a1, b0, b1 in pieces:
            if a1 > a0 and b1 > b0:
                cells.append(Cell.rect(a0, a1, b0, b1))
                vals.append(v)
    return PiecewiseCoefficient(tuple(cells), np.array(vals, complex), mu.domain)


def periodize(mu: PiecewiseCoefficient, box: BoxSpec, grid: GridSpec) -> PiecewiseCoefficient:
    """Transport ``mu`` restricted to the reflected ``box`` to every grid box."""
    boxes = make_nadic_grid(grid)
    if not any(_same_box(box, b) for b in boxes):
        raise CoefficientError(f"box {box} is not a member of the grid")
    local = restrict_to_cell(mu, box.reflected())
    cells, vals = [], []
    for target in boxes:
        a, b = box.affine_to(target)
        for c, v in zip(local.cells, local.values):
            cells.append(c.mapped(a, b))
            vals.append(v)
    return PiecewiseCoefficient(tuple(cells), np.array(vals, complex), "halfplane")


def _same_box(b1: BoxSpec, b2: BoxSpec, tol: float = 1e-12) -> bool:
    s = max(b1.y_top, 1e-300)
    return (abs(b1.x_min - b2.x_min) <= tol * s and abs(b1.x_max - b2.x_max) <= tol * s
            and abs(b1.y_top - b2.y_top) <= tol * s and abs(b1.n - b2.n) <= tol)


@dataclass(frozen=True)
class NadicPeriodic:
    """Periodization over the whole n-adic grid, cut to the strip ``-1 < Im < 0``.

    ``base`` is the coefficient on the reflected base box
    ``[0, 1] x [-1, -1/n]``; level ``k >= 0`` carries ``n^-k (base + j)``.
    The result is 1-periodic in ``Re``.
    """

    base: PiecewiseCoefficient
    n: int

    def __post_init__(self):
        window = nadic_box(self.n, 0, 0).reflected()
        for c in self.base.cells:
            if (c.a0 < window.a0 - 1e-12 or c.a1 > window.a1 + 1e-12
                    or c.b0 < window.b0 - 1e-12 or c.b1 > window.b1 + 1e-12):
                raise CoefficientError(f"base cell {c} leaves the base box")

    @classmethod
    def from_box(cls, mu: PiecewiseCoefficient, box: BoxSpec, n: int) -> "NadicPeriodic":
        """Periodize ``mu`` given on any reflected n-adic box."""
        base_box = nadic_box(n, 0, 0)
        if abs(box.n - n) > 1e-12 or abs(box.alpha - 1.0) > 1e-9:
            raise CoefficientError("box is not an n-adic box")
        local = restrict_to_cell(mu, box.reflected())
        a, b = box.affine_to(base_box)
        return cls(local.mapped(a, b), int(n))

    def materialize(self, k_max: int, x_lo: int = 0, x_hi: int = 1) -> PiecewiseCoefficient:
        grid = GridSpec(self.n, 0, k_max, x_lo, x_hi - 1)
        return periodize(self.base, nadic_box(self.n, 0, 0), grid)


def restrict_strip(mu: PiecewiseCoefficient, height: float) -> PiecewiseCoefficient:
    """Multiply by the characteristic function of ``{|Im z| < height}``."""
    if height <= 0:
        return PiecewiseCoefficient.empty(mu.domain)
    big = 1e300
    # half-plane coefficients live below the axis, so the lower half of the strip suffices
    return restrict_to_cell(mu, Cell.rect(-big, big, -height, 0.0))


# ------------------------------------------------------------ exponential maps


def _phase_factor(x):
    """``conj(xi') / xi'`` for ``xi(w) = exp(-2 pi i w)`` at ``Re w = x``."""
    return -np.exp(4j * math.pi * np.asarray(x))


def pullback_exp(mu_disk: PiecewiseCoefficient, max_phase_step: float = 0.1) -> PiecewiseCoefficient:
    """Pull a sector coefficient back under ``xi(w) = exp(-2 pi i w)``.

    The image of each sector is a rectangle in one period ``0 <= Re w <= 1``;
    the pulled-back value carries the factor ``-exp(4 pi i Re w)``, which is
    sampled at sub-rectangle midpoints with at most ``max_phase_step`` radians
    of rotation per piece. Moduli are exact.
    """
    if mu_disk.domain != "disk":
        raise CoefficientError("pullback_exp needs a disk coefficient")
    cells, vals = [], []
    for c, v in zip(mu_disk.cells, mu_disk.values):
        if c.kind != SECTOR:
            raise CoefficientError("pullback_exp needs sector cells")
        if c.a0 <= 0:
            raise CoefficientError("sector touches the origin; its image is unbounded")
        y0, y1 = math.log(c.a0) / TWO_PI, math.log(c.a1) / TWO_PI
        x0, x1 = -c.b1 / TWO_PI, -c.b0 / TWO_PI
        shift = -math.floor(x0 + 1e-12)
        x0, x1 = x0 + shift, x1 + shift
        pieces = max(1, math.ceil(4 * math.pi * (x1 - x0) / max_phase_step))
        edges = np.linspace(x0, x1, pieces + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            cells.append(Cell.rect(a, b, y0, min(y1, 0.0)))
            vals.append(v * complex(_phase_factor(0.5 * (a + b))))
    return PiecewiseCoefficient(tuple(cells), np.array(vals, complex), "halfplane")


def pushforward_exp(mu: PiecewiseCoefficient, max_phase_step: float = 0.25) -> PiecewiseCoefficient:
    """Inverse of :func:`pullback_exp` for 1-periodic data given on one period."""
    if mu.domain != "halfplane":
        raise CoefficientError("pushforward_exp needs a half-plane coefficient")
    cells, vals = [], []
    for c, v in zip(mu.cells, mu.values):
        if c.a0 < -1e-12 or c.a1 > 1 + 1e-12:
            raise CoefficientError("cells must lie in one period 0 <= Re <= 1")
        if c.b1 >= 0:
            raise CoefficientError("cells touching the real axis map onto the circle")
        r0, r1 = math.exp(TWO_PI * c.b0), math.exp(TWO_PI * c.b1)
        pieces = max(1, math.ceil(4 * math.pi * (c.a1 - c.a0) / max_phase_step))
        edges = np.linspace(c.a0, c.a1, pieces + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            th0, th1 = -TWO_PI * b, -TWO_PI * a
            shift = -math.floor(th0 / TWO_PI + 1e-12) * TWO_PI
            cells.append(Cell.sector(r0, r1, th0 + shift, th1 + shift))
            vals.append(v / complex(_phase_factor(0.5 * (a + b))))
    return PiecewiseCoefficient(tuple(cells), np.array(vals, complex), "disk")


# --------------------------------------------------------------------- gardens


def hyperbolic_distance(z, w):
    """Distance in the lower (or upper) half-plane metric ``|dz| / |Im z|``."""
    z, w = np.asarray(z, complex), np.asarray(w, complex)
    arg = 1.0 + np.abs(z - w) ** 2 / (2.0 * np.abs(z.imag) * np.abs(w.imag))
    return np.arccosh(np.maximum(arg, 1.0))


@dataclass(frozen=True)
class Crescent:
    """Hyperbolic ``S``-neighbourhood of the geodesic segment from ``a`` to ``b``.

    Endpoints lie in the open lower half-plane.
    """

    a: complex
    b: complex
    S: float

    @property
    def vertical(self) -> bool:
        return abs(self.a.real - self.b.real) <= 1e-12 * max(abs(self.a), abs(self.b))

    def geodesic_points(self, m: int = 257) -> np.ndarray:
        """Points along the segment, equally spaced in hyperbolic arclength."""
        s = np.linspace(0.0, 1.0, m)
        if self.vertical:
            lo, hi = sorted((-self.a.imag, -self.b.imag))
            return self.a.real - 1j * lo * (hi / lo) ** s
        # the geodesic through a, b is a semicircle centred on the real axis
        c = (abs(self.b) ** 2 - abs(self.a) ** 2) / (2 * (self.b.real - self.a.real))
        r = abs(self.a - c)
        ta = np.angle(self.a - c)
        tb = np.angle(self.b - c)
        # arclength parameter along the semicircle: u = log tan(t/2)
        ua, ub = np.log(np.tan(-ta / 2)), np.log(np.tan(-tb / 2))
        t = -2 * np.arctan(np.exp(ua + s * (ub - ua)))
        return c + r * np.exp(1j * t)


@dataclass(frozen=True)
class Garden:
    crescents: tuple
    R: float

    def to_dict(self) -> dict:
        return {"schema_version": 1, "R": self.R,
                "crescents": [{"a": [c.a.real, c.a.imag], "b": [c.b.real, c.b.imag], "S": c.S}
                              for c in self.crescents]}

    @classmethod
    def from_dict(cls, d: dict) -> "Garden":
        try:
            cr = [Crescent(complex(*c["a"]), complex(*c["b"]), float(c["S"])) for c in d["crescents"]]
            return build_garden(cr, None, float(d["R"]))
        except (KeyError, TypeError) as exc:
            raise CoefficientError(f"malformed garden JSON: {exc}") from exc


class SeparationError(CoefficientError):
    def __init__(self, i, j, dist, R):
        super().__init__(f"crescents {i} and {j} are at hyperbolic distance {dist:.4f} <= R={R}")
        self.pair = (i, j)
        self.distance = dist


def geodesic_distance(c1: Crescent, c2: Crescent) -> float:
    """Hyperbolic distance between the two core geodesic segments."""
    p, q = c1.geodesic_points(129), c2.geodesic_points(129)
    d = hyperbolic_distance(p[:, None], q[None, :])
    i, j = np.unravel_index(np.argmin(d), d.shape)
    best = float(d[i, j])
    # refine on the neighbouring sub-segments
    for _ in range(3):
        si = np.linspace(max(i - 1, 0), min(i + 1, len(p) - 1), 33)
        sj = np.linspace(max(j - 1, 0), min(j + 1, len(q) - 1), 33)
        pp = np.interp(si, np.arange(len(p)), p.real) + 1j * np.interp(si, np.arange(len(p)), p.imag)
        qq = np.interp(sj, np.arange(len(q)), q.real) + 1j * np.interp(sj, np.arange(len(q)), q.imag)
        d = hyperbolic_distance(pp[:, None], qq[None, :])
        best = min(best, float(d.min()))
        p, q = pp, qq
        i, j = np.unravel_index(np.argmin(d), d.shape)
    return best


def build_garden(crescents: Iterable, S: float | None, R: float) -> Garden:
    """Validate crescents (or ``(a, b)`` endpoint pairs with common ``S``)."""
    if R <= 0:
        raise CoefficientError("separation R must be positive")
    cr = []
    for item in crescents:
        c = item if isinstance(item, Crescent) else Crescent(complex(item[0]), complex(item[1]), float(S))
        if not c.S > 0:
            raise CoefficientError("crescent thickness S must be positive")
        if c.a.imag >= 0 or c.b.imag >= 0:
            raise CoefficientError("crescent endpoints must lie in the lower half-plane")
        cr.append(c)
    for i in range(len(cr)):
        for j in range(i + 1, len(cr)):
            d = geodesic_distance(cr[i], cr[j])
            if d <= R:
                raise SeparationError(i, j, d, R)
    return Garden(tuple(cr), float(R))


def vertical_garden(xs: Sequence[float], y_lo: float, y_hi: float, S: float, R: float) -> Garden:
    """Vertical crescents over ``x in xs`` spanning depths ``[y_lo, y_hi]``."""
    return build_garden([(complex(x, -y_lo), complex(x, -y_hi)) for x in xs], S, R)


def garden_to_coefficient(garden: Garden, value: complex = 1.0, tol: float = 0.05) -> PiecewiseCoefficient:
    """Inner rectangle approximation of every crescent.

    Horizontal slabs of hyperbolic height ``tol``; within each slab the
    rectangle uses the narrowest width of the neighbourhood, so every cell lies
    inside the true crescent and the Hausdorff defect is ``O(tol)``.
    """
    cells = []
    for c in garden.crescents:
        if not c.vertical:
            raise CoefficientError("rasterization supports vertical geodesics only")
        x0 = c.a.real
        lo, hi = sorted((-c.a.imag, -c.b.imag))
        sh, ch = math.sinh(c.S), math.cosh(c.S)
        y_min, y_max = lo * math.exp(-c.S), hi * math.exp(c.S)
        m = max(1, math.ceil(math.log(y_max / y_min) / tol))
        ys = y_min * (y_max / y_min) ** (np.arange(m + 1) / m)

        def half_width(y):
            # |x - x0| <= y sinh S between the endpoints, caps are hyperbolic balls
            if lo <= y <= hi:
                return y * sh
            yc = lo if y < lo else hi
            # ball around -i*yc: Euclidean centre yc*cosh S, radius yc*sinh S
            d = (yc * sh) ** 2 - (y - yc * ch) ** 2
            return math.sqrt(d) if d > 0 else 0.0

        for a, b in zip(ys[:-1], ys[1:]):
            probe = np.linspace(a, b, 9)
            w = min(half_width(float(t)) for t in probe)
            # slivers thinner than tol in the hyperbolic metric stay within the defect
            if 2 * w / b >= tol:
                cells.append(Cell.rect(x0 - w, x0 + w, -b, -a))
    return PiecewiseCoefficient(tuple(cells), np.full(len(cells), complex(value)), "halfplane")
