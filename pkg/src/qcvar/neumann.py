"""Truncated Neumann series for principal solutions of the Beltrami equation.

With ``rho_1 = mu`` and ``rho_j = mu * T_{j-1}``, ``T_j = S rho_j``, the
principal solution of ``dbar phi = t mu d phi`` has

    phi'  = 1 + sum_j t^j T_j,        phi = z + sum_j t^j C rho_j.

``T_1`` is evaluated in closed form. Later densities live on per-cell
Gauss-Legendre nodes; their transforms use far-field quadrature plus, on
nearby cells, a closed-form constant part and an upsampled remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coeff import TWO_PI, Cell, CoefficientError, PiecewiseCoefficient
from .kernels import FieldEvaluator, _order_scale, cell_sum, kernel_integral
from .parallel import map_points, map_stacked

NEAR_FACTOR = 1.5


class ConvergenceError(ArithmeticError):
    """Series parameters outside the convergent range, or a failed continuation."""


def _gl01(q: int):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def _lagrange(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix ``L[i, j] = ell_j(x_i)`` of Lagrange basis polynomials."""
    x = np.asarray(x, float)
    out = np.ones((x.size, nodes.size))
    for j, xj in enumerate(nodes):
        for k, xk in enumerate(nodes):
            if k != j:
                out[:, j] *= (x - xk) / (xj - xk)
    return out


class CellQuadrature:
    """Tensor Gauss-Legendre nodes on every cell and near-field upsampling.

    Densities are arrays of shape ``(n_cells, q*q)`` holding node values in
    the parameter coordinates of each cell.
    """

    def __init__(self, mu: PiecewiseCoefficient, q: int = 8, upsample: int = 2):
        self.mu = mu
        self.q = q
        self.upsample = upsample
        x, w = _gl01(q)
        self.ref_x = x
        U, V = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        self.ref_u, self.ref_v, self.ref_w = U.ravel(), V.ravel(), W.ravel()
        # sub-cell nodes in reference coordinates and the interpolation onto them
        s = upsample
        fu, fv, fw = [], [], []
        for a in range(s):
            for b in range(s):
                fu.append((a + self.ref_u) / s)
                fv.append((b + self.ref_v) / s)
                fw.append(self.ref_w / s ** 2)
        self.fine_u, self.fine_v = np.concatenate(fu), np.concatenate(fv)
        self.fine_w = np.concatenate(fw)
        self.fine_interp = self.interp_matrix(self.fine_u, self.fine_v)
        nodes, weights, fnodes, fweights = [], [], [], []
        for c in mu.cells:
            z, wt = self._map(c, self.ref_u, self.ref_v, self.ref_w)
            nodes.append(z)
            weights.append(wt)
            z, wt = self._map(c, self.fine_u, self.fine_v, self.fine_w)
            fnodes.append(z)
            fweights.append(wt)
        self.nodes = np.array(nodes).reshape(len(mu), q * q)
        self.weights = np.array(weights).reshape(len(mu), q * q)
        self.fine_nodes = np.array(fnodes).reshape(len(mu), self.fine_w.size)
        self.fine_weights = np.array(fweights).reshape(len(mu), self.fine_w.size)
        self.centers = np.array([c.center for c in mu.cells])
        self.diams = np.array([c.diameter for c in mu.cells])

    @staticmethod
    def _map(cell: Cell, u, v, w):
        pu = cell.a0 + (cell.a1 - cell.a0) * u
        pv = cell.b0 + (cell.b1 - cell.b0) * v
        area = (cell.a1 - cell.a0) * (cell.b1 - cell.b0)
        return cell.to_complex(pu, pv), w * area * cell.jacobian(pu, pv)

    def interp_matrix(self, u, v) -> np.ndarray:
        lu, lv = _lagrange(self.ref_x, u), _lagrange(self.ref_x, v)
        return (lu[:, :, None] * lv[:, None, :]).reshape(np.size(u), -1)

    def reference_coords(self, cell: Cell, z):
        """Parameter coordinates of ``z`` clamped to the cell, scaled to ``[0,1]^2``."""
        pu, pv = cell.to_param(z)
        if cell.kind != "rect":
            span = cell.b1 - cell.b0
            over = pv - cell.b1
            # beyond the far edge: pick the nearer of the two angular edges
            pv = np.where(over > 0, np.where(over < TWO_PI - span - over, cell.b1, cell.b0), pv)
        u = np.clip((pu - cell.a0) / (cell.a1 - cell.a0), 0.0, 1.0)
        v = np.clip((pv - cell.b0) / (cell.b1 - cell.b0), 0.0, 1.0)
        return u, v

    def integrate(self, rho: np.ndarray, z, m: int) -> np.ndarray:
        """``int rho(zeta) (zeta - z)^-m dA`` (principal value on the support)."""
        z = np.asarray(z, complex).reshape(-1)
        out = np.zeros(z.shape, complex)
        for c, cell in enumerate(self.mu.cells):
            r = rho[c]
            if not np.any(r):
                continue
            near = np.abs(z - self.centers[c]) < NEAR_FACTOR * self.diams[c]
            far = ~near
            if np.any(far):
                zf = z[far]
                k = (self.nodes[c][None, :] - zf[:, None]) ** (-m)
                out[far] += np.sum((self.weights[c] * r)[None, :] * k, axis=1)
            if np.any(near):
                zn = z[near]
                u, v = self.reference_coords(cell, zn)
                ref = self.interp_matrix(u, v) @ r
                fine = self.fine_interp @ r
                d = self.fine_nodes[c][None, :] - zn[:, None]
                with np.errstate(divide="ignore", invalid="ignore"):
                    k = np.where(np.abs(d) > 1e-14 * self.diams[c], d ** (-m), 0.0)
                rem = np.sum(self.fine_weights[c][None, :] * (fine[None, :] - ref[:, None]) * k, axis=1)
                out[near] += ref * kernel_integral(cell, zn, m) + rem
        return out


@dataclass
class NeumannSolution:
    """Principal solution ``phi_t`` for the coefficient ``t * mu``.

    Parameters
    ----------
    mu : PiecewiseCoefficient
        Disk coefficient (support in the closed unit disk).
    t : complex
        Series parameter with ``|t| * k < 1``.
    order : int
        Number of series terms kept.
    q, upsample : int
        Per-cell Gauss-Legendre order and near-field sub-cell split.
    """

    mu: PiecewiseCoefficient
    t: complex
    order: int = 3
    q: int = 8
    upsample: int = 2
    quad: CellQuadrature = field(init=False, repr=False)
    densities: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.mu.domain != "disk":
            raise CoefficientError("the series solver expects a disk coefficient")
        if abs(self.t) * self.mu.k >= 1.0:
            raise ConvergenceError(f"|t| k = {abs(self.t) * self.mu.k:.3g} >= 1")
        self.quad = CellQuadrature(self.mu, self.q, self.upsample)
        vals = self.mu.values[:, None] * np.ones((1, self.q * self.q))
        dens = [vals]
        if self.order >= 2 and len(self.mu):
            nodes = self.quad.nodes.reshape(-1)
            term = cell_sum(self.mu, nodes, 2).reshape(vals.shape)
            dens.append(vals * term)
            for _ in range(3, self.order + 1):
                term = _order_scale(2) * self.quad.integrate(dens[-1], nodes, 2).reshape(vals.shape)
                dens.append(vals * term)
        self.densities = dens

    @property
    def k(self) -> float:
        return self.mu.k

    def _check(self, z):
        z = np.asarray(z, complex)
        if len(self.mu):
            inside = np.zeros(z.shape, bool)
            for c in self.mu.cells:
                inside |= c.contains(z)
            if np.any(inside):
                raise CoefficientError("evaluation point inside the coefficient support")
        return z

    def terms(self, z, m: int = 2) -> list:
        """``[T_1, ..., T_order]`` with kernel order ``m`` (2: value, 3: derivative...)."""
        z = self._check(z)
        if len(self.mu) == 0:
            return [np.zeros(z.shape, complex) for _ in range(self.order)]

        def run(w):
            out = [cell_sum(self.mu, w, m)]
            for rho in self.densities[1:]:
                out.append(_order_scale(m) * self.quad.integrate(rho, w, m))
            return np.stack(out)

        res = map_stacked(run, z)
        return [res[j].reshape(z.shape) for j in range(self.order)]

    def _series(self, z, m):
        tt = self.terms(z, m)
        total = np.zeros(np.shape(z), complex)
        for j in range(self.order - 1, -1, -1):
            total = total + self.t ** (j + 1) * tt[j]
        return total, tt

    def truncation_estimate(self, tt) -> np.ndarray:
        """Geometric tail bound from the sup-ratio of the last two terms."""
        last = np.abs(self.t ** self.order * tt[-1])
        if self.order == 1:
            ratio = abs(self.t) * self.k
        else:
            prev = np.max(np.abs(self.t ** (self.order - 1) * tt[-2]), initial=0.0)
            ratio = float(np.max(last, initial=0.0) / prev) if prev > 0 else 0.0
        ratio = min(ratio, 0.9)
        return last * ratio / (1.0 - ratio)


def phi_prime(sol: NeumannSolution, z):
    """``(phi_t'(z), truncation estimate)``."""
    total, tt = sol._series(z, 2)
    return 1.0 + total, sol.truncation_estimate(tt)


def phi_second(sol: NeumannSolution, z):
    return sol._series(z, 3)[0]


def phi_third(sol: NeumannSolution, z):
    return sol._series(z, 4)[0]


def _continued_log(sol: NeumannSolution, z, d1):
    """Principal log where safe, else continued along the outward ray."""
    out = np.log(d1)
    risky = np.abs(d1 - 1.0) >= 0.5
    for i in np.flatnonzero(risky.reshape(-1)):
        z0 = z.reshape(-1)[i]
        ray = z0 * np.geomspace(1.0, 1e3, 64)
        vals, _ = phi_prime(sol, ray)
        if np.any(np.abs(vals) < 1e-12):
            raise ConvergenceError("phi' vanishes along the continuation ray")
        ang = np.unwrap(np.angle(vals[::-1]))
        ang = ang - 2 * math.pi * round(ang[0] / (2 * math.pi))
        out.reshape(-1)[i] = complex(math.log(abs(vals[0])), ang[-1])
    return out


def log_phi_prime(sol: NeumannSolution, z):
    z = np.asarray(z, complex)
    d1, _ = phi_prime(sol, z)
    if np.any(np.abs(d1) < 1e-12):
        raise ConvergenceError("phi' vanishes")
    return _continued_log(sol, z, d1)


def nonlinearity(sol: NeumannSolution, z):
    """``phi''/phi'``."""
    d1, _ = phi_prime(sol, z)
    return phi_second(sol, z) / d1


def schwarzian(sol: NeumannSolution, z):
    """``n' - n^2 / 2`` with ``n = phi''/phi'``."""
    d1, _ = phi_prime(sol, z)
    d2, d3 = phi_second(sol, z), phi_third(sol, z)
    n = d2 / d1
    dn = d3 / d1 - n * n
    return dn - 0.5 * n * n


def log_derivative_field(sol: NeumannSolution) -> FieldEvaluator:
    """``log phi_t'`` on the exterior disk, with derivative ``n_phi``."""

    def value(w):
        return log_phi_prime(sol, w)

    def deriv(w):
        return nonlinearity(sol, w)

    def deriv2(w):
        d1, _ = phi_prime(sol, w)
        n = phi_second(sol, w) / d1
        return phi_third(sol, w) / d1 - n * n

    return FieldEvaluator(value, deriv, "disk", f"log phi'(t={sol.t})", deriv2)


def phi(sol: NeumannSolution, z):
    """``phi_t(z) = z + sum_j t^j C rho_j``."""
    z = sol._check(z)
    if len(sol.mu) == 0:
        return z.copy()

    def run(w):
        acc = sol.t * cell_sum(sol.mu, w, 1)
        for j, rho in enumerate(sol.densities[1:], start=2):
            acc = acc + sol.t ** j * _order_scale(1) * sol.quad.integrate(rho, w, 1)
        return w + acc

    return map_points(run, z)


# ---------------------------------------------------------------- Bloch norms


def bloch_sample(domain: str, depth: float = 8.0, density: int = 16,
                 x_range=(0.0, 1.0)) -> np.ndarray:
    """Hyperbolically equidistributed sample points.

    Layers at hyperbolic spacing ``1/density`` down to ``exp(-depth)`` from
    the boundary, with angular (or horizontal) spacing matched to the layer.
    """
    pts = []
    layers = np.arange(0.0, depth, 1.0 / density)
    for s in layers:
        h = math.exp(-s)
        if domain == "disk":
            r = 1.0 + h
            n = max(16, int(math.ceil(density * TWO_PI * r / h)))
            n = min(n, 4096)
            th = (np.arange(n) + 0.5 * (int(s * density) % 2)) * TWO_PI / n
            pts.append(r * np.exp(1j * th))
        elif domain == "halfplane":
            width = x_range[1] - x_range[0]
            n = min(max(4, int(math.ceil(density * width / h))), 4096)
            x = x_range[0] + (np.arange(n) + 0.5) * width / n
            pts.append(x + 1j * h)
        else:
            raise ValueError(f"unknown domain {domain!r}")
    return np.concatenate(pts)


def invariant_deriv(field_eval: FieldEvaluator, z, domain: str | None = None):
    """``2 y |g'|`` (half-plane) or ``(|z|^2 - 1) |g'|`` (exterior disk)."""
    domain = domain or field_eval.domain
    z = np.asarray(z, complex)
    d = np.abs(field_eval.deriv(z))
    if domain == "halfplane":
        return 2.0 * z.imag * d
    return (np.abs(z) ** 2 - 1.0) * d


@dataclass(frozen=True)
class BlochNorm:
    value: float
    samples: int
    argmax: complex


def bloch_norm(field_eval: FieldEvaluator, domain: str | None = None, depth: float = 8.0,
               density: int = 16, points=None, x_range=(0.0, 1.0)) -> BlochNorm:
    """Sampled lower estimate of the Bloch norm."""
    domain = domain or field_eval.domain
    z = bloch_sample(domain, depth, density, x_range) if points is None else np.asarray(points, complex)
    vals = invariant_deriv(field_eval, z, domain)
    i = int(np.argmax(vals))
    return BlochNorm(float(vals[i]), int(z.size), complex(z.reshape(-1)[i]))


def infinitesimal_gap_field(sol: NeumannSolution) -> FieldEvaluator:
    """``log phi_t' / t - S mu`` on the exterior disk."""
    t = sol.t
    mu = sol.mu

    def value(w):
        return log_phi_prime(sol, w) / t - cell_sum(mu, w, 2)

    def deriv(w):
        return nonlinearity(sol, w) / t - cell_sum(mu, w, 3)

    return FieldEvaluator(value, deriv, "disk", f"gap(t={t})")


def infinitesimal_gap(mu: PiecewiseCoefficient, t: complex, order: int = 3, q: int = 8,
                      depth: float = 5.0, density: int = 4, points=None) -> float:
    """Sampled Bloch norm of ``log phi_t' / t - S mu``."""
    if abs(t) == 0:
        raise ValueError("t must be nonzero")
    if len(mu) == 0:
        return 0.0
    sol = NeumannSolution(mu, t, order, q)
    return bloch_norm(infinitesimal_gap_field(sol), "disk", depth, density, points).value


# ---------------------------------------------------------------- tracing


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def trace_curve(sol: NeumannSolution, N: int, delta: float, check: bool = False,
                tol: float = 0.7) -> np.ndarray:
    """``phi_t((1 + delta) e^{2 pi i j / N})`` for ``j < N``.

    With ``check`` the traces at ``delta``, ``delta/2`` and ``delta/4`` are
    compared and a :class:`ConvergenceError` is raised unless the Hausdorff
    distances shrink by at least the factor ``tol``.
    """
    if N < 64:
        raise ValueError("N must be >= 64")
    if delta <= 0:
        raise ValueError("delta must be positive")
    circle = np.exp(2j * math.pi * np.arange(N) / N)
    curve = phi(sol, (1.0 + delta) * circle)
    if check:
        c2 = phi(sol, (1.0 + delta / 2) * circle)
        c4 = phi(sol, (1.0 + delta / 4) * circle)
        h1, h2 = hausdorff(curve, c2), hausdorff(c2, c4)
        if h1 > 0 and h2 > tol * h1:
            raise ConvergenceError(f"trace refinement ratio {h2 / h1:.3f} > {tol}")
    return curve


# ------------------------------------------------------------ test families


def layered_disk_coefficient(k: float, depth: int = 4, base: int = 16, seed: int = 0,
                             r_inner: float = 0.5, phases: str = "random") -> PiecewiseCoefficient:
    """Multiscale sector coefficient of modulus ``k`` inside the unit disk.

    Annulus ``l`` spans ``1 - (1 - r_inner) 2^-l`` to ``1 - (1 - r_inner) 2^-(l+1)``
    and is cut into ``base * 2^l`` sectors, so every cell has roughly unit
    hyperbolic size. Phases are uniform random (``"random"``) or aligned with
    the angle (``"rotating"``).
    """
    rng = np.random.default_rng(seed)
    cells, vals = [], []
    gap = 1.0 - r_inner
    for lev in range(depth):
        r0 = 1.0 - gap * 2.0 ** -lev
        r1 = 1.0 - gap * 2.0 ** -(lev + 1)
        m = base * 2 ** lev
        for i in range(m):
            t0, t1 = TWO_PI * i / m, TWO_PI * (i + 1) / m
            cells.append(Cell.sector(r0, r1, t0, t1))
            if phases == "random":
                ph = rng.uniform(0, TWO_PI)
            else:
                ph = -2.0 * 0.5 * (t0 + t1)
            vals.append(k * np.exp(1j * ph))
    return PiecewiseCoefficient(tuple(cells), np.array(vals), "disk")
