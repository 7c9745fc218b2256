"""Searches for coefficients with large asymptotic variance, and k-dependence audits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .audit import AuditReport
from .coeff import Cell, GridSpec, NadicPeriodic, PiecewiseCoefficient
from .kernels import nadic_fourier_basis, periodic_transform, transform
from .neumann import NeumannSolution
from .spectrum import MeansSampler, dim_from_beta
from .variance import SpectrumEstimate, _fit_limit, circle_nodes, linear_fit, sigma2_cesaro, sigma2_circle

PI = math.pi
PHASES = np.exp(2j * PI * np.arange(16) / 16)
MODULI = np.array([0.25, 0.5, 0.75, 1.0])


@dataclass
class SearchConfig:
    n: int = 8
    cols: int = 8
    rows: int = 8
    iters: int = 500
    seed: int = 0
    inner_depth: int = 12
    final_depth: int = 20
    moduli: bool = False
    t0: float = 0.01
    start: str = "random"

    @property
    def cells(self) -> int:
        return self.cols * self.rows


@dataclass
class SearchState:
    """Cell layout, current values and the best witness found."""

    grid: GridSpec
    cells: tuple
    values: np.ndarray
    seed: int
    best_values: np.ndarray
    best_objective: float
    history: list = field(default_factory=list)
    depth_schedule: tuple = (12, 20)
    improved: bool = False

    def best_coefficient(self) -> PiecewiseCoefficient:
        return PiecewiseCoefficient(self.cells, self.best_values.copy(), "halfplane")


def base_cells(n: int, cols: int, rows: int) -> tuple:
    """Columns of equal width and rows of equal hyperbolic height on the base box."""
    ys = -np.geomspace(1.0, 1.0 / n, rows + 1)
    xs = np.linspace(0.0, 1.0, cols + 1)
    return tuple(Cell.rect(xs[i], xs[i + 1], ys[j], ys[j + 1])
                 for j in range(rows) for i in range(cols))


def cesaro_weights(freqs: np.ndarray, h: float) -> np.ndarray:
    """``int_h^1 4 y |d/dz e^{2 pi i f z}|^2 dy`` per frequency."""
    a = 2 * PI * freqs
    return (2 * a * h + 1) * np.exp(-2 * a * h) - (2 * a + 1) * np.exp(-2 * a)


def gram_matrix(cells, n: int, depth: int) -> np.ndarray:
    """Hermitian ``A`` with ``values^H A values`` the Cesaro average at ``h = 2^-depth``."""
    h = 2.0 ** -depth
    freqs, basis = nadic_fourier_basis(cells, n, h)
    w = cesaro_weights(freqs, h) / abs(math.log(h))
    wb = basis * w[:, None]
    # elementwise reduction keeps the result independent of BLAS threading
    A = np.sum(np.conj(basis)[:, :, None] * wb[:, None, :], axis=0)
    return 0.5 * (A + A.conj().T)


def _quad(A, v) -> float:
    return float(np.real(np.sum(np.conj(v) * np.sum(A * v[None, :], axis=1))))


def objective(mu: PiecewiseCoefficient, n: int, depth: int = 12) -> float:
    return _quad(gram_matrix(mu.cells, n, depth), mu.values)


def lower_bound_sigma2(config: SearchConfig):
    """Simulated annealing over per-cell phases of a periodized coefficient.

    Single-cell moves pick a value from a 16-point phase lattice (times a
    modulus lattice when ``config.moduli``); the inner objective is the
    Cesaro average at depth ``inner_depth``, the witness is re-measured by
    the fitted Cesaro estimator down to ``final_depth``.

    Returns ``(NadicPeriodic, SpectrumEstimate, SearchState)``.
    """
    if config.iters < 0:
        raise ValueError("iteration budget must be non-negative")
    rng = np.random.default_rng(config.seed)
    cells = base_cells(config.n, config.cols, config.rows)
    A = gram_matrix(cells, config.n, config.inner_depth)
    C = len(cells)
    if config.start == "zero":
        v = np.zeros(C, complex)
    elif config.start == "ones":
        v = np.ones(C, complex)
    else:
        v = PHASES[rng.integers(0, 16, C)]
    Av = np.sum(A * v[None, :], axis=1)
    cur = float(np.real(np.sum(np.conj(v) * Av)))
    best, best_v = cur, v.copy()
    history = [(0, cur)]
    improved = False
    diag = np.real(np.diag(A))
    cands = PHASES if not config.moduli else (PHASES[:, None] * MODULI[None, :]).ravel()
    for it in range(1, config.iters + 1):
        # heat-bath move: score every lattice value for one cell
        temp = config.t0 * max(cur, 1e-6) * (1.0 - (it - 1) / max(config.iters, 1))
        c = int(rng.integers(0, C))
        d = cands - v[c]
        delta = 2.0 * np.real(np.conj(d) * Av[c]) + np.abs(d) ** 2 * diag[c]
        if temp > 0:
            w = np.exp((delta - delta.max()) / temp)
            pick = int(np.searchsorted(np.cumsum(w) / w.sum(), rng.random()))
            pick = min(pick, len(cands) - 1)
        else:
            pick = int(np.argmax(delta))
        if d[pick] != 0:
            v = v.copy()
            v[c] = cands[pick]
            Av = Av + A[:, c] * d[pick]
            cur += float(delta[pick])
            if cur > best + 1e-15:
                best, best_v = cur, v.copy()
                improved = True
        history.append((it, best))
    # re-evaluate exactly to drop the drift of incremental updates
    best = _quad(A, best_v)
    state = SearchState(GridSpec(config.n), cells, v, config.seed, best_v, best, history,
                        (config.inner_depth, config.final_depth), improved)
    per = NadicPeriodic(state.best_coefficient(), config.n)
    est = sigma2_cesaro(periodic_transform(per, 2.0 ** -config.final_depth), 4, config.final_depth)
    est.extra.update({"inner_objective": best, "seed": config.seed, "iters": config.iters,
                      "n": config.n, "cells": C, "improved": improved,
                      "depth_schedule": [config.inner_depth, config.final_depth]})
    return per, est, state


# ------------------------------------------------------------- k dependence


def _solution(mu: PiecewiseCoefficient, k: float, t_phase: complex = 1.0, order: int = 3, q: int = 6):
    t = t_phase * k / mu.k
    return NeumannSolution(mu, t, order, q)


def _circle_samples(sol: NeumannSolution, depths):
    """Series terms on the circles ``R = 1 + 2^-j`` (shared across ``t``)."""
    out = []
    for j in depths:
        R = 1.0 + 2.0 ** -j
        nn = circle_nodes(j)
        z = R * np.exp(2j * PI * np.arange(nn) / nn)
        out.append((R, sol.terms(z)))
    return out


def _log_series(terms, t) -> np.ndarray:
    s = np.zeros_like(terms[0])
    for j in range(len(terms) - 1, -1, -1):
        s = s + t ** (j + 1) * terms[j]
    return np.log1p(s)


def _sigma2_from_circles(samples, fn, method) -> SpectrumEstimate:
    scales, raws = [], []
    for R, terms in samples:
        v = fn(terms)
        scales.append(R - 1.0)
        raws.append(R * float(np.mean(np.abs(v) ** 2)) / abs(math.log(R - 1.0)))
    return _fit_limit(scales, raws, method)


def sigma2_k(mu: PiecewiseCoefficient, k: float, depths=range(1, 7), order: int = 3,
             q: int = 6) -> SpectrumEstimate:
    """Circle estimator of the variance of ``log phi'`` for the coefficient ``k mu / |mu|``.

    ``depths`` should stay inside the scales the coefficient resolves.
    """
    if k == 0 or len(mu) == 0:
        return _fit_limit([2.0 ** -j for j in depths], [0.0] * len(list(depths)), "circle")
    sol = NeumannSolution(mu, 0.0, order, q)
    samples = _circle_samples(sol, depths)
    t = k / mu.k
    return _sigma2_from_circles(samples, lambda T: _log_series(T, t), "circle")


def u_curve(mu: PiecewiseCoefficient, ts, depths=range(1, 7), angles=(0.0,), order: int = 3,
            q: int = 6) -> dict:
    """``u(r)``: variance of ``log phi' / r`` for the coefficient ``r e^{ia} mu / |mu|``.

    ``u(0)`` is the variance of ``S mu / |mu|``. Returns rows ``(|t|, max over
    angles of u)`` with first and second divided differences as diagnostics.
    """
    depths = list(depths)
    if len(mu) == 0:
        rows = [(float(abs(t)), 0.0) for t in ts]
        return {"rows": rows, "u0": 0.0, "first_diff": [], "second_diff": []}
    sol = NeumannSolution(mu, 0.0, order, q)
    samples = _circle_samples(sol, depths)
    u0 = _sigma2_from_circles(samples, lambda T: T[0] / mu.k, "circle").value
    rows = []
    for r in ts:
        best = -np.inf
        for a in angles:
            t = r * np.exp(1j * a) / mu.k
            val = _sigma2_from_circles(samples, lambda T: _log_series(T, t) / r, "circle").value
            best = max(best, val)
        rows.append((float(r), float(best)))
    rr = np.array([r for r, _ in rows])
    uu = np.array([u for _, u in rows])
    d1 = np.diff(uu) / np.diff(rr) if rr.size > 1 else np.array([])
    d2 = np.diff(d1) / (0.5 * (rr[2:] - rr[:-2])) if rr.size > 2 else np.array([])
    return {"rows": rows, "u0": float(u0), "first_diff": d1.tolist(), "second_diff": d2.tolist()}


def expansion_audit(mus, ks, p: float = 1.0, scales=None, order: int = 3, q: int = 6,
                    exponent_floor: float = 1.7) -> AuditReport:
    """Dimension from the spectrum against ``1 + sigma^2 k^2`` over a ``k`` ladder.

    ``sigma^2`` is measured for ``S mu`` on the same circles. The residual
    ``|D - 1 - sigma^2 k^2|`` is fitted as a power of ``k``.
    """
    from .spectrum import ladder
    rep = AuditReport("expansion")
    scales = ladder(2.0 ** -5, 0.5, 16) if scales is None else scales
    for idx, mu in enumerate(mus):
        if len(mu) == 0:
            for k in ks:
                rep.check(f"mu{idx} k={k} dimension", 1.0, 1.0)
            continue
        s2 = sigma2_circle(transform(PiecewiseCoefficient(mu.cells, mu.values / mu.k, mu.domain), "S"),
                           1, 6).value
        dims, res = [], []
        for k in ks:
            sol = _solution(mu, k, order=order, q=q)
            from .neumann import log_derivative_field
            sampler = MeansSampler(log_derivative_field(sol), scales)
            d = dim_from_beta(sampler.beta).value
            dims.append(d)
            res.append(abs(d - 1.0 - s2 * k * k))
        rep.metrics[f"mu{idx}"] = {"sigma2": s2, "k": list(ks), "dimension": dims, "residual": res}
        mono = all(b >= a - 1e-4 for a, b in zip(dims[:-1], dims[1:]))
        rep.check(f"mu{idx} dimension monotone in k", float(mono), 1.0, kind="ge")
        good = [(k, r) for k, r in zip(ks, res) if r > 0]
        if len(good) >= 2:
            fit = linear_fit(np.log([k for k, _ in good]), np.log([r for _, r in good]))
            rep.check(f"mu{idx} residual exponent in k", fit["slope"], exponent_floor, kind="ge")
    return rep


def provenance(config: SearchConfig, est: SpectrumEstimate) -> dict:
    return {"config": asdict(config), "value": est.value, "residual": est.residual,
            "inner_objective": est.extra.get("inner_objective")}
