"""Deterministic CSV/JSON writers and matplotlib figures for command outputs."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import SCHEMA_VERSION  # noqa: E402


def _plain(obj):
    """Make numpy and complex values JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def write_json(path: Path, data: dict) -> Path:
    payload = {"schema_version": SCHEMA_VERSION}
    payload.update(_plain(data))
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["# schema_version", SCHEMA_VERSION])
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def _save(fig, path: Path) -> Path:
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=110, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def variance_figure(path: Path, estimate) -> Path:
    scales = np.array([s for s, _ in estimate.scale_series])
    raws = np.array([r for _, r in estimate.scale_series])
    x = 1.0 / np.abs(np.log(scales))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(x, raws, "o", label="normalized means")
    xx = np.linspace(0.0, x.max(), 50)
    ax.plot(xx, estimate.value + estimate.fit["slope"] * xx, "-", label=f"fit, limit {estimate.value:.4g}")
    ax.set_xlabel("1 / |log scale|")
    ax.set_ylabel("raw variance")
    ax.legend()
    return _save(fig, path)


def spectrum_figure(path: Path, series_by_p: dict, betas: dict) -> Path:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.5))
    for p, s in series_by_p.items():
        a1.plot(np.log(1.0 / np.asarray(s.scales)), np.log(s.values), "o-", ms=3, label=f"p={p}")
    a1.set_xlabel("log(1/y)")
    a1.set_ylabel("log I_p")
    a1.legend(fontsize=7)
    ps = list(betas)
    a2.plot(ps, [betas[p] for p in ps], "s-")
    a2.set_xlabel("p")
    a2.set_ylabel("fitted growth exponent")
    return _save(fig, path)


def curve_figure(path: Path, curve) -> Path:
    c = np.append(curve, curve[:1])
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(c.real, c.imag, "-", lw=0.6)
    ax.set_aspect("equal")
    ax.set_title("traced boundary")
    return _save(fig, path)


def history_figure(path: Path, history) -> Path:
    it = [h[0] for h in history]
    val = [h[1] for h in history]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(it, val, "-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("best inner objective")
    return _save(fig, path)


def decay_figure(path: Path, rows, slope: float) -> Path:
    R = np.array([r for r, _ in rows])
    v = np.array([x for _, x in rows])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(R, v, "o", label="line average")
    ax.semilogy(R, v[0] * np.exp(slope * (R - R[0])), "--", label=f"slope {slope:.3f}")
    ax.set_xlabel("R")
    ax.legend()
    return _save(fig, path)


def box_figure(path: Path, averages, sigma2) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(range(len(averages)), averages, "o", label="box averages")
    if sigma2 is not None:
        ax.axhline(sigma2, color="k", ls="--", label="Cesaro variance")
    ax.set_xlabel("box")
    ax.legend()
    return _save(fig, path)


def audit_figure(path: Path, reports) -> Path:
    names, ratios, colors = [], [], []
    for rep in reports:
        for row in rep.rows:
            if row.bound is None or row.bound == 0:
                continue
            names.append(f"{rep.name}: {row.name}"[:60])
            ratios.append(row.measured / row.bound)
            colors.append("tab:green" if row.passed else "tab:red")
    fig, ax = plt.subplots(figsize=(7, max(3.0, 0.16 * len(names))))
    ax.barh(range(len(names)), ratios, color=colors)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=5)
    ax.axvline(1.0, color="k", lw=0.8)
    ax.set_xlabel("measured / bound")
    return _save(fig, path)
