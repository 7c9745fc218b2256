"""Command-line interface: every subcommand writes CSV/JSON, figures and a run manifest."""

from __future__ import annotations

import hashlib
from importlib import metadata
import json
import platform
import shutil
import sys
import time
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import report as RP
from .coeff import CoefficientError, Garden, NadicPeriodic, PiecewiseCoefficient

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class RunContext:
    """Output directory, seed and manifest bookkeeping for one invocation."""

    def __init__(self, command: str, out: str, force: bool, threads: int | None, seed: int, params: dict):
        from .parallel import get_threads, set_threads

        set_threads(threads)
        self.command = command
        self.seed = seed
        self.params = params
        self.inputs: dict = {}
        self.outputs: list = []
        self.t0 = time.perf_counter()
        self.threads = get_threads()
        self.dir = Path(out)
        if self.dir.exists() and any(self.dir.iterdir()):
            if not force:
                raise FileExistsError(f"output directory {self.dir} is not empty; pass --force")
            shutil.rmtree(self.dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    def read_input(self, path: str) -> dict:
        raw = Path(path).read_bytes()
        self.inputs[str(path)] = hashlib.sha256(raw).hexdigest()
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CoefficientError(f"malformed JSON in {path}: {exc}") from exc

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.outputs.append(name)
        return p

    def json(self, name: str, data: dict) -> Path:
        return RP.write_json(self.path(name), data)

    def csv(self, name: str, header, rows) -> Path:
        return RP.write_csv(self.path(name), header, rows)

    def finish(self) -> None:
        digest = hashlib.sha256(json.dumps({"command": self.command, "params": self.params,
                                            "inputs": self.inputs}, sort_keys=True,
                                           default=str).encode()).hexdigest()
        files = {n: hashlib.sha256((self.dir / n).read_bytes()).hexdigest() for n in self.outputs}
        import matplotlib
        import scipy

        RP.write_json(self.dir / "manifest.json", {
            "command": self.command, "argv": sys.argv[1:], "params": self.params,
            "inputs": self.inputs, "inputs_digest": digest, "seed": self.seed,
            "threads": self.threads, "outputs": files,
            "versions": {"qcvar": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__,
                         "matplotlib": matplotlib.__version__, "click": metadata.version("click")},
            "wall_time_s": time.perf_counter() - self.t0})


def common(fn):
    fn = click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")(fn)
    fn = click.option("--threads", type=click.IntRange(min=1), default=None,
                      help="Worker threads (default: QCVAR_THREADS or logical cores).")(fn)
    fn = click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None,
                      help="Output directory (default: qcvar-out/<command>).")(fn)
    return fn


def _ctx(name, out, force, threads, seed, params) -> RunContext:
    return RunContext(name, out or f"qcvar-out/{name}", force, threads, seed, params)


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from exc


def _load_map(ctx: RunContext, coeff: str | None, k: float, seed: int, depth: int, base: int):
    """Disk coefficient from a file, or the layered family."""
    from .neumann import layered_disk_coefficient

    if coeff:
        mu = PiecewiseCoefficient.from_dict(ctx.read_input(coeff))
        if mu.domain != "disk":
            raise CoefficientError("map commands need a disk coefficient")
        return mu
    return layered_disk_coefficient(k, depth=depth, base=base, seed=seed)


def map_options(fn):
    fn = click.option("--base", type=int, default=16, show_default=True, help="Sectors in the first annulus.")(fn)
    fn = click.option("--depth", type=int, default=4, show_default=True, help="Annuli in the layered map.")(fn)
    fn = click.option("--k", "k", type=float, default=0.3, show_default=True,
                      help="Sup norm of the layered coefficient.")(fn)
    fn = click.option("--coeff", type=click.Path(exists=True, dir_okay=False), default=None,
                      help="Disk coefficient JSON (overrides the layered family).")(fn)
    fn = click.option("--q", type=int, default=6, show_default=True, help="Gauss nodes per cell side.")(fn)
    return fn


@click.group()
@click.version_option(__version__)
def cli():
    """Beltrami coefficients, Beurling transforms, asymptotic variance and dimension audits."""


@cli.command()
@click.option("--coeff", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--which", type=click.Choice(["S", "S#", "S'", "C"]), default="S", show_default=True)
@click.option("--grid", default="-1,1,0.05,1,41,20", show_default=True,
              help="x0,x1,y0,y1,nx,ny for points x+iy (y>0); disk coefficients use xi = exp(-2 pi i w).")
@common
def transform(coeff, which, grid, out, force, threads, seed):
    """Evaluate a singular-integral transform of a coefficient on a grid."""
    from .kernels import transform as tr

    ctx = _ctx("transform", out, force, threads, seed, {"which": which, "grid": grid})
    mu = PiecewiseCoefficient.from_dict(ctx.read_input(coeff))
    g = _floats(grid)
    if len(g) != 6:
        raise click.BadParameter("grid needs six numbers")
    x = np.linspace(g[0], g[1], int(g[4]))
    y = np.geomspace(g[2], g[3], int(g[5]))
    w = (x[None, :] + 1j * y[:, None]).ravel()
    z = np.exp(-2j * np.pi * w) if mu.domain == "disk" else w
    fld = tr(mu, which)
    v, d = fld.value(z), fld.deriv(z)
    ctx.csv("transform.csv", ["re_z", "im_z", "re_value", "im_value", "re_deriv", "im_deriv"],
            [(a.real, a.imag, b.real, b.imag, c.real, c.imag) for a, b, c in zip(z, v, d)])
    ctx.json("transform.json", {"which": which, "points": int(z.size),
                                "max_abs_value": float(np.max(np.abs(v))) if v.size else 0.0})
    ctx.finish()


@cli.command()
@click.option("--map", "map_file", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Coefficient JSON.")
@click.option("--periodic", type=int, default=None,
              help="Treat a half-plane coefficient as the base box of an n-adic periodization.")
@click.option("--method", type=click.Choice(["circle", "strip", "cesaro"]), default=None)
@click.option("--jmin", type=int, default=4, show_default=True)
@click.option("--jmax", type=int, default=20, show_default=True)
@click.option("--t", "t", type=float, default=None,
              help="Use log phi' of the solution for t*mu instead of S mu (disk coefficients).")
@common
def variance(map_file, periodic, method, jmin, jmax, t, out, force, threads, seed):
    """Asymptotic variance of the Beurling transform of a coefficient."""
    from .kernels import disk_from_periodic, periodic_transform, transform as tr, zero_field
    from .variance import sigma2_cesaro, sigma2_circle, sigma2_strip

    ctx = _ctx("variance", out, force, threads, seed,
               {"periodic": periodic, "method": method, "jmin": jmin, "jmax": jmax, "t": t})
    mu = PiecewiseCoefficient.from_dict(ctx.read_input(map_file))
    if periodic:
        if mu.domain != "halfplane":
            raise CoefficientError("--periodic needs a half-plane coefficient")
        fld = periodic_transform(NadicPeriodic(mu, periodic))
        method = method or "cesaro"
        if method == "circle":
            fld = disk_from_periodic(fld)
    elif mu.domain == "disk":
        method = method or "circle"
        if method != "circle":
            raise CoefficientError("disk coefficients use the circle estimator")
        if t is not None and len(mu):
            from .neumann import NeumannSolution, log_derivative_field
            fld = log_derivative_field(NeumannSolution(mu, t, 3, 6))
        else:
            fld = tr(mu, "S") if len(mu) else zero_field("disk")
    else:
        if len(mu):
            raise CoefficientError("half-plane coefficients need --periodic n")
        fld, method = zero_field("halfplane"), method or "cesaro"
    fn = {"circle": sigma2_circle, "strip": sigma2_strip, "cesaro": sigma2_cesaro}[method]
    est = fn(fld, jmin, jmax)
    ctx.json("variance.json", est.to_dict())
    ctx.csv("variance_series.csv", ["scale", "raw"], est.scale_series)
    RP.variance_figure(ctx.path("variance.png"), est)
    click.echo(f"sigma2 = {est.value:.6g} ({method}, residual {est.residual:.3g})")
    ctx.finish()


@cli.command()
@click.option("--n", type=int, default=256, show_default=True)
@click.option("--boxes", type=int, default=20, show_default=True)
@click.option("--coeff", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Base-box coefficient JSON (default: random phases from --seed).")
@common
def boxaudit(n, boxes, coeff, out, force, threads, seed):
    """Box averages of a periodized coefficient against its Cesaro variance."""
    from .coeff import GridSpec
    from .suite import random_periodic
    from .variance import box_lemma_audit

    ctx = _ctx("boxaudit", out, force, threads, seed, {"n": n, "boxes": boxes})
    if coeff:
        per = NadicPeriodic(PiecewiseCoefficient.from_dict(ctx.read_input(coeff)), n)
    else:
        per = random_periodic(np.random.default_rng(seed), n=n, cols=8, rows=8)
    rep = box_lemma_audit(per, GridSpec(n, 0, 0, 0, boxes - 1))
    ctx.json("boxaudit.json", rep.to_dict())
    RP.box_figure(ctx.path("boxaudit.png"), rep.metrics["averages"], rep.metrics.get("sigma2_cesaro"))
    _echo_report(rep)
    ctx.finish()


@cli.command()
@map_options
@click.option("--p", "ps", default="-1,0.5,1,2", show_default=True, help="Exponents.")
@click.option("--scales", default="0.03125,0.5,16", show_default=True, help="lo,hi,count of the y ladder.")
@common
def spectrum(coeff, k, depth, base, q, ps, scales, out, force, threads, seed):
    """Integral means, fitted growth exponents and the spectrum dimension of a Neumann map."""
    from .neumann import NeumannSolution, log_derivative_field
    from .spectrum import MeansSampler, beta_estimate, dim_from_beta, ladder

    ctx = _ctx("spectrum", out, force, threads, seed,
               {"k": k, "depth": depth, "base": base, "q": q, "p": ps, "scales": scales})
    mu = _load_map(ctx, coeff, k, seed, depth, base)
    sc = _floats(scales)
    sol = NeumannSolution(mu, 1.0, 3, q)
    sampler = MeansSampler(log_derivative_field(sol), ladder(sc[0], sc[1], int(sc[2])))
    series, betas, rows = {}, {}, []
    for p in _floats(ps):
        s = sampler.series(p)
        series[p] = s
        est = beta_estimate(s)
        betas[p] = est.value
        rows.extend((p, y, v) for y, v in zip(s.scales, s.values))
    dim = dim_from_beta(sampler.beta)
    ctx.csv("means.csv", ["p", "y", "I_p"], rows)
    ctx.json("spectrum.json", {"k": mu.k, "beta": {str(p): b for p, b in betas.items()},
                               "dim_from_beta": dim.value, "dim_flag": dim.flag})
    RP.spectrum_figure(ctx.path("spectrum.png"), series, betas)
    click.echo(f"dimension from spectrum = {dim.value:.6f} ({dim.flag})")
    ctx.finish()


@cli.command()
@map_options
@click.option("--N", "N", type=int, default=2048, show_default=True, help="Boundary samples.")
@click.option("--delta", type=float, default=2.0 ** -6, show_default=True, help="Radial offset.")
@common
def trace(coeff, k, depth, base, q, N, delta, out, force, threads, seed):
    """Trace the image of the unit circle and estimate its box-counting dimension."""
    from .neumann import NeumannSolution, trace_curve
    from .spectrum import minkowski_dim

    ctx = _ctx("trace", out, force, threads, seed,
               {"k": k, "depth": depth, "base": base, "q": q, "N": N, "delta": delta})
    mu = _load_map(ctx, coeff, k, seed, depth, base)
    curve = trace_curve(NeumannSolution(mu, 1.0, 3, q), N, delta)
    est = minkowski_dim(curve)
    ctx.csv("curve.csv", ["re", "im"], [(c.real, c.imag) for c in curve])
    ctx.json("trace.json", {"k": mu.k, "minkowski_dim": est.value, "boxes": est.scale_series,
                            "r2": est.fit["r2"]})
    RP.curve_figure(ctx.path("curve.png"), curve)
    click.echo(f"box-counting dimension = {est.value:.6f}")
    ctx.finish()


@cli.command()
@click.option("--n", type=int, default=8, show_default=True)
@click.option("--cols", type=int, default=8, show_default=True)
@click.option("--rows", type=int, default=8, show_default=True)
@click.option("--iters", type=int, default=500, show_default=True)
@click.option("--moduli", is_flag=True, help="Also search over a modulus lattice.")
@click.option("--inner-depth", type=int, default=12, show_default=True)
@click.option("--final-depth", type=int, default=20, show_default=True)
@common
def search(n, cols, rows, iters, moduli, inner_depth, final_depth, out, force, threads, seed):
    """Annealing search for a periodized coefficient with large variance."""
    from .search import SearchConfig, lower_bound_sigma2, provenance

    cfg = SearchConfig(n=n, cols=cols, rows=rows, iters=iters, seed=seed, inner_depth=inner_depth,
                       final_depth=final_depth, moduli=moduli)
    ctx = _ctx("search", out, force, threads, seed, asdict(cfg))
    per, est, state = lower_bound_sigma2(cfg)
    ctx.json("search.json", {**provenance(cfg, est), "value_hex": est.value.hex(),
                             "estimate": est.to_dict()})
    ctx.json("witness.json", per.base.to_dict())
    ctx.csv("history.csv", ["iteration", "best"], state.history)
    RP.history_figure(ctx.path("history.png"), state.history)
    click.echo(f"sigma2 lower bound = {est.value:.6f} ({est.value.hex()})")
    ctx.finish()


@cli.command()
@click.option("--garden", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Garden JSON; its line average is reported alongside the sweep.")
@click.option("--R-sweep", "r_sweep", default="4,6,8,10", show_default=True)
@click.option("--S", "S", type=float, default=1.0, show_default=True, help="Crescent thickness.")
@click.option("--y0", type=float, default=1.0, show_default=True, help="Line height.")
@click.option("--trace", "do_trace", is_flag=True, help="Trace the R=8 sweep map at t=0.25.")
@common
def sparse(garden, r_sweep, S, y0, do_trace, out, force, threads, seed):
    """Line averages over crescent gardens and the fitted decay in R."""
    from . import sparse as P

    Rs = _floats(r_sweep)
    ctx = _ctx("sparse", out, force, threads, seed, {"R": Rs, "S": S, "y0": y0, "trace": do_trace})
    sw = P.r_sweep(Rs, S, y0)
    ctx.csv("sparse.csv", ["R", "line_average", "fitted_slope"], [(R, v, sw["slope"]) for R, v in sw["rows"]])
    data = {"slope": sw["slope"], "r2": sw["r2"], "C": sw["C"], "rows": sw["rows"]}
    if garden:
        g = Garden.from_dict(ctx.read_input(garden))
        data["garden"] = {"R": g.R, "line_average": P.line_average(g, y0, g.R),
                          "intersection_length": P.intersection_length(g, y0)}
    if do_trace:
        tr = P.sparse_trace(P.sweep_garden(8.0, S, y0), 0.25)
        tr["formula"] = P.sparse_dim_formula(S, 8.0, 0.25, sw["C"])
        data["trace"] = tr
    ctx.json("sparse.json", data)
    RP.decay_figure(ctx.path("sparse.png"), sw["rows"], sw["slope"])
    click.echo(f"fitted slope = {sw['slope']:.4f}")
    ctx.finish()


@cli.command()
@click.option("--k", "k", type=float, required=True)
@click.option("--sigma2", type=float, default=None, help="Variance for the expansion estimate.")
@common
def dims(k, sigma2, out, force, threads, seed):
    """Closed-form dimension bounds for k-quasicircles."""
    from .spectrum import dimension_bounds

    ctx = _ctx("dims", out, force, threads, seed, {"k": k, "sigma2": sigma2})
    b = dimension_bounds(k, sigma2)
    b = {key: (round(v, 12) if isinstance(v, float) else v) for key, v in b.items()}
    ctx.json("dims.json", b)
    click.echo(json.dumps({key: b[key] for key in ("smirnov", "becker_pommerenke", "expansion")}))
    ctx.finish()


def _echo_report(rep) -> None:
    for row in rep.rows:
        bound = "" if row.bound is None else f" vs {row.bound:.6g}"
        click.echo(f"  [{'PASS' if row.passed else 'FAIL'}] {rep.name}: {row.name} = {row.measured:.6g}{bound}")


@cli.command("audit-all")
@click.option("--suite", type=click.Choice(["desk", "quick"]), default="desk", show_default=True)
@click.option("--only", default=None, help="Comma-separated audit names.")
@common
def audit_all(suite, only, out, force, threads, seed):
    """Run every audit of a suite and print a pass/fail table with operation coverage."""
    from .suite import run_suite

    names = [s.strip() for s in only.split(",")] if only else None
    ctx = _ctx("audit-all", out, force, threads, seed, {"suite": suite, "only": names})
    reports = run_suite(suite, names, progress=lambda key: click.echo(f"running {key}", err=True))
    for rep in reports:
        _echo_report(rep)
    cov = next((r for r in reports if r.name == "operation coverage"), None)
    if cov is not None:
        click.echo(f"coverage: {cov.metrics['covered']}/{cov.metrics['total']} operations")
    passed = sum(r.passed for r in reports)
    click.echo(f"audits passed: {passed}/{len(reports)}")
    ctx.json("audit.json", {"suite": suite, "passed": passed, "total": len(reports),
                            "reports": [r.to_dict() for r in reports]})
    RP.audit_figure(ctx.path("audit.png"), reports)
    ctx.finish()


def main(argv=None) -> int:
    """Entry point with the documented exit codes."""
    from .kernels import SingularLocationError
    from .neumann import ConvergenceError
    from .spectrum import BranchError

    try:
        cli.main(args=argv, prog_name="qcvar", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return EXIT_VALIDATION
    except (ConvergenceError, BranchError) as exc:
        click.echo(f"numerical failure: {type(exc).__name__}: {exc}", err=True)
        return EXIT_NUMERICAL
    except (CoefficientError, SingularLocationError, FileExistsError, ValueError) as exc:
        click.echo(f"validation error: {exc}", err=True)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
