"""Acceptance criteria 1-15, one test each, with the stated tolerances and time budgets.

Every test prints a single ``criterion N: PASS/FAIL`` line with its headline
numbers, visible even under output capture.
"""

import json
import time

import pytest

from qcvar import suite as Q
from qcvar.cli import main
from qcvar.sparse import sparse_audit


@pytest.fixture
def announce(capsys):
    def emit(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def _timed(fn, **kwargs):
    t0 = time.perf_counter()
    rep = fn(**kwargs)
    return rep, time.perf_counter() - t0


def _failures(rep) -> str:
    bad = [f"{r.name} ({r.measured:.4g} vs {r.bound})" for r in rep.rows if not r.passed]
    return "; ".join(bad[:4])


def _check(announce, number, fn, budget, summary=lambda rep: "", **kwargs):
    rep, dt = _timed(fn, **kwargs)
    ok = rep.passed and dt < budget
    detail = f"{summary(rep)} time {dt:.1f}s/{budget}s"
    if not rep.passed:
        detail += f"  failing: {_failures(rep)}"
    announce(number, ok, detail)
    assert rep.passed, _failures(rep)
    assert dt < budget, f"runtime {dt:.1f}s over {budget}s"
    return rep


def _worst(rep, key=lambda r: r.measured):
    return max(key(r) for r in rep.rows)


@pytest.mark.slow
def test_c01_kernel_oracle(announce):
    _check(announce, 1, Q.kernel_oracle_audit, 30, lambda r: f"{r.metrics['pairs']} pairs, worst rel {_worst(r):.2e}",
           pairs=100, rtol=1e-8)


@pytest.mark.slow
def test_c02_sup_bound(announce):
    _check(announce, 2, Q.sup_bound_audit, 60, lambda r: f"max {_worst(r):.4f} <= 8/pi",
           coefficients=20, points=10_000)


@pytest.mark.slow
def test_c03_locality(announce):
    _check(announce, 3, Q.locality_audit, 60, lambda r: f"slope {r.rows[0].measured:.3f}")


@pytest.mark.slow
def test_c04_perturbation(announce):
    _check(announce, 4, Q.perturbation_audit, 120,
           lambda r: f"residual {r.rows[-1].measured:.3f}", ns=(4, 16, 256, 65536))


@pytest.mark.slow
def test_c05_bloch(announce):
    _check(announce, 5, Q.bloch_audit, 120, lambda r: f"{len(r.rows)} norms within bounds")


@pytest.mark.slow
def test_c06_infinitesimal(announce):
    _check(announce, 6, Q.infinitesimal_audit, 300, lambda r: f"{len(r.rows)} checks")


@pytest.mark.slow
def test_c07_hardy(announce):
    _check(announce, 7, Q.hardy_audit, 120, lambda r: f"{len(r.rows)} ratios near 0.25")


def test_c08_diffineq(announce):
    _check(announce, 8, Q.diffineq_audit, 1.0, lambda r: f"worst {_worst(r):.2e}")


@pytest.mark.slow
def test_c09_becker_pommerenke(announce):
    _check(announce, 9, Q.becker_pommerenke_audit, 600, lambda r: f"{len(r.rows)} (map, p) pairs")


@pytest.mark.slow
def test_c10_smirnov(announce):
    _check(announce, 10, Q.smirnov_audit, 900, lambda r: f"{len(r.rows)} checks")


@pytest.mark.slow
def test_c11_box_lemma(announce):
    _check(announce, 11, Q.box_consistency_audit, 300, lambda r: "spread and mean", n=256, boxes=20)


@pytest.mark.slow
def test_c12_tail(announce):
    _check(announce, 12, Q.tail_audit, 300, lambda r: f"{len(r.rows)} checks")


@pytest.mark.slow
def test_c13_sparse(announce):
    _check(announce, 13, sparse_audit, 300,
           lambda r: f"slope {r.metrics['r_sweep']['slope']:.3f}")


@pytest.mark.slow
def test_c14_search(announce):
    _check(announce, 14, Q.search_regression_audit, 600,
           lambda r: f"pinned {float.fromhex(Q.PINNED_SEARCH['value_hex']):.6f}")


@pytest.mark.slow
def test_c15_determinism(announce, tmp_path):
    blobs, codes = [], []
    for threads in (1, 8):
        out = tmp_path / f"t{threads}"
        codes.append(main(["audit-all", "--suite", "quick", "--threads", str(threads), "--out", str(out)]))
        blobs.append((out / "audit.json").read_bytes())
    same = blobs[0] == blobs[1]
    passed = json.loads(blobs[0])
    ok = same and codes == [0, 0]
    announce(15, ok, f"audit.json identical: {same}, quick audits passed {passed['passed']}/{passed['total']}")
    assert codes == [0, 0]
    assert same
