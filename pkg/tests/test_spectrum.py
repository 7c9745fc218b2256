import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcvar import kernels as K
from qcvar import spectrum as P


@given(st.floats(0.0, 10.0))
def test_diffineq_root(alpha):
    b = P.diffineq_exponent(alpha)
    assert b >= 0 and abs(b * b + b - alpha) <= 1e-12 * max(1.0, alpha)


@given(st.floats(0.0, 0.999))
def test_antisymmetrize_round_trip(k):
    assert abs(P.antisymmetrize(P.antisymmetrize_inverse(k)) - k) < 1e-12


def test_dim_from_quadratic_spectrum():
    est = P.dim_from_beta(lambda p: 0.1 * p * p, tol=1e-8)
    root = (1 - math.sqrt(1 - 0.4)) / 0.2
    assert abs(est.value - root) < 1e-7 and est.flag == "ok"


def test_dim_flat_when_no_growth():
    assert P.dim_from_beta(lambda p: 0.0).value == 1.0


def test_integral_means_constant_log():
    a = 0.3 - 0.2j
    const = lambda z: np.full(np.shape(z), a)
    fld = K.FieldEvaluator(const, const, "halfplane", "const")
    assert math.isclose(P.integral_means(fld, 1.5, 0.1), math.exp((1.5 * a).real), rel_tol=1e-12)
    assert P.integral_means(fld, 0, 0.1) == 1.0


def test_branch_jump_detected():
    jump = lambda z: np.where(np.real(z) < 0.5, 0.0, 4j)
    fld = K.FieldEvaluator(jump, jump, "halfplane", "jump")
    with pytest.raises(P.BranchError):
        P.sample_log(fld, 0.1, 16)


def test_circle_box_dimension():
    circle = np.exp(2j * np.pi * np.arange(4096) / 4096)
    assert abs(P.minkowski_dim(circle).value - 1.0) < 0.01


def test_square_box_dimension():
    # a fine raster path filling the unit square reads close to two
    rows = [np.linspace(0, 1, 200)[:: 1 if j % 2 == 0 else -1] + 1j * j / 199 for j in range(200)]
    zig = np.concatenate(rows)
    assert P.minkowski_dim(zig, closed=False).value > 1.7


def test_dimension_bounds():
    d = P.dimension_bounds(0.1, sigma2=0.5)
    assert d["smirnov"] == 1.01 and d["becker_pommerenke"] == 1.36
    with pytest.raises(ValueError):
        P.dimension_bounds(1.0)


def test_ladder_is_geometric():
    lad = P.ladder(1e-3, 1.0, 4)
    np.testing.assert_allclose(lad[:-1] / lad[1:], 10.0)
