import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcvar import coeff as C
from qcvar import sparse as P


def test_empty_coefficient_gives_zero():
    assert P.line_average(C.PiecewiseCoefficient.empty(), 1.0, R=4) == 0.0
    assert P.small_intersection_bound(C.PiecewiseCoefficient.empty(), 1.0) == (0.0, 0.0)


@given(st.floats(0.2, 5.0), st.floats(-3.0, 3.0))
def test_line_average_affine_invariant(a, b):
    mu = C.garden_to_coefficient(P.sweep_garden(4.0), 1.0, 0.05)
    ref = P.line_average(mu, 1.0, R=4.0)
    moved = P.line_average(mu.mapped(a, b), a, x0=b, length=a * P.line_length(1.0, 4.0))
    assert math.isclose(moved, ref, rel_tol=1e-8)


def test_line_must_be_in_upper_half_plane():
    with pytest.raises(C.CoefficientError):
        P.line_average(P.sweep_garden(4.0), -1.0, R=4)


def test_line_average_decays_in_R():
    vals = [P.line_average(P.sweep_garden(R), 1.0, R=R) for R in (4.0, 8.0)]
    assert vals[1] < vals[0]


@pytest.mark.parametrize("y", [0.5, 1.0, 2.0, 3.0])
def test_exact_intersection_bounds_raster(y):
    g = P.sweep_garden(6.0)
    exact = P.intersection_length(g, y)
    raster = P.intersection_length(C.garden_to_coefficient(g, 1.0, 0.05), y)
    assert raster <= exact * 1.0001 + 1e-12
    assert exact > 0


def test_union_length_merges_overlaps():
    assert P._union_length([(0, 2), (1, 3), (5, 6)]) == 4


@pytest.mark.parametrize("y", [0.5, 2.0])
def test_small_intersection_bound_holds(y):
    lhs, rhs = P.small_intersection_bound(C.garden_to_coefficient(P.sweep_garden(4.0), 1.0, 0.05), y)
    assert 0 < lhs <= rhs


def test_formula_limits():
    assert P.sparse_dim_formula(1.0, math.inf, 0.5, 1.0) == 1.0
    assert math.isclose(P.sparse_dim_formula(1.0, 4.0, 0.5, lambda s: 2.0), 1 + 2 * math.exp(-2) / 4)


def test_sweep_garden_separation():
    g = P.sweep_garden(8.0, extra=2)
    assert len(g.crescents) == 3
