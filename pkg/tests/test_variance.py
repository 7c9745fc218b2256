import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcvar import coeff as C
from qcvar import kernels as K
from qcvar import variance as V


def synthetic(sigma2: float, c: float) -> K.FieldEvaluator:
    """Field whose line means are exactly ``sigma2 |log y| + c``."""
    zero = lambda z: np.zeros(np.shape(z), complex)
    return K.FieldEvaluator(zero, zero, "halfplane", "synthetic",
                            line_moments=lambda y: (sigma2 * abs(math.log(y)) + c, 0.0))


@given(st.floats(0.0, 2.0), st.floats(-1.0, 1.0))
def test_strip_fit_recovers_limit(s2, c):
    est = V.sigma2_strip(synthetic(s2, c), 4, 12)
    assert abs(est.value - s2) <= 1e-9 * max(1.0, s2)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linear_fit_exact_line(a, b):
    x = np.linspace(0, 1, 7)
    fit = V.linear_fit(x, a + b * x)
    assert abs(fit["slope"] - b) < 1e-9 and abs(fit["intercept"] - a) < 1e-9


def test_linear_fit_needs_two_points():
    with pytest.raises(ValueError):
        V.linear_fit([1.0], [2.0])


def test_zero_field_has_zero_variance():
    z = K.zero_field("halfplane")
    assert V.sigma2_strip(z, 4, 8).value == 0
    assert V.sigma2_cesaro(z, 4, 8).value == 0


@given(st.floats(0.1, 3.0))
def test_variance_is_quadratic_in_scale(t):
    per = C.NadicPeriodic(C.PiecewiseCoefficient((C.Cell.rect(0.0, 0.5, -1.0, -0.25),), np.array([0.5])), 4)
    fld = K.periodic_transform(per)
    a = V.sigma2_strip(fld, 4, 8).value
    b = V.sigma2_strip(fld.scaled(t), 4, 8).value
    assert math.isclose(b, t * t * a, rel_tol=1e-10)


def test_identical_coefficients_have_no_gap():
    mu1, _, box = V.perturbation_pair(16.0)
    assert V.perturbation_gap(mu1, mu1, box) == 0


def test_perturbation_gap_shrinks_with_n():
    gaps = []
    for n in (4.0, 64.0):
        mu1, mu2, box = V.perturbation_pair(n)
        gaps.append(V.perturbation_gap(mu1, mu2, box))
    assert gaps[1] < gaps[0]


def test_circle_mean_of_monomial():
    # |z^-2|^2 on |z| = R is R^-4
    f = lambda z: z ** -2
    g = K.FieldEvaluator(f, f, "disk", "monomial")
    assert math.isclose(V.circle_mean(g, 1.5, 64), 1.5 ** -4, rel_tol=1e-12)


def test_node_counts_grow():
    assert V.circle_nodes(10) > V.circle_nodes(4)
    assert V.line_nodes(1e-4, 4) >= 4e4
