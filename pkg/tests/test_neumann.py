import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcvar import coeff as C
from qcvar import neumann as N


def annulus(c: complex, pieces: int = 8) -> C.PiecewiseCoefficient:
    step = 2 * math.pi / pieces
    cells = tuple(C.Cell.sector(0.5, 1.0, j * step, (j + 1) * step) for j in range(pieces))
    return C.PiecewiseCoefficient(cells, np.full(pieces, c, complex), "disk")


@pytest.mark.parametrize("z", [1.5, 2.0 + 1.0j, -1.2j])
def test_annulus_first_two_terms(z):
    # S(chi_annulus) is 1/(4 z^2) inside the annulus and -3/(4 z^2) outside the disk,
    # so the second term outside is S(c * c/(4 zeta^2) chi_annulus) = -9 c^2 / (16 z^4)
    c = 0.4 * np.exp(0.3j)
    sol = N.NeumannSolution(annulus(c), 0.0, order=2, q=8)
    t1, t2 = sol.terms(np.array([z]))
    assert abs(t1[0] + 3 * c / (4 * z ** 2)) <= 1e-12
    assert abs(t2[0] + 9 * c ** 2 / (16 * z ** 4)) <= 1e-7 * abs(c ** 2 / z ** 4)


def test_terms_do_not_depend_on_t():
    mu = annulus(0.5)
    z = np.array([1.3 + 0.4j])
    a = N.NeumannSolution(mu, 0.0, order=3, q=6).terms(z)
    b = N.NeumannSolution(mu, 1.5, order=3, q=6).terms(z)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-14)


def test_rejects_divergent_parameter():
    with pytest.raises(N.ConvergenceError):
        N.NeumannSolution(annulus(0.5), 2.0)


def test_rejects_halfplane_coefficient():
    mu = C.PiecewiseCoefficient((C.Cell.rect(0, 1, -1, -0.5),), np.array([0.3]))
    with pytest.raises(C.CoefficientError):
        N.NeumannSolution(mu, 0.5)


def test_rejects_points_in_support():
    sol = N.NeumannSolution(annulus(0.5), 0.5, order=1)
    with pytest.raises(C.CoefficientError):
        sol.terms(np.array([0.75 + 0.0j]))


def test_zero_coefficient_is_identity():
    sol = N.NeumannSolution(C.PiecewiseCoefficient.empty("disk"), 0.9)
    z = np.array([1.5, 2j])
    np.testing.assert_array_equal(N.log_phi_prime(sol, z), 0)


@given(st.floats(0.05, 0.9), st.floats(0.0, 6.28))
def test_series_shrinks_geometrically(r, a):
    # the j-th term is bounded by k^j up to the constant of the first term
    mu = annulus(0.6)
    sol = N.NeumannSolution(mu, 0.0, order=3, q=6)
    z = np.array([(1.0 + r) * np.exp(1j * a)])
    tt = [abs(x[0]) for x in sol.terms(z)]
    assert tt[1] <= tt[0] and tt[2] <= tt[1]


def test_schwarzian_vanishes_for_zero_coefficient():
    sol = N.NeumannSolution(C.PiecewiseCoefficient.empty("disk"), 0.5)
    assert np.all(N.schwarzian(sol, np.array([3.0 + 0j])) == 0)


def test_bloch_sample_domains():
    pts = N.bloch_sample("halfplane", depth=3, density=2)
    assert np.all(pts.imag > 0) and np.all((pts.real >= 0) & (pts.real <= 1))
    disk = N.bloch_sample("disk", depth=3, density=2)
    assert np.all(np.abs(disk) > 1)
    with pytest.raises(ValueError):
        N.bloch_sample("sphere")


def test_hausdorff_distance():
    a = np.exp(2j * np.pi * np.arange(64) / 64)
    assert N.hausdorff(a, a) == 0
    assert math.isclose(N.hausdorff(a, 1.1 * a), 0.1, rel_tol=1e-12)
