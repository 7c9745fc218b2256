import math

import numpy as np
import pytest
from scipy.special import polygamma
from hypothesis import given, settings, strategies as st

from qcvar import coeff as C
from qcvar import kernels as K
from qcvar.suite import _quad_kernel, random_halfplane_coefficient

DISK = C.Cell.sector(0.0, 1.0, 0.0, 2 * math.pi)


def test_cauchy_of_disk():
    # -(1/pi) int_D (zeta - z)^-1 dA is 1/z outside and conj(z) inside
    assert abs(K.cauchy_cell(DISK, 2.0 + 1.0j) - 1 / (2.0 + 1.0j)) < 1e-13
    assert abs(K.cauchy_cell(DISK, 0.3 + 0.2j) - (0.3 - 0.2j)) < 1e-13


def test_beurling_of_disk():
    z = 1.5 - 0.7j
    assert abs(K.beurling_cell(DISK, z) + 1 / z ** 2) < 1e-13
    assert abs(K.beurling_cell(DISK, 0.2 + 0.1j)) < 1e-13


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_rect_and_sector_against_quadrature(m):
    for cell in (C.Cell.rect(-0.3, 0.4, -1.2, -0.5), C.Cell.sector(0.4, 0.9, 0.5, 2.0)):
        z = complex(cell.center) + 1.7 * cell.diameter
        ref = _quad_kernel(cell, z, m)
        assert abs(K.kernel_integral(cell, z, m) - ref) <= 1e-10 * abs(ref)


def test_boundary_point_rejected():
    with pytest.raises(K.SingularLocationError):
        K.kernel_integral(C.Cell.rect(0, 1, -1, -0.5), 0.5 - 0.5j, 2)


@given(st.floats(-0.9, 0.9), st.floats(0.05, 1.5))
def test_split_cell_additivity(cut, y):
    full = C.Cell.rect(-1.0, 1.0, -1.0, -0.2)
    left, right = C.Cell.rect(-1.0, cut, -1.0, -0.2), C.Cell.rect(cut, 1.0, -1.0, -0.2)
    z = 0.3 + 1j * y
    for m in (1, 2, 3):
        a = K.kernel_integral(full, z, m)
        b = K.kernel_integral(left, z, m) + K.kernel_integral(right, z, m)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@given(st.floats(-2, 2), st.floats(0.1, 2))
def test_derivative_orders_are_consistent(x, y):
    # d/dz of the order-m transform is the order-(m+1) transform
    cell = C.Cell.rect(-0.5, 0.5, -1.0, -0.3)
    z, h = complex(x, y), 1e-5
    for m in (1, 2, 3):
        fd = (K._order_scale(m) * (K.kernel_integral(cell, z + h, m) - K.kernel_integral(cell, z - h, m))) / (2 * h)
        exact = K._order_scale(m + 1) * K.kernel_integral(cell, z, m + 1)
        assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


def test_interior_principal_value_matches_complement():
    # inside a cell, S(chi_cell) = S(chi_big) - S(chi_big minus cell) with the disk value 0
    inner = C.Cell.sector(0.3, 0.6, 0.2, 1.4)
    z = 0.45 * np.exp(0.8j)
    ring = [C.Cell.sector(0.0, 0.3, 0.0, 2 * math.pi), C.Cell.sector(0.3, 0.6, 1.4, 0.2 + 2 * math.pi),
            C.Cell.sector(0.6, 1.0, 0.0, 2 * math.pi)]
    outside = sum(K.beurling_cell(c, z) for c in ring)
    assert abs(K.beurling_cell(inner, z) + outside) < 1e-11


@settings(max_examples=5)
@given(st.floats(0.0, 1.0), st.floats(0.05, 1.0))
def test_periodic_kernel_matches_lattice_sum(x, y):
    cell = C.Cell.rect(0.1, 0.6, -0.8, -0.2)
    z = complex(x, y)

    def direct(m, N):
        return sum(K.kernel_integral(cell.mapped(1.0, j), z, m) for j in range(-N, N + 1))

    for m in (2, 3):
        per = K.periodic_kernel_integral(cell, z, m)
        ref = direct(m, 400)
        if m == 2:
            # far copies each contribute about area / j^2
            ref = ref + 2 * cell.area * polygamma(1, 401)
        assert abs(ref - per) <= 1e-6 * max(1.0, abs(per))


def test_zero_coefficient_transform_is_zero():
    fld = K.transform(C.PiecewiseCoefficient.empty(), "S")
    assert np.all(fld.value(np.array([1j, 2 + 1j])) == 0)


@given(st.integers(0, 10_000))
def test_normalized_derivative_bound(seed):
    rng = np.random.default_rng(seed)
    mu = random_halfplane_coefficient(rng, cells=6)
    z = rng.uniform(-3, 3, 200) + 1j * np.exp(rng.uniform(-6, 1, 200))
    assert np.max(np.abs(K.normalized_deriv(mu, z))) <= 8 / math.pi + 1e-8


def test_aligned_coefficient_approaches_bound():
    mu = K.aligned_outside_coefficient(0.0, 1.0, 0.05)
    val = abs(K.normalized_deriv(mu, np.array([1j]))[0])
    assert 0.9 * 8 / math.pi < val <= 8 / math.pi


@given(st.floats(0.5, 4.0), st.floats(-2, 2))
def test_normalized_derivative_affine_invariant(a, b):
    mu = C.PiecewiseCoefficient((C.Cell.rect(0, 1, -1, -0.2),), np.array([0.7j]))
    z = np.array([0.4 + 0.5j])
    g1 = K.normalized_deriv(mu, z)[0]
    g2 = K.normalized_deriv(mu.mapped(a, b), a * z + b)[0]
    assert abs(g1 - g2) < 1e-10


def test_periodic_fourier_matches_level_sum():
    base = C.PiecewiseCoefficient((C.Cell.rect(0.0, 0.5, -1.0, -0.5), C.Cell.rect(0.5, 1.0, -0.5, -0.25)),
                                  np.array([0.8, -0.6j]))
    per = C.NadicPeriodic(base, 4)
    z = np.array([0.3 + 0.05j, 0.7 + 0.3j])
    a = K.periodic_transform(per).deriv(z)
    b = K.periodic_fourier_field(per).deriv(z)
    np.testing.assert_allclose(a, b, rtol=1e-8)


def test_locality_gap_decreases():
    mu = K.aligned_outside_coefficient(0.0, 1.0, 1.0)
    gaps = [K.locality_gap(mu, 0.0, 1.0, L) for L in (1.0, 2.0, 3.0)]
    assert gaps[0] > gaps[1] > gaps[2]
