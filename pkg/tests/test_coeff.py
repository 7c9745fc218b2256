import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcvar import coeff as C

finite = st.floats(-5, 5, allow_nan=False)


@st.composite
def rects(draw):
    x0 = draw(st.floats(-3, 3))
    y1 = -draw(st.floats(0.01, 2))
    return C.Cell.rect(x0, x0 + draw(st.floats(0.05, 2)), y1 - draw(st.floats(0.05, 2)), y1)


@st.composite
def coefficients(draw):
    cells = draw(st.lists(rects(), min_size=1, max_size=4))
    vals = [draw(st.floats(0, 0.99)) * np.exp(1j * draw(st.floats(0, 6.28))) for _ in cells]
    return C.PiecewiseCoefficient(tuple(cells), np.array(vals), "halfplane")


def test_rect_rejects_axis_crossing():
    with pytest.raises(C.CoefficientError):
        C.Cell.rect(0, 1, -1, 1)


def test_sector_span_checked():
    with pytest.raises(C.CoefficientError):
        C.Cell.sector(0.5, 1.0, 0.0, 7.0)


@given(coefficients())
def test_json_round_trip(mu):
    back = C.PiecewiseCoefficient.from_dict(mu.to_dict())
    assert back.cells == mu.cells
    np.testing.assert_array_equal(back.values, mu.values)


def test_malformed_json_rejected():
    with pytest.raises(C.CoefficientError):
        C.PiecewiseCoefficient.from_dict({"cells": [{"kind": "rect"}], "domain": "halfplane"})


@given(rects(), st.floats(0.1, 10), st.floats(-5, 5))
def test_mapped_cell_scales_area(cell, a, b):
    m = cell.mapped(a, b)
    assert math.isclose(m.area, a * a * cell.area, rel_tol=1e-12)


def test_sector_param_round_trip():
    c = C.Cell.sector(0.5, 1.0, 5.5, 7.0)
    z = 0.7 * np.exp(1j * 6.5)
    u, v = c.to_param(z)
    assert c.contains(z)
    assert abs(c.to_complex(u, v) - z) < 1e-14


def test_nadic_grid_tiles_base_interval():
    boxes = C.make_nadic_grid(C.GridSpec(4, 0, 2, 0, 0))
    assert len(boxes) == 1 + 4 + 16
    for k in range(3):
        level = [b for b in boxes if math.isclose(b.y_top, 4.0 ** -k)]
        assert math.isclose(sum(b.x_max - b.x_min for b in level), 1.0)


def test_hatted_strip_tiles_exactly():
    boxes = C.hatted_strip_tiling(4, 0.3, 0.0, 2.0)
    # the boxes cover the strip [0, 2] x [0.3/4, 0.3] with no overlap
    area = sum((b.x_max - b.x_min) * (b.y_top - b.y_bottom) for b in boxes)
    assert math.isclose(area, 2.0 * (0.3 - 0.3 / 4), rel_tol=1e-12)


def test_periodize_copies_values():
    base = C.PiecewiseCoefficient((C.Cell.rect(0.0, 0.5, -1.0, -0.5),), np.array([0.3j]))
    box = C.BoxSpec(0.0, 1.0, 1.0, 4)
    per = C.periodize(base, box, C.GridSpec(4, 0, 1, 0, 1))
    # the copy in the level-1 box [1/4, 1/2] x [1/16, 1/4] sits at the affine image
    assert per.evaluate(np.array([0.3 - 0.2j]))[0] == 0.3j
    assert per.evaluate(np.array([1.2 - 0.7j]))[0] == 0.3j


def test_exp_maps_round_trip_moduli():
    mu = C.PiecewiseCoefficient((C.Cell.rect(0.1, 0.4, -0.5, -0.2),), np.array([0.6]), "halfplane")
    disk = C.pushforward_exp(mu)
    back = C.pullback_exp(disk)
    z = np.array([0.25 - 0.3j])
    assert abs(abs(back.evaluate(z)[0]) - 0.6) < 1e-12
    assert abs(disk.k - 0.6) < 1e-12


def test_restrict_strip():
    mu = C.PiecewiseCoefficient((C.Cell.rect(0, 1, -2, -0.1),), np.array([0.5]))
    cut = C.restrict_strip(mu, 1.0)
    assert len(cut) == 1 and math.isclose(cut.cells[0].b0, -1.0)
    assert len(C.restrict_strip(mu, 0.0)) == 0


def test_garden_separation_enforced():
    with pytest.raises(C.SeparationError):
        C.vertical_garden([0.0, 0.5], 0.5, 2.0, 1.0, 4.0)
    g = C.vertical_garden([0.0, 200.0], 0.5, 2.0, 1.0, 4.0)
    assert len(g.crescents) == 2


@given(st.floats(0.1, 2), st.floats(0.5, 3))
def test_hyperbolic_distance_scale_invariant(y, a):
    z, w = -0.3 - 1j * y, 0.8 - 2j * y
    assert math.isclose(float(C.hyperbolic_distance(z, w)),
                        float(C.hyperbolic_distance(a * z, a * w)), rel_tol=1e-10)


def test_rasterized_crescent_inside_neighbourhood():
    g = C.vertical_garden([0.0], 0.5, 2.0, 1.0, 4.0)
    mu = C.garden_to_coefficient(g, 1.0, 0.05)
    pts = np.array([c.center for c in mu.cells])
    core = g.crescents[0].geodesic_points(513)
    d = C.hyperbolic_distance(pts[:, None], core[None, :]).min(axis=1)
    assert np.all(d <= 1.0 + 1e-9)
