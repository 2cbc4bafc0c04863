import numpy as np
import pytest

import stochproj as sp


def test_dirac_backward_projection_lands_on_the_mean():
    r = sp.project(sp.measure([2.0]), sp.measure([-1.0, 1.0]))
    assert r["cost"] == pytest.approx(4.0)
    assert r["projection"]["points"] == [[0.0]]
    assert abs(r["gap"]) <= 1e-6


def test_forward_projection_shifts_the_source():
    grid = sp.Grid.uniform(1, -2.0, 3.0, 21)
    r = sp.project(sp.measure([1.0]), sp.measure([-1.0, 1.0]), direction="forward", grid=grid)
    assert r["cost"] == pytest.approx(1.0)
    assert sorted(p[0] for p in r["projection"]["points"]) == pytest.approx([0.0, 2.0])


def test_convex_order_and_its_reversal():
    point, pair = sp.measure([0.0]), sp.measure([-1.0, 1.0])
    assert sp.check_order(point, pair)["holds"]
    cert = sp.check_order(pair, point)
    assert not cert["holds"]
    assert cert["separator"]["gap"] > 0


def test_w2_matches_the_sorted_coupling():
    a = sp.measure([0.0, 1.0])
    b = sp.measure([2.0, 5.0])
    cost, coupling = sp.w2_squared(a, b)
    assert cost == pytest.approx(0.5 * 4 + 0.5 * 16)
    assert np.allclose(coupling, [[0.5, 0.0], [0.0, 0.5]])


def test_measure_accessors():
    m = sp.measure([[0.0, 1.0], [2.0, 3.0]], [1.0, 3.0])
    assert len(m) == 2 and m.dim == 2
    assert m.weights == pytest.approx([0.25, 0.75])
    assert np.allclose(m.mean(), [1.5, 2.5])


def test_envelope_transform():
    grid = sp.Grid.uniform(1, -1.0, 1.0, 5)
    out = sp.transform(grid, [1.0, 0.0, 0.5, 0.0, 1.0], "envelope")
    assert out == pytest.approx([1.0, 0.0, 0.0, 0.0, 1.0], abs=1e-9)


def test_invalid_input_raises_value_error():
    with pytest.raises(ValueError):
        sp.measure([0.0, 1.0], [0.5, -0.5])
    with pytest.raises(ValueError):
        sp.project(sp.measure([0.0]), sp.measure([1.0]), direction="sideways")


def test_suite_csv_header():
    csv = sp.suite_csv(pairs=4, projections=2, transforms=2)
    assert csv.startswith("invariant,trials,passed,worst_residual,tolerance\n")
