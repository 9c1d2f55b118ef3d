import numpy as np
from hypothesis import given, settings, strategies as st

from limitmeasure.regions import Annulus, Ball, CircleShell, Union, describe

coords = st.floats(-3, 3)


@settings(max_examples=100, deadline=None)
@given(coords, coords)
def test_distance_zero_iff_contained(x, y):
    X = np.array([[x, y]])
    for r in (Ball((0, 0), 1.0), Annulus((0, 0), 1.0, 2.0), CircleShell((0, 0), 1.5, 0.1)):
        d = r.distance(X)[0]
        assert d >= 0.0
        assert (d == 0.0) == bool(r.contains(X)[0])


def test_shell_points_at_requested_distance():
    for r in (Ball((0.5, 0), 1.0), Annulus((0, 0), 1.0, 2.0), CircleShell((0, 0), 1.0, 0.0)):
        P = r.shell_points(0.2, 16)
        np.testing.assert_allclose(r.distance(P), 0.2, atol=1e-12)


def test_union_contains_parts():
    u = Union([Ball((1, 0), 0.3), Ball((-1, 0), 0.3)])
    assert u.contains(np.array([[1.0, 0.0], [-1.0, 0.1], [0.0, 0.0]])).tolist() == [True, True, False]
    assert "Union(" in describe(u)


def test_circle_has_zero_measure():
    assert CircleShell((0, 0), 1.0, 0.0).has_zero_measure
    assert not Ball((0, 0), 1.0).has_zero_measure
