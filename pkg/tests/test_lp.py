import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linprog

from spinelab.lp import hull_max_min, lengthening_alternative, positive_combination, simplex

small = st.floats(-5, 5, allow_nan=False, allow_infinity=False).map(lambda v: round(v, 3))


@settings(max_examples=80, deadline=None)
@given(arrays(float, (3, 5), elements=small), arrays(float, 5, elements=small), arrays(float, 3, elements=small))
def test_simplex_matches_linprog(A, c, b):
    c = c + 0.0
    ours = simplex(c, A, b)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=[(0, None)] * 5, method="highs")
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
    assert ours.status == status
    if status == "optimal":
        assert ours.value == pytest.approx(ref.fun, abs=1e-7)
        assert np.allclose(A @ ours.x, b, atol=1e-7)
        assert (ours.x >= -1e-9).all()
    if status == "infeasible":
        # Farkas: y with A^T y <= 0 and b.y > 0 (either sign convention)
        y = ours.farkas
        s = np.sign(b @ y)
        assert s != 0
        assert (s * (A.T @ y) <= 1e-7).all()


@settings(max_examples=50, deadline=None)
@given(arrays(float, (4, 6), elements=small))
def test_lengthening_alternative_is_exclusive(G):
    if (np.abs(G).sum(axis=1) < 1e-6).any():
        return
    alt = lengthening_alternative(G)
    if alt.direction is not None:
        assert (G @ alt.direction >= 1 - 1e-7).all()
    else:
        assert alt.weights.min() >= 0 and alt.weights.sum() == pytest.approx(1)
        assert np.linalg.norm(G.T @ alt.weights) < 1e-8
        # dual route: no v with G v >= 1 according to linprog
        ref = linprog(np.zeros(6), A_ub=-G, b_ub=-np.ones(4), bounds=[(None, None)] * 6, method="highs")
        assert ref.status == 2


def test_positive_combination_regular_simplex():
    G = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [-1.0, -1.0, -1.0]])
    a, v, res = positive_combination(G)
    assert v is None and (a >= 1).all() and res < 1e-10
    a, v, res = positive_combination(G[:3])
    assert a is None
    gv = G[:3] @ v
    assert gv.max() <= 1e-9 and gv.sum() < 0


def test_hull_max_min_symmetric():
    G = np.array([[1.0, 0], [-0.5, np.sqrt(3) / 2], [-0.5, -np.sqrt(3) / 2]])
    res = hull_max_min(G)
    assert res.status == "optimal"
    a = res.x[:3]
    assert np.allclose(a, 1 / 3, atol=1e-9)
