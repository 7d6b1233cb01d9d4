import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize

from spinelab.errors import PreconditionFailed
from spinelab.flows import (
    FlowSample,
    FlowTrace,
    _pinched,
    cover_elements,
    curve_pool,
    fiber_sample,
    integrate_descent,
    min_norm_lengthening,
    petal_trace,
    thurston_flow,
)
from spinelab.hyperbolic import FNPoint
from spinelab.minima import LengthFunctional
from spinelab.words import unoriented_key


def _strictly_decreasing(trace):
    E = np.array([s.energy for s in trace.samples])
    return (np.diff(E) < 1e-12).all()


def test_descent_of_two_curves_pinches_their_boundary(six, bolza):
    F = LengthFunctional.equal(six.subset([0, 1]))
    tr = integrate_descent(bolza, F, t_max=80)
    assert tr.terminal == "pinched"
    assert [unoriented_key(w, 2) for w in tr.pinched_words] == [unoriented_key((1, 2, -1, -2), 2)]
    assert _strictly_decreasing(tr)
    assert tr.samples[-1].t == pytest.approx(63, abs=3)


def test_descent_of_filling_system_reaches_minimum(six, p6):
    x0 = FNPoint.from_vector(p6.vector + np.array([0.1, -0.05, 0.1, 0.05, 0.0, -0.1]))
    tr = integrate_descent(x0, LengthFunctional.equal(six), t_max=150)
    assert tr.terminal == "converged_to_minimum"
    assert _strictly_decreasing(tr)
    assert np.abs(tr.end.vector - p6.vector).max() < 1e-5


def test_petal_preconditions(six, bolza):
    with pytest.raises(PreconditionFailed):
        petal_trace(bolza, six[0], six, t_max=1)


def test_pinch_detector():
    hist = [np.array([1.0, 1.0 - 0.1 * k]) for k in range(10)] + [np.array([1.0, 0.04 - 0.001 * k]) for k in range(11)]
    assert _pinched(hist, 0.05, 10) == [1]
    assert _pinched(hist[:5], 0.05, 10) == []


@settings(max_examples=40, deadline=None)
@given(arrays(float, (3, 4), elements=st.floats(-3, 3).map(lambda v: round(v, 2))), st.integers(0, 10))
def test_min_norm_lengthening_matches_slsqp(G, _):
    if (np.linalg.norm(G, axis=1) < 0.1).any():
        return
    v = min_norm_lengthening(G)
    ref = minimize(lambda x: x @ x, np.ones(4), jac=lambda x: 2 * x, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": lambda x: G @ x - 1, "jac": lambda x: G}],
                   options={"ftol": 1e-12, "maxiter": 500})
    if v is None:
        # infeasible: no lengthening direction
        assert not ref.success or (G @ ref.x - 1).min() < -1e-6
    elif ref.success and (G @ ref.x - 1).min() > -1e-8:
        assert (G @ v >= 1 - 1e-8).all()
        assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(ref.x), rel=1e-5)


def test_cover_elements():
    L = np.array([3.0, 3.01, 3.5, 3.51, 4.0])
    els = cover_elements(L, 0.05)
    # 3.01 is within eps of the systole, so {0} alone is not an element
    assert [e.curves for e in els] == [(0, 1)]
    assert all(0 < e.weight < 1 for e in els)
    assert cover_elements(np.array([1.0, 1.0, 1.0]), 0.05)[-1].curves == (0, 1, 2)


def test_thurston_flow_is_monotone_and_reaches_the_spine(bolza):
    x0 = FNPoint.from_vector(np.r_[0.5, bolza.vector[1:]])
    tr = thurston_flow(x0, t_max=20)
    f = np.array([s.fsys for s in tr.samples])
    assert tr.terminal == "converged_to_spine"
    assert (np.diff(f) >= -1e-12).all()
    assert f[-1] > 2.5
    assert not tr.violations


def test_thurston_flow_at_bolza_stops_at_once(bolza):
    tr = thurston_flow(bolza, t_max=1)
    assert tr.terminal == "converged_to_spine" and len(tr.samples) == 1


def test_fiber_sample(p6, six):
    empty = fiber_sample(p6, six, rays=0)
    assert empty.rays == [] and empty.returns == []
    fs = fiber_sample(p6, six, rays=2, seed=1, t_max=3.0)
    assert len(fs.rays) == 2
    assert all(d >= -1e-9 for d in fs.fsys_drop)
    for tr in fs.returns:
        f = np.array([s.fsys for s in tr.samples])
        assert (np.diff(f) >= -1e-12).all()


def test_trace_csv_round_numbers(bolza):
    s = FlowSample(0.0, bolza.vector, np.array([1 / 3]), 1 / 3, 0.0)
    tr = FlowTrace([s], "budget_exhausted", {}, ["c"])
    head, row = tr.to_csv().splitlines()
    assert head == "t,x1,x2,x3,x4,x5,x6,c,fsys"
    assert row.endswith("0.333333333333,0.333333333333")


def test_pool_is_cached(bolza):
    assert curve_pool(bolza, 5.0) is curve_pool(bolza, 5.0)
