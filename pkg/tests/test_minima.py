import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinelab.errors import InHull, NotFilling, ValidationError
from spinelab.hyperbolic import FNPoint, length_jacobian
from spinelab.minima import (
    GradientFrame,
    LengthFunctional,
    certify_critical_point,
    classify_balance,
    classify_gradients,
    eutactic_test,
    joint_lengthening_direction,
    length_gradient,
    locus_project,
    min_membership,
    minimize_length_functional,
    nearest_face_from_gradients,
    numerical_rank,
    wolpert_twist_derivatives,
)
from spinelab.topology import CurveSystem
from spinelab.words import reduce_word

# frozen from the minimiser (see scripts/derive_bolza.py); closed forms 2 arccosh 2 and 2 arccosh 17
P6_LENGTH = 2.6339157938496336
P6_SEPARATING = 7.050988696156344


@pytest.mark.parametrize("word", ["b1", "a2 b2 a1", "a1 b1^-1 a1^-1 a2^-1", "a1 b1 a2"])
def test_richardson_gradient_matches_complex_step(word, bolza):
    c = reduce_word(word)
    rep = length_gradient(c, bolza)
    _, J = length_jacobian([c.word], bolza.vector)
    assert np.allclose(rep.gradient, J[0], atol=1e-7)
    assert rep.richardson_gap < 1e-7 * max(1.0, np.abs(rep.gradient).max())


@pytest.mark.parametrize("word", ["b1", "a2 b2", "a2 b2 a1", "a1 b1^-1 a1^-1 b2"])
def test_wolpert_twist_derivatives(word, bolza):
    c = reduce_word(word)
    rep = length_gradient(c, bolza, scheme="twist_checked")
    assert rep.wolpert_gap < 1e-4
    assert np.allclose(wolpert_twist_derivatives(c, bolza), rep.gradient[3:], atol=1e-4)


def test_unknown_scheme(bolza):
    with pytest.raises(ValidationError):
        length_gradient(reduce_word("a1"), bolza, scheme="forward")


def test_six_curve_frame_at_p6(six, p6):
    F = GradientFrame.at(six, p6)
    assert F.rank == 3
    assert np.allclose(F.singular_values[:3], [1.732, 1.488, 0.672], atol=2e-3)
    # the complement consists of pure twist directions
    null = np.linalg.svd(F.gradients)[2][3:]
    assert np.abs(null[:, :3]).max() < 1e-8


def test_minimiser_reaches_p6(six, bolza, p6):
    res = minimize_length_functional(LengthFunctional.equal(six), bolza)
    assert res.converged
    assert np.abs(res.minimizer.vector - p6.vector).max() < 1e-5
    assert res.value == pytest.approx(6 * P6_LENGTH, abs=1e-8)


def test_minimiser_refuses_nonfilling(six, bolza):
    with pytest.raises(NotFilling):
        minimize_length_functional(LengthFunctional.equal(six.subset([0, 1])), bolza)


def test_functional_rejects_weights(six):
    with pytest.raises(ValidationError):
        LengthFunctional(six, (1, 1, 1, 1, 1, 0))
    with pytest.raises(ValidationError):
        LengthFunctional(six, (1, 1))


def test_certificates(bolza, p6):
    for x, count, rank in ((bolza, 12, 6), (p6, 6, 3)):
        cert = certify_critical_point(x)
        assert cert.eutactic and (cert.positive_combination > 0).all()
        assert len(cert.systole_set) == count and cert.index == rank
    off = FNPoint.from_vector(p6.vector + np.array([0.05, 0, 0, 0, 0, 0]))
    cert = certify_critical_point(off)
    assert not cert.eutactic
    G = GradientFrame.at(cert.systole_set.curves, off).gradients
    assert (G @ cert.improving_direction > 0).all()


def test_farkas_at_p6(six, p6):
    res = joint_lengthening_direction(six, p6)
    assert not res.feasible
    assert res.residual < 1e-8
    assert np.isclose(res.farkas_weights.sum(), 1) and (res.farkas_weights >= 0).all()


def test_nonfilling_always_lengthens(six, bolza):
    res = joint_lengthening_direction(six.subset([0, 1, 2]), bolza)
    assert res.feasible
    G = GradientFrame.at(six.subset([0, 1, 2]), bolza).gradients
    assert (G @ res.direction >= 1 - 1e-9).all()


def test_min_membership(six, p6, bolza):
    assert min_membership(six, p6) == "interior"
    ok, w = eutactic_test(six, p6)
    assert ok
    assert min_membership(six.subset([0, 1, 2]), bolza) == "outside"


def test_locus_projection_and_balance(six, bolza):
    x0 = FNPoint.from_vector(bolza.vector + np.array([0.03, -0.02, 0.0, 0.01, 0.0, 0.0]))
    pt = locus_project(x0, six.subset([0, 1, 2]))
    assert pt.residual < 1e-9
    rep = classify_balance(pt)
    assert rep.classification in {"balanced", "semi_balanced", "unbalanced"}


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10_000))
def test_regular_simplex_is_balanced(n, seed):
    rng = np.random.default_rng(seed)
    # vertices of a regular simplex centred at the origin, rotated at random
    E = np.eye(n) - 1.0 / n
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    G = E @ Q
    label, v, a, _ = classify_gradients(G)
    assert label == "balanced"
    assert numerical_rank(G) == n - 1


def test_nearest_face():
    G = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert nearest_face_from_gradients(G, np.array([1.0, -0.5])) == (0,)
    assert nearest_face_from_gradients(G, np.array([1.0, 0.2])) == (0, 1)
    assert nearest_face_from_gradients(G, np.array([1.0, 1.0])) == (0, 1)
    with pytest.raises(InHull):
        nearest_face_from_gradients(np.array([[1.0, 0], [-1, 1], [-1, -1]]), np.array([0.0, 0.0]))
