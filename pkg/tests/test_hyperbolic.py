import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinelab.errors import EllipticOrParabolic, ValidationError
from spinelab.hyperbolic import (
    FNPoint,
    axis_endpoints,
    build_fuchsian,
    fn_generators,
    geodesic_length,
    length_jacobian,
    lengths_of,
    mobius,
    pants_curves,
    trace_length,
    word_matrix,
)
from spinelab.words import parse_word, reduce_word

points = st.tuples(
    st.floats(0.4, 5.0), st.floats(0.4, 5.0), st.floats(0.4, 8.0),
    st.floats(-3.0, 3.0), st.floats(-3.0, 3.0), st.floats(-4.0, 4.0),
).map(lambda v: FNPoint.from_vector(v))


@settings(max_examples=40, deadline=None)
@given(points)
def test_group_relation_and_unimodular(x):
    G = build_fuchsian(x)
    assert G.relator_residual < 1e-8 * max(1.0, np.abs(G.generator_matrices).max() ** 8)
    assert np.allclose(np.linalg.det(G.generator_matrices), 1.0)


@settings(max_examples=40, deadline=None)
@given(points)
def test_pants_lengths_are_coordinates(x):
    L = [geodesic_length(c, x).length for c in pants_curves()]
    assert np.allclose(L, x.lengths, rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(points)
def test_fricke_trace_identity(x):
    gens = fn_generators(x.vector)
    A, B = gens[0], gens[1]
    lhs = np.trace(A @ B) + np.trace(A @ np.linalg.inv(B))
    assert lhs == pytest.approx(np.trace(A) * np.trace(B), rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(points, st.floats(-2.0, 2.0))
def test_twist_of_a1_leaves_the_second_handle_alone(x, dt):
    words = [parse_word(w) for w in ("a2", "b2", "a2 b2", "a1")]
    v = x.vector.copy()
    w = v.copy()
    w[3] += dt
    assert np.allclose(lengths_of(words, v), lengths_of(words, w), rtol=1e-9)


def test_batched_lengths_match_single(bolza, rng):
    words = [parse_word(w) for w in ("a1", "b1 a2", "a1 b1^-1 a1^-1 a2^-1")]
    X = bolza.vector + 0.1 * rng.standard_normal((5, 6))
    batched = lengths_of(words, X)
    single = np.array([[geodesic_length(reduce_word(w), FNPoint.from_vector(x)).length for w in words] for x in X])
    assert batched.shape == (5, 3)
    assert np.allclose(batched, single, rtol=1e-11)


def test_complex_step_matches_central_differences(bolza):
    words = [parse_word(w) for w in ("b1", "a2 b2 a1", "a1 b1^-1 a1^-1 b2")]
    vals, J = length_jacobian(words, bolza.vector)
    h = 1e-6
    fd = np.array([(lengths_of(words, bolza.vector + h * e) - lengths_of(words, bolza.vector - h * e)) / (2 * h) for e in np.eye(6)]).T
    assert np.allclose(J, fd, atol=1e-7)
    assert np.allclose(vals, lengths_of(words, bolza.vector))


def test_trace_length_inverts_cosh():
    assert trace_length(2 * np.cosh(1.5)) == pytest.approx(3.0)
    assert trace_length(-2 * np.cosh(1.5)) == pytest.approx(3.0)


def test_axis_endpoints_are_fixed():
    g = np.array([[2.0, 1.0], [1.0, 1.0]])
    for z in axis_endpoints(g):
        assert mobius(g, z) == pytest.approx(z)


def test_rejections():
    with pytest.raises(ValidationError):
        FNPoint((1.0, -1.0, 1.0), (0, 0, 0))
    with pytest.raises(ValidationError):
        FNPoint((1.0, 1.0), (0, 0))
    with pytest.raises(NotImplementedError):
        fn_generators(np.ones(12))
    with pytest.raises(EllipticOrParabolic):
        axis_endpoints(np.eye(2))


def test_word_matrix_inverse(bolza):
    gens = fn_generators(bolza.vector)
    w = parse_word("a1 b2 a2^-1")
    prod = word_matrix(w, gens) @ word_matrix(tuple(-x for x in reversed(w)), gens)
    assert np.allclose(prod, np.eye(2))
