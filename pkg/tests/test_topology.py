import itertools

import numpy as np
import pytest

from spinelab.errors import NotFilling, ValidationError
from spinelab.flows import curve_pool
from spinelab.geodesics import CurveRegistry, lift_word, same_class, surface_geometry
from spinelab.hyperbolic import FNPoint
from spinelab.topology import (
    CurveSystem,
    HorizonComplex,
    boundary_multicurve,
    curve_arrangement,
    horizon_subcomplex,
    intersection_number,
    is_filling,
    is_simple,
    nonfilling_chains,
    pair_data,
)
from spinelab.words import parse_word

# pairs of the six curves that meet (each exactly once)
SIX_MEETINGS = {(0, 1), (0, 5), (1, 4), (2, 3), (2, 4), (3, 5)}
SIX_TOPS = {
    (0, 1, 2, 3), (0, 1, 2, 5), (0, 1, 3, 4), (0, 2, 3, 4), (0, 2, 4, 5),
    (0, 3, 4, 5), (1, 2, 3, 5), (1, 2, 4, 5), (1, 3, 4, 5),
}


def _expected_six():
    M = np.zeros((6, 6), int)
    for i, j in SIX_MEETINGS:
        M[i, j] = M[j, i] = 1
    return M


def test_six_curve_intersections_at_bolza(six, bolza):
    assert np.array_equal(pair_data(six, bolza).intersections, _expected_six())


def test_intersections_do_not_depend_on_the_metric(six, p6, bolza, rng):
    # a topological invariant: recompute at unrelated metrics
    for x in [p6] + [FNPoint.from_vector(bolza.vector + 0.3 * rng.standard_normal(6)) for _ in range(3)]:
        assert np.array_equal(pair_data(six, x).intersections, _expected_six())


def test_bolza_systoles_meet_at_most_once(twelve, bolza):
    M = pair_data(twelve, bolza).intersections
    assert M.max() == 1
    assert (M.sum(axis=1) > 0).all()


def test_intersection_number_pairs(six, bolza):
    assert intersection_number(six[0], six[1], bolza) == 1
    assert intersection_number(six[0], six[2], bolza) == 0


def test_filling_six_and_euler_characteristic(six, bolza):
    assert is_filling(six, bolza)
    arr = curve_arrangement(six, bolza)
    assert arr.connected
    assert arr.euler_characteristic == 2 - 2 * six.genus
    assert all(f.is_disk for f in arr.faces)


def test_filling_against_a_curve_pool(six, bolza):
    """Dual route: a subset fills iff no simple curve avoids all its members."""
    pool = curve_pool(bolza, cutoff=6.0, simple=True)
    everything = CurveSystem.from_words(list(six.words) + pool.words, 2)
    I = pair_data(everything, bolza).intersections
    iso = pair_data(everything, bolza).isotopic
    n = len(six)
    for r in range(1, n + 1):
        for sub in itertools.combinations(range(n), r):
            fills = is_filling(six.subset(sub), bolza)
            avoiders = [
                k for k in range(n, len(everything))
                if not any(I[i, k] for i in sub) and not any((i, k) in iso for i in sub)
            ]
            if fills:
                assert not avoiders, sub
            elif r >= 2:
                # a nonfilling subset leaves a short boundary curve untouched
                assert avoiders or any(I[i, j] == 0 for i, j in itertools.combinations(sub, 2)), sub


def test_maximal_nonfilling_tops(six, bolza):
    tops = {tuple(ch[-1]) for ch in nonfilling_chains(six, bolza)}
    assert tops == SIX_TOPS


def test_boundary_multicurve_disjoint_from_subset(six, bolza):
    sub = six.subset([0, 1, 2, 3])
    m = boundary_multicurve(sub, bolza)
    assert len(m) >= 1
    words = list(sub.words) + [c.word for c in m]
    I = pair_data(CurveSystem.from_words(words, 2), bolza).intersections
    assert I[:4, 4:].sum() == 0
    assert boundary_multicurve(six, bolza).components == ()


def test_horizon_complex_counts(six, bolza):
    H = horizon_subcomplex(six, bolza)
    assert len(H.vertices) == 44
    assert len(H.simplices) == 254
    assert H.dimension <= 3 * six.genus - 4
    assert H.is_face_closed() and H.is_inclusion_ordered()
    assert HorizonComplex.from_dict(H.to_dict()) == H


def test_horizon_needs_filling(six, bolza):
    with pytest.raises(NotFilling):
        horizon_subcomplex(six.subset([0, 1, 2]), bolza)


def test_simple_and_non_simple(bolza):
    assert is_simple(parse_word("a1 b1"), bolza)
    assert is_simple(parse_word("a1 a1 b1"), bolza)
    assert not is_simple(parse_word("a1 a1 b1 b1"), bolza)
    with pytest.raises(ValidationError):
        pair_data(CurveSystem.from_words(["a1 a1 b1 b1", "a2"], 2), bolza)


def test_registry_identifies_conjugates(bolza):
    geom = surface_geometry(bolza)
    a = lift_word(geom, parse_word("a2 b2 a1"))
    b = lift_word(geom, parse_word("b1 a2 b2 a1 b1^-1"))
    assert same_class(geom, a, b)
    reg = CurveRegistry(geom)
    k = reg.register(a, "x")
    assert reg.lookup(b) == k


def test_curve_system_validation():
    with pytest.raises(ValidationError):
        CurveSystem.from_words(["a1", "b1"], 2, intersection_matrix=np.array([[0, 2], [1, 0]]))
    with pytest.raises(ValidationError):
        CurveSystem.from_words(["a1", "b1"], 2, intersection_matrix=np.array([[0, 2], [2, 0]]), candidate_systole=True)
