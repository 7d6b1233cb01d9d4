import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinelab.errors import TrivialClass, ValidationError
from spinelab.words import (
    SurfacePresentation,
    cyclic_reduce,
    dehn_reduce,
    format_word,
    free_reduce,
    invert,
    min_rotation,
    normal_form,
    parse_word,
    reduce_word,
    unoriented_key,
)

letters = st.sampled_from([1, -1, 2, -2, 3, -3, 4, -4])
words = st.lists(letters, min_size=0, max_size=12).map(tuple)


def test_parse_forms_agree():
    assert parse_word("a1 b1 a1^-1") == (1, 2, -1)
    assert parse_word("a1b1A1") == (1, 2, -1)
    assert parse_word("b2⁻¹ a1") == (-4, 1)
    assert parse_word([1, -4]) == (1, -4)


@pytest.mark.parametrize("bad", ["c1", "a0", "a1 ^", "a3"])
def test_parse_rejects(bad):
    with pytest.raises(ValidationError):
        parse_word(bad, genus=2)


@given(words)
def test_format_parse_roundtrip(w):
    assert parse_word(format_word(w)) == w


@given(words)
def test_free_reduce_idempotent_and_reduced(w):
    r = free_reduce(w)
    assert free_reduce(r) == r
    assert all(a != -b for a, b in zip(r, r[1:]))


@given(words)
def test_invert_is_involution(w):
    assert invert(invert(w)) == w
    assert free_reduce(w + invert(w)) == ()


@given(words, st.integers(0, 11))
def test_min_rotation_ignores_rotation(w, k):
    w = cyclic_reduce(w)
    if not w:
        return
    k %= len(w)
    assert min_rotation(w[k:] + w[:k]) == min_rotation(w)


def test_relator_is_trivial():
    rel = SurfacePresentation(2).relator
    assert dehn_reduce(rel, 2) == ()
    with pytest.raises(TrivialClass):
        normal_form(rel, 2)
    with pytest.raises(ValidationError):
        SurfacePresentation(1)


@settings(max_examples=60)
@given(words.filter(lambda w: cyclic_reduce(w) != ()), st.integers(0, 15))
def test_normal_form_is_conjugacy_invariant(w, k):
    rel = SurfacePresentation(2).relator
    try:
        nf = normal_form(w, 2)
    except TrivialClass:
        return
    k %= len(rel)
    conj = rel[:k]
    assert normal_form(conj + w + invert(conj), 2) == nf


@settings(max_examples=60)
@given(words)
def test_unoriented_key_ignores_orientation(w):
    try:
        assert unoriented_key(w, 2) == unoriented_key(invert(w), 2)
    except TrivialClass:
        pass


def test_reduce_word_keeps_id():
    c = reduce_word("a1 a1^-1 b1", 2, id="x")
    assert c.word == (2,) and c.id == "x"
