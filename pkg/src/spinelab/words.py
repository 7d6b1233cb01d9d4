"""Word calculus in the fundamental group of a closed surface.

Letters are nonzero integers: ``2i-1`` stands for ``a_i`` and ``2i`` for
``b_i``; a negative letter is the inverse generator.  The standard relator is
``a1 b1 a1^-1 b1^-1 ... ag bg ag^-1 bg^-1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import TrivialClass, ValidationError

_TOKEN = re.compile(r"([abAB])(\d+)\s*(\^\s*\(?\s*-\s*1\s*\)?|⁻¹|\^\s*\(?\s*1\s*\)?)?")


@dataclass(frozen=True)
class SurfacePresentation:
    """Standard one-relator presentation of a closed genus-``g`` surface group."""

    genus: int

    def __post_init__(self):
        if int(self.genus) != self.genus or self.genus < 2:
            raise ValidationError(f"genus must be an integer >= 2, got {self.genus!r}")

    @property
    def generators(self) -> list[str]:
        out = []
        for i in range(1, self.genus + 1):
            out += [f"a{i}", f"b{i}"]
        return out

    @property
    def relator(self) -> tuple[int, ...]:
        word = []
        for i in range(1, self.genus + 1):
            a, b = 2 * i - 1, 2 * i
            word += [a, b, -a, -b]
        return tuple(word)


def parse_word(text: str | tuple | list, genus: int | None = None) -> tuple[int, ...]:
    """Parse a word such as ``"a1 b1 a1^-1"``, ``"a1b1A1"`` or ``"b2⁻¹ a1"``.

    Upper-case letters denote inverses.  Sequences of integers are accepted
    as already-encoded words.
    """
    if isinstance(text, (tuple, list)):
        word = tuple(int(x) for x in text)
    else:
        compact = text.replace("*", " ").strip()
        pos, word = 0, []
        while pos < len(compact):
            if compact[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(compact, pos)
            if not m:
                raise ValidationError(f"cannot parse word {text!r} at position {pos}")
            letter, idx, power = m.groups()
            k = int(idx)
            if k < 1:
                raise ValidationError(f"generator index must be >= 1 in {text!r}")
            code = 2 * k - 1 if letter.lower() == "a" else 2 * k
            inverse = letter.isupper()
            if power and ("-" in power or "⁻" in power):
                inverse = not inverse
            word.append(-code if inverse else code)
            pos = m.end()
        word = tuple(word)
    if any(x == 0 for x in word):
        raise ValidationError("letter 0 is not a generator")
    if genus is not None and any(abs(x) > 2 * genus for x in word):
        raise ValidationError(f"word {text!r} uses a generator outside genus {genus}")
    return word


def format_word(word) -> str:
    """Inverse of :func:`parse_word` using ``^-1`` for inverses."""
    parts = []
    for x in word:
        k = (abs(x) + 1) // 2
        name = ("a" if abs(x) % 2 else "b") + str(k)
        parts.append(name + ("^-1" if x < 0 else ""))
    return " ".join(parts)


def invert(word) -> tuple[int, ...]:
    return tuple(-x for x in reversed(word))


def free_reduce(word) -> tuple[int, ...]:
    out: list[int] = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cyclic_reduce(word) -> tuple[int, ...]:
    w = list(free_reduce(word))
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return tuple(w[i : j + 1])


def _letter_key(x: int):
    return (abs(x), x < 0)


def min_rotation(word) -> tuple[int, ...]:
    """Lexicographically least cyclic rotation (letters ordered a1, a1^-1, b1, ...)."""
    if not word:
        return ()
    n = len(word)
    best = None
    for s in range(n):
        rot = word[s:] + word[:s]
        key = [_letter_key(x) for x in rot]
        if best is None or key < best[0]:
            best = (key, rot)
    return tuple(best[1])


def _relator_pieces(genus: int) -> list[tuple[int, ...]]:
    rel = SurfacePresentation(genus).relator
    pieces = []
    for r in (rel, invert(rel)):
        for s in range(len(r)):
            pieces.append(r[s:] + r[:s])
    return pieces


def dehn_reduce(word, genus: int) -> tuple[int, ...]:
    """Cyclic Dehn reduction with respect to the surface relator.

    Any cyclic subword that is more than half of a cyclic conjugate of the
    relator (or its inverse) is replaced by the inverse of the complementary
    part, and free/cyclic reduction is reapplied until nothing changes.  For
    genus at least two this decides whether a word is trivial.
    """
    pieces = _relator_pieces(genus)
    n_rel = 4 * genus
    half = n_rel // 2
    w = cyclic_reduce(word)
    changed = True
    while changed and w:
        changed = False
        n = len(w)
        for length in range(n_rel, half, -1):
            if length > n:
                continue
            for s in range(n):
                sub = tuple(w[(s + k) % n] for k in range(length))
                for r in pieces:
                    if r[:length] == sub:
                        rest = invert(r[length:])
                        if length == n:
                            cand = rest
                        else:
                            tail = tuple(w[(s + length + k) % n] for k in range(n - length))
                            cand = rest + tail
                        w = cyclic_reduce(cand)
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
    return w


def normal_form(word, genus: int) -> tuple[int, ...]:
    """Conjugacy normal form used for labels: Dehn-reduced, least rotation.

    Raises :class:`TrivialClass` when the word is trivial in the group.
    """
    w = dehn_reduce(word, genus)
    if not w:
        raise TrivialClass(f"word {format_word(word) or '<empty>'} is trivial in the surface group")
    return min_rotation(w)


def unoriented_key(word, genus: int) -> tuple[int, ...]:
    """Normal form shared by a word and its inverse."""
    a = normal_form(word, genus)
    b = normal_form(invert(word), genus)
    return min(a, b, key=lambda w: [_letter_key(x) for x in w])


@dataclass(frozen=True)
class CurveClass:
    """Free homotopy class of a closed curve, stored as a cyclically reduced word."""

    word: tuple[int, ...]
    id: str = field(default="")
    genus: int = 2

    def __post_init__(self):
        w = cyclic_reduce(parse_word(self.word, self.genus))
        if not w or not dehn_reduce(w, self.genus):
            raise TrivialClass(f"curve {self.id or self.word!r} is trivial")
        object.__setattr__(self, "word", w)
        if not self.id:
            object.__setattr__(self, "id", format_word(w))

    @property
    def key(self) -> tuple[int, ...]:
        return unoriented_key(self.word, self.genus)

    def __str__(self):
        return self.id


def reduce_word(word, genus: int = 2, id: str = "") -> CurveClass:
    """Return the cyclically reduced, conjugacy-normalised class of ``word``.

    The result is idempotent: reducing the word of the output returns the
    same word.

    Raises
    ------
    TrivialClass
        If the word represents the identity.
    """
    w = normal_form(parse_word(word, genus), genus)
    return CurveClass(w, id=id, genus=genus)
