"""Fenchel–Nielsen coordinates and their Fuchsian groups (genus two).

Pants decomposition
-------------------
The three pants curves are ``a1``, ``a2`` and the separating curve
``s = a1 b1 a1^-1 b1^-1``.  Coordinates are ordered
``(l1, l2, l3, t1, t2, t3)`` with lengths first and twists second.

Each one-holed torus is assembled from a right-angled hexagon whose three
seams are circles in the upper half-plane: the unit circle, the circle of
radius ``exp(l/2)``, and a third circle fixed by the boundary length.  The
reflections in the seams compose to the boundary holonomies of a pair of
pants, doubling gives the torus, and the second torus is glued to the first
by a half-turn followed by a translation along the separating axis.

Twist signs are calibrated so that the derivative of a length along a twist
equals the sum of the cosines of the crossing angles, measured
counter-clockwise from the pants curve.

All arithmetic here is real and analytic in the coordinates, so every
function in this module accepts complex input and supports complex-step
differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EllipticOrParabolic, NonHyperbolicGenerator, ValidationError
from .words import CurveClass, SurfacePresentation, format_word, parse_word

PANTS_WORDS = ((1,), (3,), (1, 2, -1, -2))
PANTS_NAMES = ("a1", "a2", "s")


@dataclass(frozen=True)
class FNPoint:
    """Point of Teichmüller space in Fenchel–Nielsen coordinates."""

    lengths: tuple
    twists: tuple
    genus: int = 2

    def __post_init__(self):
        SurfacePresentation(self.genus)
        n = 3 * self.genus - 3
        lengths = tuple(float(v) for v in self.lengths)
        twists = tuple(float(v) for v in self.twists)
        if len(lengths) != n or len(twists) != n:
            raise ValidationError(f"genus {self.genus} needs {n} lengths and {n} twists")
        if not all(np.isfinite(lengths + twists)):
            raise ValidationError("Fenchel–Nielsen coordinates must be finite")
        if min(lengths) <= 0:
            raise ValidationError("pants-curve lengths must be positive")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "twists", twists)

    @classmethod
    def from_vector(cls, vec, genus: int = 2) -> "FNPoint":
        vec = np.asarray(vec, dtype=float)
        n = len(vec) // 2
        return cls(tuple(vec[:n]), tuple(vec[n:]), genus)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.lengths + self.twists)

    @property
    def dim(self) -> int:
        return 6 * self.genus - 6

    def to_dict(self) -> dict:
        return {"genus": self.genus, "lengths": list(self.lengths), "twists": list(self.twists)}

    @classmethod
    def from_dict(cls, doc: dict) -> "FNPoint":
        try:
            return cls(tuple(doc["lengths"]), tuple(doc["twists"]), int(doc.get("genus", 2)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed point document: {exc}") from exc


def _check_genus(genus):
    if genus != 2:
        raise NotImplementedError("Fuchsian groups are only constructed for genus 2")


def _mat(a, b, c, d):
    """Stack entries (scalars or equal-shape arrays) into ``(..., 2, 2)`` matrices."""
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    out = np.empty(a.shape + (2, 2), dtype=np.result_type(a, b, c, d))
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = a, b, c, d
    return out


def _translation(s):
    """Translation by ``s`` along the geodesic from -1 to 1."""
    c, h = np.cosh(s / 2), np.sinh(s / 2)
    return _mat(c, h, h, c)


def _dilation(t):
    """Translation by ``t`` along the imaginary axis (z -> e^t z)."""
    e = np.exp(t / 2)
    return _mat(e, 0 * e, 0 * e, 1 / e)


def _inv(g):
    return _mat(g[..., 1, 1], -g[..., 0, 1], -g[..., 1, 0], g[..., 0, 0])


def _torus(l, L, twist):
    """Generators of a one-holed torus and a normalising map.

    Returns ``(A, B, N)`` where ``N`` conjugates the commutator ``[A, B]``
    to a translation up the imaginary axis by ``L`` and carries the foot of
    the seam ``|z| = exp(l/2)`` on its axis to ``i``.  Inputs may be arrays
    of equal shape; the matrices then carry those leading axes.
    """
    R = np.exp(l / 2)
    c2, c3 = np.cosh(l / 2), np.cosh(L / 2)
    r = (R**2 - 1) / (2 * (c2 + R * c3))
    m = np.sqrt(r**2 + 1 + 2 * r * c2)
    c = (1 - r**2 + m**2) / (2 * m)
    A = _dilation(l)
    B = _translation(np.arctanh(1 / c)) @ _dilation(twist)
    K = A @ B @ _inv(A) @ _inv(B)
    a, b, cc, d = K[..., 0, 0], K[..., 0, 1], K[..., 1, 0], K[..., 1, 1]
    disc = np.sqrt((a - d) ** 2 + 4 * b * cc)
    z1 = ((a - d) + disc) / (2 * cc)
    z2 = ((a - d) - disc) / (2 * cc)
    # the attracting fixed point has |c z + d| > 1
    swap = np.abs((cc * z1 + d).real) > np.abs((cc * z2 + d).real)
    u, v = np.where(swap, z2, z1), np.where(swap, z1, z2)
    cen, rad2 = (u + v) / 2, ((v - u) / 2) ** 2
    x = (R**2 - rad2 + cen**2) / (2 * cen)
    y2 = R**2 - x**2
    one = 1 + 0 * u
    pos = (v - u).real > 0
    root = np.sqrt(np.where(pos, v - u, u - v))
    sg = np.where(pos, 1.0, -1.0)
    N = _mat(sg * one, -sg * u, -sg * one, sg * v) / root[..., None, None]
    k = np.sqrt(((x - u) ** 2 + y2) / ((v - x) ** 2 + y2))
    N = _dilation(-np.log(k)) @ N
    return A, B, N


def fn_generators(vec) -> np.ndarray:
    """Matrices of ``a1, b1, a2, b2`` for a coordinate vector (real or complex).

    The product ``[a1, b1][a2, b2]`` is the identity and the separating
    curve ``[a1, b1]`` translates up the imaginary axis.  A stack of
    vectors with shape ``(..., 6)`` gives generators of shape
    ``(..., 4, 2, 2)``.
    """
    vec = np.asarray(vec)
    if vec.shape[-1:] != (6,):
        raise NotImplementedError("Fuchsian groups are only constructed for genus 2")
    l1, l2, L, t1, t2, t3 = np.moveaxis(vec, -1, 0)
    A1, B1, N1 = _torus(l1, L, -t1)
    A2, B2, N2 = _torus(l2, L, -t2)
    half_turn = np.array([[0.0, -1.0], [1.0, 0.0]])
    P = _dilation(-t3) @ half_turn @ N2
    Pi, N1i = _inv(P), _inv(N1)
    return np.stack([N1 @ A1 @ N1i, N1 @ B1 @ N1i, P @ A2 @ Pi, P @ B2 @ Pi], -3)


def word_matrix(word, gens) -> np.ndarray:
    """Holonomy of an integer-coded word, multiplying left to right."""
    gens = np.asarray(gens)
    out = np.broadcast_to(np.eye(2, dtype=gens.dtype), gens.shape[:-3] + (2, 2))
    inv = _inv(gens)
    for x in word:
        out = out @ (gens[..., abs(x) - 1, :, :] if x > 0 else inv[..., abs(x) - 1, :, :])
    return out


def trace_length(trace):
    """Translation length ``2 arccosh(|tr|/2)`` (analytic in complex input)."""
    t = np.asarray(trace)
    sign = np.where(np.real(t) < 0, -1.0, 1.0)
    return 2 * np.arccosh(sign * t / 2)


def word_length(word, vec):
    """Length of the closed geodesic of ``word`` at the coordinate vector."""
    g = word_matrix(word, fn_generators(vec))
    tr = g[0, 0] + g[1, 1]
    if abs(np.real(tr)) <= 2:
        raise EllipticOrParabolic(f"|trace| = {abs(np.real(tr)):.3g} <= 2 for {format_word(word)}")
    return trace_length(tr)


@dataclass(frozen=True)
class FuchsianGroup:
    """Generator matrices of the holonomy representation."""

    point: FNPoint
    generator_matrices: np.ndarray = field(repr=False)
    relator_residual: float

    def holonomy(self, word) -> np.ndarray:
        return word_matrix(parse_word(word, self.point.genus), self.generator_matrices)


def build_fuchsian(x: FNPoint) -> FuchsianGroup:
    """Construct the Fuchsian group of ``x``.

    Raises
    ------
    NonHyperbolicGenerator
        If a generator fails to be hyperbolic.
    """
    _check_genus(x.genus)
    gens = fn_generators(x.vector)
    rel = word_matrix(SurfacePresentation(x.genus).relator, gens)
    residual = min(np.linalg.norm(rel - np.eye(2), 2), np.linalg.norm(rel + np.eye(2), 2))
    for k, g in enumerate(gens):
        if abs(np.trace(g)) <= 2 + 1e-12:
            raise NonHyperbolicGenerator(f"generator {k + 1} has |trace| <= 2")
    return FuchsianGroup(x, gens, float(residual))


@dataclass(frozen=True)
class GeodesicLengthReport:
    curve: CurveClass
    length: float
    trace: float


def geodesic_length(c: CurveClass, x: FNPoint) -> GeodesicLengthReport:
    """Length of the closed geodesic in the class ``c`` at ``x``."""
    _check_genus(x.genus)
    g = word_matrix(c.word, fn_generators(x.vector))
    tr = float(g[0, 0] + g[1, 1])
    if abs(tr) <= 2:
        raise EllipticOrParabolic(f"curve {c.id} has |trace| = {abs(tr):.6g} <= 2")
    return GeodesicLengthReport(c, float(trace_length(tr)), tr)


def lengths_of(words, vec) -> np.ndarray:
    """Lengths of several words at one coordinate vector (complex-step friendly).

    ``vec`` may be a stack ``(..., 6)``; the result then has shape
    ``(..., len(words))``.
    """
    gens = fn_generators(vec)
    inv = _inv(gens)
    cache: dict = {(): np.broadcast_to(np.eye(2, dtype=gens.dtype), gens.shape[:-3] + (2, 2))}

    def holonomy(w):
        # words from an enumeration share prefixes, so memoise them
        if w not in cache:
            x = w[-1]
            g = gens[..., abs(x) - 1, :, :] if x > 0 else inv[..., abs(x) - 1, :, :]
            cache[w] = holonomy(w[:-1]) @ g
        return cache[w]

    out = []
    for w in words:
        g = holonomy(tuple(w))
        out.append(trace_length(g[..., 0, 0] + g[..., 1, 1]))
    return np.stack(out, -1) if out else np.zeros(np.shape(vec)[:-1] + (0,))


def length_jacobian(words, vec, step: float = 1e-20) -> tuple[np.ndarray, np.ndarray]:
    """Lengths and their exact gradients via complex-step differentiation."""
    vec = np.asarray(vec, dtype=float)
    n = len(vec)
    Z = np.tile(vec.astype(complex), (n + 1, 1))
    Z[1:] += 1j * step * np.eye(n)
    out = lengths_of(words, Z)
    values = out[0].real
    jac = (out[1:].imag / step).T
    return values, jac


def pants_curves(genus: int = 2) -> list[CurveClass]:
    _check_genus(genus)
    return [CurveClass(w, id=n, genus=genus) for w, n in zip(PANTS_WORDS, PANTS_NAMES)]


# --- elementary plane geometry on the upper half-plane ------------------------

def axis_endpoints(g) -> tuple[float, float]:
    """Repelling and attracting fixed points of a hyperbolic matrix.

    Either may be ``inf`` when the axis is vertical.
    """
    a, b, c, d = (float(v) for v in np.asarray(g).ravel())
    tr = a + d
    if abs(tr) <= 2:
        raise EllipticOrParabolic("matrix is not hyperbolic")
    if abs(c) < 1e-300:
        # axis is vertical: fixed points b/(d-a) and infinity
        fin = b / (d - a)
        return (fin, np.inf) if abs(a) > abs(d) else (np.inf, fin)
    disc = np.sqrt((a - d) ** 2 + 4 * b * c)
    z1 = ((a - d) + disc) / (2 * c)
    z2 = ((a - d) - disc) / (2 * c)
    if abs(c * z1 + d) > abs(c * z2 + d):
        return z2, z1
    return z1, z2


def mobius(g, z):
    return (g[0, 0] * z + g[0, 1]) / (g[1, 0] * z + g[1, 1])


def displacement_cosh(g) -> np.ndarray:
    """``cosh d(i, g i)`` for one matrix or a stack of matrices."""
    g = np.asarray(g)
    return (g**2).sum(axis=(-2, -1)) / 2
