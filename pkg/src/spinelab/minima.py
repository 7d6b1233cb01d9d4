"""Length gradients, minimisation of length functionals and eutacticity.

All inner products are Euclidean in Fenchel–Nielsen coordinates.  Which
points are eutactic, balanced and so on does not depend on this choice, but
numerical values such as hull distances do.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguousSystoleSet,
    Diverged,
    InHull,
    NoConvergence,
    NotFilling,
    RankDeficient,
    StepUnderflow,
    ValidationError,
)
from .geodesics import axis_crossings, lift_word, surface_geometry
from .hyperbolic import PANTS_WORDS, FNPoint, length_jacobian, lengths_of
from .lp import hull_max_min, lengthening_alternative, positive_combination, simplex
from .topology import CurveSystem, is_filling
from .words import CurveClass, format_word

RANK_TOL = 1e-8
GRAD_TOL = 1e-7
EUTACTIC_TOL = 1e-6
BALANCE_EPS = 1e-6


def _words(C) -> list[tuple]:
    if isinstance(C, CurveSystem):
        return C.words
    return [c.word if isinstance(c, CurveClass) else tuple(c) for c in C]


# --- gradients -------------------------------------------------------------------

@dataclass
class GradientReport:
    curve: CurveClass
    gradient: np.ndarray
    step: float
    richardson_gap: float
    wolpert: np.ndarray | None = None
    wolpert_gap: float | None = None


def _central(f, x, k, h):
    e = np.zeros_like(x)
    e[k] = h
    return (f(x + e) - f(x - e)) / (2 * h)


def wolpert_twist_derivatives(c: CurveClass, x: FNPoint) -> np.ndarray:
    """Twist derivatives of ``L(c)`` as cosine sums over crossings with the pants curves."""
    geom = surface_geometry(x)
    lc = lift_word(geom, c.word)
    out = np.zeros(len(PANTS_WORDS))
    for k, w in enumerate(PANTS_WORDS):
        lp_ = lift_word(geom, w)
        crossings, coincident = axis_crossings(geom, lp_.matrix, lp_.word, lc.matrix, lc.word)
        if not coincident:
            out[k] = sum(cr.cos for cr in crossings)
    return out


def length_gradient(c: CurveClass, x: FNPoint, scheme: str = "central_fd", *, wolpert_tol: float = 1e-4) -> GradientReport:
    """Gradient of ``L(c)`` in FN coordinates by Richardson-extrapolated central differences.

    The step starts at ``1e-4`` and is halved until two successive
    extrapolations agree to ``1e-7`` (relative), never going below ``1e-6``.
    With ``scheme="twist_checked"`` the twist components are compared with
    Wolpert's cosine formula.

    Raises
    ------
    StepUnderflow
        If the extrapolation does not settle.
    ValidationError
        If the twist check fails.
    """
    if scheme not in ("central_fd", "twist_checked"):
        raise ValidationError(f"unknown gradient scheme {scheme!r}")
    vec = np.asarray(x.vector, float)
    f = lambda v: float(lengths_of([c.word], v)[0])  # noqa: E731
    grad = np.zeros(len(vec))
    worst_gap, used = 0.0, 0.0
    for k in range(len(vec)):
        h = 1e-4
        prev = None
        while True:
            rich = (4 * _central(f, vec, k, h / 2) - _central(f, vec, k, h)) / 3
            if prev is not None:
                gap = abs(rich - prev)
                if gap < 1e-7 * max(1.0, abs(rich)):
                    break
            if h / 2 < 1e-6:
                raise StepUnderflow(f"Richardson extrapolation did not settle for coordinate {k}")
            prev = rich
            h /= 2
        grad[k] = rich
        worst_gap = max(worst_gap, gap)
        used = max(used, h)
    report = GradientReport(c, grad, used, worst_gap)
    if scheme == "twist_checked":
        g = x.genus
        wol = wolpert_twist_derivatives(c, x)
        gap = float(np.abs(wol - grad[3 * g - 3 :]).max())
        report.wolpert, report.wolpert_gap = wol, gap
        if gap > wolpert_tol:
            raise ValidationError(f"twist derivatives differ from the cosine sums by {gap:.2e}")
    return report


@dataclass
class GradientFrame:
    """Length gradients of a curve system at one point."""

    base: FNPoint
    gradients: np.ndarray
    lengths: np.ndarray
    rank: int
    span_basis: np.ndarray
    singular_values: np.ndarray

    @classmethod
    def at(cls, C, x: FNPoint, tol: float = RANK_TOL) -> "GradientFrame":
        values, G = length_jacobian(_words(C), x.vector)
        return cls.from_matrix(x, G, values, tol)

    @classmethod
    def from_matrix(cls, x, G, values=None, tol: float = RANK_TOL) -> "GradientFrame":
        G = np.atleast_2d(np.asarray(G, float))
        if (np.linalg.norm(G, axis=1) == 0).any():
            raise ValidationError("a length gradient vanished")
        _, s, Vt = np.linalg.svd(G, full_matrices=False)
        rank = int((s > tol * max(1.0, s[0])).sum())
        vals = np.zeros(len(G)) if values is None else np.asarray(values)
        return cls(x, G, vals, rank, Vt[:rank], s)


def numerical_rank(G, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(np.atleast_2d(G), compute_uv=False)
    return int((s > tol * max(1.0, s[0])).sum())


# --- LP based tests ----------------------------------------------------------------

@dataclass
class LengtheningResult:
    feasible: bool
    direction: np.ndarray | None  # satisfies <v, grad> >= 1
    unit: np.ndarray | None
    farkas_weights: np.ndarray | None
    residual: float


def joint_lengthening_direction(C, x: FNPoint) -> LengtheningResult:
    """A direction increasing every length in ``C``, or a Farkas certificate that none exists."""
    G = GradientFrame.at(C, x).gradients
    alt = lengthening_alternative(G)
    if alt.direction is not None:
        v = alt.direction
        return LengtheningResult(True, v, v / np.linalg.norm(v), None, alt.residual)
    return LengtheningResult(False, None, None, alt.weights, alt.residual)


def eutactic_from_gradients(G):
    a, v, res = positive_combination(G)
    if a is not None:
        return True, a, res
    return False, v, res


def eutactic_test(C, x: FNPoint):
    """Whether some combination with all weights ``>= 1`` of the gradients vanishes.

    Returns ``(True, weights)`` or ``(False, v)`` where ``v`` pairs
    nonpositively with every gradient and negatively with at least one.
    """
    ok, payload, _ = eutactic_from_gradients(GradientFrame.at(C, x).gradients)
    return ok, payload


def min_membership(C, x: FNPoint) -> str:
    """``"interior"``, ``"boundary_or_member"`` or ``"outside"`` relative to ``Min(C)``."""
    G = GradientFrame.at(C, x).gradients
    if lengthening_alternative(G).direction is not None:
        return "outside"
    ok, _, _ = eutactic_from_gradients(G)
    return "interior" if ok else "boundary_or_member"


# --- minimisation --------------------------------------------------------------------

@dataclass(frozen=True)
class LengthFunctional:
    """Positive combination ``Σ a_j L(c_j)``."""

    curves: CurveSystem
    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(a) for a in self.weights)
        if len(w) != len(self.curves):
            raise ValidationError("one weight per curve is required")
        if min(w) <= 0:
            raise ValidationError("weights must be strictly positive")
        object.__setattr__(self, "weights", w)

    @classmethod
    def equal(cls, C: CurveSystem) -> "LengthFunctional":
        return cls(C, (1.0,) * len(C))

    def value_and_gradient(self, vec):
        vals, J = length_jacobian(self.curves.words, vec)
        a = np.asarray(self.weights)
        return float(a @ vals), a @ J, vals

    def __call__(self, x: FNPoint) -> float:
        return float(np.asarray(self.weights) @ lengths_of(self.curves.words, x.vector))


@dataclass
class MinimizeResult:
    minimizer: FNPoint
    value: float
    gradient_norm: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list, repr=False)


def _armijo(F, x, f, grad, p, n_len, c1: float = 1e-4, shrink: float = 0.5):
    """Backtracking line search; returns ``(x, f, grad, lengths)`` or None."""
    step = 1.0
    neg = p[:n_len] < 0
    if neg.any():
        # keep the pants lengths positive
        step = min(step, 0.5 * float(np.min(x[:n_len][neg] / -p[:n_len][neg])))
    slope = grad @ p
    while step > 1e-16:
        xn = x + step * p
        try:
            fn, gn, vn = F.value_and_gradient(xn)
        except ArithmeticError:
            fn = np.inf
        if np.isfinite(fn) and fn <= f + c1 * step * slope:
            return xn, fn, gn, vn
        step *= shrink
    return None


def minimize_length_functional(
    F: LengthFunctional,
    x0: FNPoint,
    *,
    tol: float = GRAD_TOL,
    max_iter: int = 2000,
    check_filling: bool = True,
) -> MinimizeResult:
    """Minimise ``F`` from ``x0`` (quasi-Newton directions, Armijo backtracking).

    Raises
    ------
    NotFilling
        If the curves do not fill, so no minimum exists.
    Diverged
        If some tracked or pants length drops below ``1e-3`` before
        convergence.
    """
    if check_filling and not is_filling(F.curves, x0):
        raise NotFilling("the length functional of a nonfilling system has no minimum")
    g = x0.genus
    n_len = 3 * g - 3
    x = np.asarray(x0.vector, float)
    f, grad, vals = F.value_and_gradient(x)
    H = np.eye(len(x))
    trace = [(0, f, float(np.linalg.norm(grad)))]
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < tol * (1 + abs(f)):
            return MinimizeResult(FNPoint.from_vector(x, g), f, gnorm, it - 1, True, trace)
        if min(vals.min(), x[:n_len].min()) < 1e-3:
            raise Diverged("a length collapsed below 1e-3: the iterates escape to the boundary")
        p = -H @ grad
        if grad @ p >= 0:
            H = np.eye(len(x))
            p = -grad
        xn = _armijo(F, x, f, grad, p, n_len)
        if xn is None and not np.allclose(p, -grad):
            H = np.eye(len(x))
            p = -grad
            xn = _armijo(F, x, f, grad, p, n_len)
        if xn is None:
            return MinimizeResult(FNPoint.from_vector(x, g), f, gnorm, it, False, trace)
        xn, fn, gn, vn = xn
        s, yv = xn - x, gn - grad
        sy = s @ yv
        if sy > 1e-12:
            rho = 1.0 / sy
            I = np.eye(len(x))
            H = (I - rho * np.outer(s, yv)) @ H @ (I - rho * np.outer(yv, s)) + rho * np.outer(s, s)
        x, f, grad, vals = xn, fn, gn, vn
        trace.append((it, f, float(np.linalg.norm(grad))))
    gnorm = float(np.linalg.norm(grad))
    return MinimizeResult(FNPoint.from_vector(x, g), f, gnorm, it, gnorm < tol * (1 + abs(f)), trace)


# --- critical points ----------------------------------------------------------------

@dataclass
class CriticalCertificate:
    point: FNPoint
    systole_set: object
    eutactic: bool
    positive_combination: np.ndarray | None
    index: int
    residual: float
    improving_direction: np.ndarray | None = None
    tightened: bool = False

    def to_dict(self) -> dict:
        return {
            "point": self.point.to_dict(),
            "systole": self.systole_set.value,
            "systoles": [c.id for c in self.systole_set.curves],
            "words": [format_word(c.word) for c in self.systole_set.curves],
            "eutactic": self.eutactic,
            "weights": None if self.positive_combination is None else list(self.positive_combination),
            "index": self.index,
            "residual": self.residual,
            "improving_direction": None if self.improving_direction is None else list(self.improving_direction),
        }


def certify_critical_point(x: FNPoint, tol: float = 1e-7) -> CriticalCertificate:
    """Decide whether ``x`` is a critical point of the systole function.

    Near-ties (curves within ``10 tol`` of the systole but not within
    ``tol``) trigger a second pass at tolerance ``1e-9``; if that is still
    ambiguous :class:`AmbiguousSystoleSet` is raised.
    """
    from .spectrum import systoles

    S = systoles(x, tol)
    tightened = False
    if S.near_misses:
        S = systoles(x, 1e-9)
        tightened = True
        if S.near_misses:
            raise AmbiguousSystoleSet(
                f"{len(S.near_misses)} curves sit just above the systole {S.value:.12g}"
            )
    frame = GradientFrame.at(S.curves, x)
    ok, payload, res = eutactic_from_gradients(frame.gradients)
    if ok:
        return CriticalCertificate(x, S, True, payload, frame.rank, res, None, tightened)
    alt = lengthening_alternative(frame.gradients)
    direction = alt.direction if alt.direction is not None else -payload
    return CriticalCertificate(x, S, False, None, frame.rank, res, direction, tightened)


# --- loci ---------------------------------------------------------------------------

@dataclass
class LocusPoint:
    base: FNPoint
    curves: CurveSystem
    offsets: np.ndarray
    residual: float
    iterations: int = 0


def gauss_newton(residual, jacobian, x0, *, tol: float = 1e-10, max_iter: int = 100, rank_tol: float = RANK_TOL):
    """Minimum-norm Gauss–Newton for an underdetermined system ``residual(x) = 0``.

    Returns ``(x, max|r|, iterations)``.

    Raises
    ------
    RankDeficient
        If the constraint gradients are dependent at an iterate.
    NoConvergence
        After ``max_iter`` iterations.
    """
    x = np.asarray(x0, float)
    r = np.atleast_1d(residual(x))
    for it in range(max_iter + 1):
        err = float(np.abs(r).max()) if r.size else 0.0
        if err < tol:
            return x, err, it
        if it == max_iter:
            break
        J = np.atleast_2d(jacobian(x))
        if numerical_rank(J, rank_tol) < min(J.shape[0], J.shape[1]) or J.shape[0] > J.shape[1]:
            raise RankDeficient("constraint gradients are linearly dependent")
        step = -np.linalg.lstsq(J, r, rcond=None)[0]
        t = 1.0
        while t > 1e-6:
            xn = x + t * step
            try:
                rn = np.atleast_1d(residual(xn))
            except ArithmeticError:
                rn = None
            if rn is not None and np.all(np.isfinite(rn)) and np.abs(rn).max() < err:
                break
            t *= 0.5
        else:
            raise NoConvergence("Gauss–Newton step failed to reduce the residual")
        x, r = xn, rn
    raise NoConvergence(f"no convergence after {max_iter} iterations (residual {err:.2e})")


def locus_project(x0: FNPoint, C: CurveSystem, d=None, *, tol: float = 1e-10, max_iter: int = 100) -> LocusPoint:
    """Project ``x0`` onto ``E(C, d) = {L(c_i) + d_i all equal}``."""
    n = len(C)
    d = np.zeros(n) if d is None else np.asarray(d, float)
    words = C.words
    g = x0.genus

    def residual(v):
        L = lengths_of(words, v) + d
        return L[:-1] - L[-1]

    def jac(v):
        _, J = length_jacobian(words, v)
        return J[:-1] - J[-1]

    x, err, it = gauss_newton(residual, jac, x0.vector, tol=tol, max_iter=max_iter)
    if np.any(x[: 3 * g - 3] <= 0):
        raise NoConvergence("projection left Teichmüller space")
    L = lengths_of(words, x) + d
    return LocusPoint(FNPoint.from_vector(x, g), C, d, float(L.max() - L.min()), it)


@dataclass
class BalanceReport:
    point: LocusPoint
    classification: str
    witness: np.ndarray | None
    coefficients: np.ndarray | None = None
    certificate: np.ndarray | None = None


def classify_gradients(G, eps: float = BALANCE_EPS):
    """Balance classification of a gradient matrix.

    Returns ``(classification, v_C, coefficients, certificate)``.
    """
    G = np.asarray(G, float)
    ok, payload, _ = eutactic_from_gradients(G)
    if ok:
        return "balanced", np.zeros(G.shape[1]), payload / payload.sum(), None
    res = hull_max_min(G)
    n = len(G)
    if res.status == "infeasible":
        # a proper subset may still be eutactic (x in Min(C'))
        import itertools

        for k in range(2, n):
            for sub in itertools.combinations(range(n), k):
                if eutactic_from_gradients(G[list(sub)])[0]:
                    return "semi_balanced", None, None, res.farkas
        return "unbalanced", None, None, res.farkas
    a = np.maximum(res.x[:n], 0)
    s = float(res.x[n + 1])
    v = G.T @ a
    return ("balanced" if s > eps else "semi_balanced"), v, a, None


def classify_balance(pt: LocusPoint, eps: float = BALANCE_EPS) -> BalanceReport:
    """Position of the equal-rate direction ``v_C`` relative to the gradient hull."""
    if pt.residual >= 1e-8:
        raise ValidationError("the point is not on the locus")
    G = GradientFrame.at(pt.curves, pt.base).gradients
    label, v, a, cert = classify_gradients(G, eps)
    return BalanceReport(pt, label, v, a, cert)


def _cone_angle(v, P):
    """Angle between ``v`` and the cone spanned by the rows of ``P``."""
    from scipy.optimize import nnls

    coef, _ = nnls(P.T, v)
    proj = P.T @ coef
    nv = np.linalg.norm(v)
    if np.linalg.norm(proj) < 1e-14:
        return np.pi / 2
    c = float(np.clip(proj @ v / (np.linalg.norm(proj) * nv), -1, 1))
    return float(np.arccos(c))


def nearest_face_from_gradients(G, v, tol: float = 1e-9):
    from .polytopes import build_face_lattice

    G = np.asarray(G, float)
    lattice = build_face_lattice(G, negate=False)
    # a hull of lower dimension than the space is itself a candidate face
    top = lattice.dimension if lattice.dimension < G.shape[1] else lattice.dimension - 1
    proper = [f for f in lattice.faces if 0 <= f.dimension <= top]
    # inside the hull but on no proper face
    on_face = any(_cone_angle(v, G[list(f.labels)]) < tol and _in_hull(v, G[list(f.labels)]) for f in proper)
    if _in_hull(v, G) and not on_face:
        raise InHull("the direction lies inside the hull")
    best = min(proper, key=lambda f: (round(_cone_angle(v, G[list(f.labels)]) / tol), f.dimension, f.labels))
    return best.labels


def _in_hull(v, P, tol: float = 1e-9) -> bool:
    n = len(P)
    A = np.vstack([P.T, np.ones((1, n))])
    b = np.append(v, 1.0)
    res = simplex(np.zeros(n), A, b)
    return res.feasible and np.linalg.norm(P.T @ res.x - v) < 1e-7


def nearest_hull_face(C: CurveSystem, x: FNPoint, direction) -> tuple[int, ...]:
    """Labels of the face of ``conv{∇L(c)}`` closest in angle to ``direction``."""
    G = GradientFrame.at(C, x).gradients
    return nearest_face_from_gradients(G, np.asarray(direction, float))
