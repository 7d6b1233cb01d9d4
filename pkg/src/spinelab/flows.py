"""Flows on Teichmüller space in Fenchel–Nielsen coordinates.

* ``integrate_descent``: adaptive RK4 on ``ẋ = -∇L(A, C)``.
* ``petal_trace``: descent of a single curve, checking that it stays the
  strict systole and that the point stays in ``Min(C)``.
* ``numeric_horizon``: descent of functionals supported on nonfilling
  subsets, recording which multicurves pinch.
* ``thurston_flow``: a systole-increasing field glued from lengthening
  directions of the short-curve sets.
* ``fiber_sample``: rays out of a critical point followed by the
  systole-increasing flow.

Short curves are tracked in a :class:`CurvePool`: every closed geodesic up
to a cutoff at the start point, plus any extra curves.  Systole values and
pinch sets along a flow are read off the pool.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import nnls

from .errors import PreconditionFailed, StalledFlow, StepFailure, ValidationError
from .hyperbolic import FNPoint, length_jacobian, lengths_of
from .minima import LengthFunctional, min_membership
from .topology import CurveSystem, _filling_from, pair_data
from .words import CurveClass, format_word

PINCH_THRESHOLD = 0.05
PINCH_WINDOW = 10
GRAD_TOL = 1e-7
EPSILON = 0.05
POOL_CUTOFF = 8.0
MAX_COVER = 12


# --- curve pools -----------------------------------------------------------------------

@dataclass
class CurvePool:
    """Curves whose lengths are followed along a flow."""

    words: list[tuple]
    names: list[str]
    genus: int = 2

    def lengths(self, vec) -> np.ndarray:
        return lengths_of(self.words, vec)

    def extend(self, words, names=None) -> "CurvePool":
        from .words import unoriented_key

        have = {unoriented_key(w, self.genus) for w in self.words}
        W, N = list(self.words), list(self.names)
        for k, w in enumerate(words):
            key = unoriented_key(w, self.genus)
            if key not in have:
                have.add(key)
                W.append(tuple(w))
                N.append(names[k] if names else format_word(w))
        return CurvePool(W, N, self.genus)


@lru_cache(maxsize=32)
def _pool_at(vec: tuple, genus: int, cutoff: float, simple: bool) -> CurvePool:
    from .spectrum import enumerate_short_geodesics
    from .topology import is_simple

    x = FNPoint.from_vector(vec, genus)
    words = [r.curve.word for r in enumerate_short_geodesics(x, cutoff)]
    if simple:
        words = [w for w in words if is_simple(w, x)]
    return CurvePool(words, [format_word(w) for w in words], genus)


def curve_pool(
    x: FNPoint, cutoff: float = POOL_CUTOFF, extra: CurveSystem | None = None, *, simple: bool = False
) -> CurvePool:
    """Closed geodesics up to ``cutoff`` at ``x`` (only simple ones if asked)."""
    pool = _pool_at(tuple(map(float, x.vector)), x.genus, float(cutoff), simple)
    if extra is not None:
        pool = pool.extend(extra.words, extra.ids)
    return pool


# --- traces --------------------------------------------------------------------------

@dataclass
class FlowSample:
    t: float
    x: np.ndarray
    lengths: np.ndarray  # tracked curves
    fsys: float
    energy: float = float("nan")


@dataclass
class FlowTrace:
    samples: list[FlowSample]
    terminal: str  # converged_to_minimum | pinched | budget_exhausted | left_domain | converged_to_spine
    field_spec: dict
    tracked: list[str] = field(default_factory=list)
    pinched: tuple[str, ...] = ()
    pinched_words: tuple[tuple, ...] = ()
    violations: list = field(default_factory=list)

    @property
    def end(self) -> FNPoint:
        s = self.samples[-1]
        return FNPoint.from_vector(s.x, len(s.x) // 6 + 1)

    def to_csv(self) -> str:
        from .io import fmt

        # pools refreshed mid-flow change the tracked columns; keep only stable ones
        tracked = list(self.tracked) if all(len(s.lengths) == len(self.tracked) for s in self.samples) else []
        head = ["t"] + [f"x{k + 1}" for k in range(len(self.samples[0].x))] + tracked + ["fsys"]
        rows = [",".join(head)]
        for s in self.samples:
            lengths = list(s.lengths) if tracked else []
            rows.append(",".join(fmt(v) for v in [s.t, *s.x, *lengths, s.fsys]))
        return "\n".join(rows) + "\n"


def _rk4(f, x, h):
    k1 = f(x)
    k2 = f(x + h / 2 * k1)
    k3 = f(x + h / 2 * k2)
    k4 = f(x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _pinched(history: list[np.ndarray], threshold: float, window: int):
    if len(history) <= window:
        return []
    last = history[-1]
    short = np.nonzero(last < threshold)[0]
    out = []
    for k in short:
        seq = [h[k] for h in history[-window - 1 :]]
        if all(b < a for a, b in zip(seq, seq[1:])):
            out.append(int(k))
    return out


def integrate_descent(
    x0: FNPoint,
    F: LengthFunctional,
    t_max: float = 50.0,
    *,
    pool: CurvePool | None = None,
    tol: float = 1e-6,
    h0: float = 0.05,
    h_max: float = 8.0,
    max_steps: int = 20000,
    threshold: float = PINCH_THRESHOLD,
    window: int = PINCH_WINDOW,
) -> FlowTrace:
    """Follow ``ẋ = -∇L(A, C)`` with adaptive RK4 (step doubling).

    Terminates as ``converged_to_minimum`` when the gradient norm drops below
    ``1e-7``, ``pinched`` when some tracked curve is shorter than
    ``threshold`` and has decreased over the last ``window`` samples, and
    ``budget_exhausted`` at ``t_max``.

    Raises
    ------
    StepFailure
        If the step size underflows ``1e-10``.
    """
    g = x0.genus
    n_len = 3 * g - 3
    pool = pool if pool is not None else curve_pool(x0, extra=F.curves)
    pool = pool.extend(F.curves.words, F.curves.ids)

    def rhs(v):
        if v[:n_len].min() <= 0:
            # stage point outside Teichmüller space
            raise FloatingPointError("nonpositive pants length")
        return -F.value_and_gradient(v)[1]

    def energy(v):
        return F.value_and_gradient(v)[0]

    x = np.asarray(x0.vector, float)
    t, h = 0.0, h0
    L = pool.lengths(x)
    samples = [FlowSample(0.0, x.copy(), L, float(L.min()), energy(x))]
    history = [L]
    spec = {"field": "descent", "curves": F.curves.ids, "weights": list(F.weights)}
    for _ in range(max_steps):
        grad = F.value_and_gradient(x)[1]
        if np.linalg.norm(grad) < GRAD_TOL:
            return FlowTrace(samples, "converged_to_minimum", spec, pool.names)
        if t >= t_max:
            return FlowTrace(samples, "budget_exhausted", spec, pool.names)
        h = min(h, t_max - t, h_max)
        while True:
            if h < 1e-10:
                raise StepFailure("adaptive step underflow")
            try:
                with np.errstate(all="ignore"):
                    full = _rk4(rhs, x, h)
                    half = _rk4(rhs, _rk4(rhs, x, h / 2), h / 2)
                ok = np.all(np.isfinite(half)) and half[:n_len].min() > 0.5 * x[:n_len].min()
            except ArithmeticError:
                ok = False
            if not ok:
                h /= 4
                continue
            err = float(np.abs(full - half).max()) / 15
            scale = tol * max(1.0, float(np.abs(x).max()))
            e_new = energy(half)
            if err <= scale and e_new < samples[-1].energy:
                break
            h *= max(0.2, 0.9 * (scale / max(err, 1e-300)) ** 0.2) if err > scale else 0.5
        x = half
        t += h
        h *= min(5.0, max(1.0, 0.9 * (scale / max(err, 1e-300)) ** 0.2))
        L = pool.lengths(x)
        samples.append(FlowSample(t, x.copy(), L, float(L.min()), e_new))
        history.append(L)
        idx = _pinched(history, threshold, window)
        if idx:
            return FlowTrace(
                samples,
                "pinched",
                spec,
                pool.names,
                tuple(pool.names[k] for k in idx),
                tuple(pool.words[k] for k in idx),
            )
    return FlowTrace(samples, "budget_exhausted", spec, pool.names)


# --- petals ------------------------------------------------------------------------------

def petal_trace(
    x0: FNPoint,
    c: CurveClass,
    C: CurveSystem,
    t_max: float = 50.0,
    *,
    pool: CurvePool | None = None,
    check_every: int = 1,
) -> FlowTrace:
    """Length descent of ``c`` from ``x0`` with a log of confinement violations.

    A violation is a sample where ``c`` is not the strict shortest curve of
    the pool or where the point has left ``Min(C)``.

    Raises
    ------
    PreconditionFailed
        If ``c`` is not the unique systole at ``x0`` or ``x0`` is not
        interior to ``Min(C)``.
    """
    pool = pool if pool is not None else curve_pool(x0, extra=C)
    pool = pool.extend([c.word], [c.id])
    from .words import unoriented_key

    key = unoriented_key(c.word, x0.genus)
    ci = next(k for k, w in enumerate(pool.words) if unoriented_key(w, x0.genus) == key)
    L0 = pool.lengths(x0.vector)
    others = np.delete(L0, ci)
    if not (L0[ci] < others.min()):
        raise PreconditionFailed(f"{c.id} is not the unique systole at the start point")
    if min_membership(C, x0) != "interior":
        raise PreconditionFailed("the start point is not interior to Min(C)")
    F = LengthFunctional(CurveSystem((c,)), (1.0,))
    trace = integrate_descent(x0, F, t_max, pool=pool)
    violations = []
    for k, s in enumerate(trace.samples):
        others = np.delete(s.lengths, ci)
        if not s.lengths[ci] < others.min():
            violations.append((s.t, "not the strict systole"))
        elif k % check_every == 0 and min_membership(C, FNPoint.from_vector(s.x, x0.genus)) == "outside":
            violations.append((s.t, "left Min(C)"))
    trace.violations = violations
    trace.field_spec = {"field": "petal", "curve": c.id}
    return trace


# --- numeric horizon --------------------------------------------------------------------

@dataclass
class HorizonObservation:
    subset: tuple[str, ...]
    weights: tuple[float, ...]
    terminal: str
    pinched: tuple[str, ...]


@dataclass
class NumericHorizon:
    observations: list[HorizonObservation]
    pinch_sets: set
    traces: list[FlowTrace] = field(default_factory=list, repr=False)

    @property
    def incomplete(self) -> list[HorizonObservation]:
        return [o for o in self.observations if o.terminal != "pinched"]


def numeric_horizon(
    C: CurveSystem,
    samples: int = 50,
    seed: int = 0,
    *,
    x0: FNPoint | None = None,
    registry=None,
    t_max: float = 40.0,
) -> NumericHorizon:
    """Pinched multicurves of descent flows supported on nonfilling subsets.

    Profiles cycle through the tops of the maximal nonfilling chains and the
    singletons; weights are uniform on ``[0.5, 2]`` on the subset and zero
    elsewhere.  Pinch sets are labelled through ``registry`` (a
    :class:`~spinelab.geodesics.CurveRegistry` at the reference metric) so
    they can be compared with :func:`~spinelab.topology.horizon_subcomplex`.
    """
    from .geodesics import CurveRegistry, lift_word, surface_geometry
    from .minima import minimize_length_functional
    from .topology import nonfilling_chains

    if x0 is None:
        x0 = minimize_length_functional(LengthFunctional.equal(C), _default_start(C)).minimizer
    geom = surface_geometry(x0)
    registry = registry or CurveRegistry(geom)
    for k, c in enumerate(C):
        registry.register(lift_word(geom, c.word), c.id)
    tops = sorted({chain[-1] for chain in nonfilling_chains(C, x0)})
    subsets = tops + [(i,) for i in range(len(C))]
    rng = np.random.default_rng(seed)
    pool = curve_pool(x0, extra=C)
    obs, sets, traces = [], set(), []
    for k in range(samples):
        sub = subsets[k % len(subsets)]
        w = tuple(float(v) for v in rng.uniform(0.5, 2.0, len(sub)))
        F = LengthFunctional(C.subset(sub), w)
        trace = integrate_descent(x0, F, t_max, pool=pool)
        traces.append(trace)
        labels = ()
        if trace.terminal == "pinched":
            labels = tuple(
                sorted({registry.names[registry.register(lift_word(geom, w_))] for w_ in trace.pinched_words})
            )
            sets.add(labels)
        obs.append(HorizonObservation(tuple(C[i].id for i in sub), w, trace.terminal, labels))
    return NumericHorizon(obs, sets, traces)


def _default_start(C: CurveSystem) -> FNPoint:
    from .bolza import bolza_point

    return bolza_point()


# --- systole-increasing flow ------------------------------------------------------------

def min_norm_lengthening(G) -> np.ndarray | None:
    """Shortest ``v`` with ``G v >= 1`` (Lawson–Hanson LDP via NNLS), or None."""
    G = np.atleast_2d(np.asarray(G, float))
    n, d = G.shape
    E = np.vstack([G.T, np.ones((1, n))])
    f = np.zeros(d + 1)
    f[-1] = 1.0
    u, _ = nnls(E, f, maxiter=50 * n)
    r = E @ u - f
    if np.linalg.norm(r) < 1e-12:
        return None
    return -r[:d] / r[d]


def _bump(m: float, eps: float) -> float:
    return float(np.exp(-eps / m)) if m > 0 else 0.0


@dataclass
class CoverElement:
    curves: tuple[int, ...]  # pool indices
    margin: float
    weight: float
    filling: bool


def cover_elements(L: np.ndarray, eps: float, max_size: int = MAX_COVER) -> list[CoverElement]:
    """Sets ``C`` with ``{c : L(c) < f_sys + |C| eps} = C`` at one point.

    Sizes stop at ``max_size``: curves meeting pairwise at most once number
    at most 12 in genus two.
    """
    f = float(L.min())
    order = np.argsort(L)
    out = []
    for k in range(1, min(len(L), max_size) + 1):
        cut = f + k * eps
        members = order[L[order] < cut]
        if len(members) == k:
            inside = cut - L[members].max()
            outside = L[order[k]] - cut if k < len(L) else np.inf
            m = float(min(inside, outside))
            out.append(CoverElement(tuple(sorted(int(i) for i in members)), m, _bump(m, eps), False))
        if L[order[min(k, len(L) - 1)]] > f + (len(L) + 1) * eps:
            break
    return out


def thurston_flow(
    x0: FNPoint,
    epsilon: float = EPSILON,
    t_max: float = 20.0,
    *,
    h: float = 0.02,
    pool: CurvePool | None = None,
    refresh: float = 0.25,
    max_steps: int = 5000,
) -> FlowTrace:
    """Integrate the glued systole-increasing field until the short curves fill.

    Each cover element with a nonfilling curve set contributes the unit
    vector along its shortest joint-lengthening direction; filling elements
    contribute zero.  Contributions are blended with bump weights of their
    membership margins.  The pool is re-enumerated when the systole has
    moved by ``refresh`` since the last enumeration.

    Raises
    ------
    StalledFlow
        If the systole stops increasing while the short set does not fill.
    """
    g = x0.genus
    x = np.asarray(x0.vector, float)
    pool = pool if pool is not None else curve_pool(x0, cutoff=_pool_cutoff(x0), simple=True)
    filling_cache: dict = {}
    crowded: set = set()

    def fills(idx, v):
        key = tuple(sorted(pool.words[i] for i in idx))
        if key not in filling_cache:
            if len(idx) < 2:
                filling_cache[key] = (False, 0)
            else:
                C = CurveSystem.from_words([pool.words[i] for i in idx], g)
                data = pair_data(C, FNPoint.from_vector(v, g))
                filling_cache[key] = (_filling_from(data, range(len(C)), g), int(np.max(data.intersections)))
        return filling_cache[key]

    def field_at(v):
        L = pool.lengths(v)
        elems = cover_elements(L, epsilon)
        if not elems:
            return np.zeros_like(v), True, elems
        total = sum(e.weight for e in elems)
        if total <= 0:
            elems = [max(elems, key=lambda e: e.margin)]
            elems[0].weight = 1.0
            total = 1.0
        X = np.zeros_like(v)
        for e in elems:
            if e.weight == 0:
                continue
            e.filling, most = fills(e.curves, v)
            if most > 1:
                crowded.add(tuple(pool.names[i] for i in e.curves))
            if e.filling:
                continue
            _, G = length_jacobian([pool.words[i] for i in e.curves], v)
            d = min_norm_lengthening(G)
            if d is not None:
                X += e.weight / total * d / np.linalg.norm(d)
        # the short set is the cover element carrying the most weight
        dominant = max(elems, key=lambda e: (e.weight, e.margin))
        return X, dominant.filling, elems

    spec = {"field": "thurston", "epsilon": epsilon}
    L = pool.lengths(x)
    samples = [FlowSample(0.0, x.copy(), L, float(L.min()))]
    last_refresh = float(L.min())
    t = 0.0
    stalled_for = 0.0
    def finish(terminal):
        trace = FlowTrace(samples, terminal, spec, pool.names)
        trace.violations = [(None, f"short set {c} has a pair meeting more than once") for c in sorted(crowded)]
        return trace

    for _ in range(max_steps):
        X, done, elems = field_at(x)
        if done:
            return finish("converged_to_spine")
        if t >= t_max:
            return finish("budget_exhausted")
        step = min(h, t_max - t)
        for _ in range(30):
            xn = _rk4(lambda v: field_at(v)[0], x, step)
            Ln = pool.lengths(xn)
            if Ln.min() >= samples[-1].fsys - 1e-12:
                break
            # the glued field is only piecewise smooth; try an Euler step
            xn = x + step * X
            Ln = pool.lengths(xn)
            if Ln.min() >= samples[-1].fsys - 1e-12:
                break
            step /= 2
        else:
            raise StepFailure("no step keeps the systole from decreasing")
        gain = float(Ln.min() - samples[-1].fsys)
        stalled_for = stalled_for + step if gain < 1e-10 * step else 0.0
        if stalled_for >= 1.0:
            raise StalledFlow("the systole stopped increasing before the short curves filled")
        x, t = xn, t + step
        samples.append(FlowSample(t, x.copy(), Ln, float(Ln.min())))
        if abs(Ln.min() - last_refresh) > refresh:
            here = FNPoint.from_vector(x, g)
            pool = curve_pool(here, cutoff=_pool_cutoff(here), simple=True)
            last_refresh = float(Ln.min())
            samples[-1].lengths = pool.lengths(x)
    return finish("budget_exhausted")


def _pool_cutoff(x: FNPoint) -> float:
    from .spectrum import _systole_bound

    return float(min(POOL_CUTOFF, _systole_bound(x) + 1.5))


# --- fibers --------------------------------------------------------------------------------

@dataclass
class FiberSample:
    critical_point: FNPoint
    rays: list[FlowTrace]
    returns: list[FlowTrace]
    hit_spine_again: list[bool]
    fsys_drop: list[float] = field(default_factory=list)


def fiber_sample(
    p: FNPoint,
    C: CurveSystem,
    rays: int = 4,
    seed: int = 0,
    *,
    radius: float = 0.05,
    steps: int = 10,
    orthogonal: bool = False,
    follow: bool = True,
    t_max: float = 5.0,
) -> FiberSample:
    """Probe the fibre of the retraction over a critical point.

    Rays leave ``p`` along random unit directions in the span of the
    gradients of ``C`` (or in its orthogonal complement), sampling the
    systole along the way; from each endpoint the systole-increasing flow is
    run and we record whether it comes back within ``1e-3`` of ``p``.
    """
    from .minima import GradientFrame, certify_critical_point

    if rays < 0:
        raise ValidationError("rays must be nonnegative")
    if rays == 0:
        return FiberSample(p, [], [], [], [])
    cert = certify_critical_point(p)
    if not cert.eutactic:
        raise PreconditionFailed("the base point is not a critical point")
    frame = GradientFrame.at(C, p)
    basis = frame.span_basis
    if orthogonal:
        _, _, Vt = np.linalg.svd(np.vstack([basis, np.zeros((len(p.vector) - len(basis), len(p.vector)))]))
        basis = Vt[len(frame.span_basis) :]
        if not len(basis):
            raise ValidationError("the gradients span the whole tangent space")
    rng = np.random.default_rng(seed)
    pool = curve_pool(p, extra=C, simple=True)
    out_rays, returns, hits, drops = [], [], [], []
    f0 = float(pool.lengths(p.vector).min())
    for _ in range(rays):
        u = rng.standard_normal(len(basis)) @ basis
        u /= np.linalg.norm(u)
        samples = []
        for k in range(steps + 1):
            s = radius * k / steps
            v = p.vector + s * u
            L = pool.lengths(v)
            samples.append(FlowSample(s, v, L, float(L.min())))
        ray = FlowTrace(samples, "budget_exhausted", {"field": "ray", "direction": list(u)}, pool.names)
        out_rays.append(ray)
        drops.append(f0 - samples[-1].fsys)
        if follow:
            back = thurston_flow(ray.end, t_max=t_max, pool=pool)
            returns.append(back)
            hits.append(bool(np.linalg.norm(back.samples[-1].x - p.vector) < 1e-3))
        else:
            hits.append(False)
    return FiberSample(p, out_rays, returns, hits, drops)
