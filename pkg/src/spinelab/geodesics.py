"""Group enumeration, closed-geodesic classes and axis crossings.

The base point is ``o = i``.  A Dirichlet-domain estimate gives the
covering radius ``D`` of the orbit of ``o``; every element within ``2D`` of
the identity is then used as a generator, which makes breadth-first ball
enumeration with pruning slack ``D`` complete.  The estimate is certified by
comparing the Dirichlet polygon's area with ``4π(g-1)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import SearchBudgetExceeded
from .hyperbolic import FNPoint, axis_endpoints, fn_generators, trace_length
from .words import dehn_reduce, free_reduce, invert

DEFAULT_BUDGET = 400_000
_ANGLES = 4096


def element_budget() -> int:
    """Element cap for ball enumeration (``SPINELAB_BUDGET`` overrides)."""
    raw = os.environ.get("SPINELAB_BUDGET")
    if raw:
        try:
            return max(1000, int(float(raw)))
        except ValueError:
            pass
    return DEFAULT_BUDGET


def inv2(g):
    """Inverse of SL(2) matrices (single or stacked)."""
    g = np.asarray(g)
    out = np.empty_like(g)
    out[..., 0, 0] = g[..., 1, 1]
    out[..., 1, 1] = g[..., 0, 0]
    out[..., 0, 1] = -g[..., 0, 1]
    out[..., 1, 0] = -g[..., 1, 0]
    return out


def _psl_keys(M, scale):
    flat = M.reshape(len(M), 4)
    idx = np.argmax(np.abs(flat) > 1e-7, axis=1)
    sign = np.sign(flat[np.arange(len(M)), idx])
    return np.round(flat * sign[:, None] * scale).astype(np.int64)


def _hyperboloid(M):
    """Hyperboloid coordinates of ``M·i`` for a stack of matrices."""
    a, b, c, d = M[:, 0, 0], M[:, 0, 1], M[:, 1, 0], M[:, 1, 1]
    den = c * c + d * d
    x = (a * c + b * d) / den
    y = 1.0 / den
    r2 = x * x + y * y
    return np.stack([(r2 + 1) / (2 * y), (r2 - 1) / (2 * y), x / y], axis=1)


def _bfs(gens, gen_words, radius, slack, budget):
    """Breadth-first ball enumeration; returns matrices, parents, labels."""
    cmax = np.cosh(radius + slack)
    mats = [np.eye(2)[None]]
    parent = [np.array([-1])]
    label = [np.array([-1])]
    scale = 1e6
    seen = {b"" + _psl_keys(mats[0], scale)[0].tobytes()}
    frontier, fidx, total = mats[0], np.array([0]), 1
    ng = len(gens)
    while len(frontier):
        P = np.einsum("nij,gjk->ngik", frontier, gens).reshape(-1, 2, 2)
        src = np.repeat(fidx, ng)
        lab = np.tile(np.arange(ng), len(frontier))
        ok = (P**2).sum(axis=(1, 2)) / 2 <= cmax
        P, src, lab = P[ok], src[ok], lab[ok]
        if not len(P):
            break
        K = _psl_keys(P, scale)
        _, first = np.unique(K, axis=0, return_index=True)
        keep = []
        for i in np.sort(first):
            kb = K[i].tobytes()
            if kb not in seen:
                seen.add(kb)
                keep.append(i)
        keep = np.array(keep, dtype=int)
        if total + len(keep) > budget:
            raise SearchBudgetExceeded(
                f"ball of radius {radius:.3g} exceeds {budget} elements", partial=total
            )
        frontier = P[keep]
        fidx = np.arange(total, total + len(keep))
        total += len(keep)
        mats.append(frontier)
        parent.append(src[keep])
        label.append(lab[keep])
    return np.concatenate(mats), np.concatenate(parent), np.concatenate(label)


@dataclass
class Ball:
    """Group elements within a given distance of the base point."""

    radius: float
    mats: np.ndarray
    words: list = field(repr=False)

    @property
    def cosh_disp(self):
        return (self.mats**2).sum(axis=(1, 2)) / 2

    def within(self, radius):
        sel = np.nonzero(self.cosh_disp <= np.cosh(radius) + 1e-12)[0]
        return Ball(radius, self.mats[sel], [self.words[i] for i in sel])


class SurfaceGeometry:
    """Cached enumeration machinery for the Fuchsian group of one point."""

    def __init__(self, point: FNPoint | None, budget: int | None = None, gens=None):
        self.point = point
        self.genus = point.genus if point is not None else len(gens) // 2
        self.budget = budget or element_budget()
        if gens is None:
            gens = fn_generators(point.vector)
        self.gens = np.asarray(gens, dtype=float)
        n = len(self.gens)
        self._base_gens = np.concatenate([self.gens, inv2(self.gens)])
        self._base_words = [(k,) for k in range(1, n + 1)] + [(-k,) for k in range(1, n + 1)]
        self._dirichlet()
        self._ball: Ball | None = None

    # -- Dirichlet domain ---------------------------------------------------
    def _radial(self, Q):
        phi = np.linspace(0, 2 * np.pi, _ANGLES, endpoint=False)
        U = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        ratio = np.full(len(phi), np.inf)
        for start in range(0, len(Q), 256):
            q = Q[start : start + 256]
            dot = q[:, 1:] @ U.T
            num = (q[:, 0] - 1)[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(dot > num, num / dot, np.inf)
            ratio = np.minimum(ratio, r.min(axis=0))
        rho = np.where(ratio < 1, np.arctanh(np.minimum(ratio, 1 - 1e-16)), np.inf)
        return phi, rho

    def _dirichlet(self):
        disp = np.arccosh(np.maximum((self._base_gens**2).sum(axis=(1, 2)) / 2, 1))
        slack = float(disp.max())
        radius = 1.5
        for _ in range(20):
            mats, parent, label = _bfs(self._base_gens, self._base_words, radius, slack, self.budget)
            cd = (mats**2).sum(axis=(1, 2)) / 2
            inner = (cd <= np.cosh(radius)) & (cd > 1 + 1e-9)
            phi, rho = self._radial(_hyperboloid(mats[inner]))
            if np.all(np.isfinite(rho)) and 2 * rho.max() + 0.1 < radius:
                break
            radius = (2 * rho.max() + 0.5) if np.all(np.isfinite(rho)) else radius + 1.0
        area = float(np.mean(np.cosh(rho) - 1) * 2 * np.pi)
        self.dirichlet_area = area
        self.covering_radius = float(rho.max()) + 0.05
        D = self.covering_radius
        # neighbour generating set: everything within 2D of the identity
        words = _unwind(parent, label, self._base_words)
        cd = (mats**2).sum(axis=(1, 2)) / 2
        sel = np.nonzero((cd <= np.cosh(2 * D + 0.05)) & (cd > 1 + 1e-9))[0]
        self.neighbors = mats[sel]
        self.neighbor_words = [words[i] for i in sel]

    # -- balls ----------------------------------------------------------------
    def ball(self, radius: float) -> Ball:
        """All elements ``h`` with ``d(o, h o) <= radius``."""
        if self._ball is not None and self._ball.radius >= radius:
            return self._ball.within(radius)
        mats, parent, label = _bfs(
            self.neighbors, self.neighbor_words, radius, self.covering_radius, self.budget
        )
        words = _unwind(parent, label, self.neighbor_words)
        cd = (mats**2).sum(axis=(1, 2)) / 2
        sel = np.nonzero(cd <= np.cosh(radius) + 1e-12)[0]
        self._ball = Ball(radius, mats[sel], [words[i] for i in sel])
        return self._ball

    # -- classes ----------------------------------------------------------------
    def axis_distance(self, g) -> np.ndarray:
        """Distance from ``o`` to the axis of each matrix."""
        g = np.asarray(g)
        tr = np.abs(g[..., 0, 0] + g[..., 1, 1])
        ell = trace_length(tr)
        cd = (g**2).sum(axis=(-2, -1)) / 2
        sh = np.sqrt(np.maximum((cd - 1) / 2, 0))  # sinh(d/2)
        return np.arccosh(np.maximum(sh / np.sinh(ell / 2), 1.0))

    def recenter(self, g, word=()):
        """Conjugate ``g`` so that its axis passes within ``D`` of ``o``.

        Returns ``(h^-1 g h, word)`` where the conjugator minimises the axis
        distance (ties broken by matrix entries for determinism).
        """
        g = np.asarray(g, dtype=float)
        delta = float(self.axis_distance(g))
        if delta <= 1e-9:
            return g, tuple(word)
        B = self.ball(delta + self.covering_radius + 0.05)
        conj = np.einsum("nij,jk,nkl->nil", inv2(B.mats), g, B.mats)
        dist = self.axis_distance(conj)
        best = int(np.argmin(dist + 1e-12 * np.arange(len(dist))))
        hw = B.words[best]
        return conj[best], _reduce(invert(hw) + tuple(word) + hw, self.genus)


def _unwind(parent, label, gen_words):
    words = [()] * len(parent)
    for i in range(1, len(parent)):
        words[i] = words[parent[i]] + gen_words[label[i]]
    return [free_reduce(w) for w in words]


def _reduce(word, genus):
    w = free_reduce(word)
    return dehn_reduce(w, genus) if len(w) > 4 * genus else w


@lru_cache(maxsize=64)
def _geometry_cached(vec: tuple, genus: int, budget: int) -> SurfaceGeometry:
    return SurfaceGeometry(FNPoint.from_vector(vec, genus), budget)


def surface_geometry(x: FNPoint) -> SurfaceGeometry:
    return _geometry_cached(tuple(x.vector), x.genus, element_budget())


# --- axes -------------------------------------------------------------------

def fixed_vectors(g):
    """Projective vectors of the (repelling, attracting) fixed points.

    Works on stacks; points at infinity come out as ``(1, 0)``.
    """
    g = np.asarray(g, dtype=float)
    a, b, c, d = g[..., 0, 0], g[..., 0, 1], g[..., 1, 0], g[..., 1, 1]
    tr = a + d
    sgn = np.where(tr < 0, -1.0, 1.0)
    root = np.sqrt(np.maximum(tr * tr - 4, 0))
    out = []
    for lam in ((tr - sgn * root) / 2, (tr + sgn * root) / 2):
        v1 = np.stack([b, lam - a], axis=-1)
        v2 = np.stack([lam - d, c], axis=-1)
        n1 = np.linalg.norm(v1, axis=-1)
        n2 = np.linalg.norm(v2, axis=-1)
        v = np.where((n1 >= n2)[..., None], v1, v2)
        out.append(v / np.linalg.norm(v, axis=-1, keepdims=True))
    # with |lam| small the eigenvector is repelling
    return out[0], out[1]


def _axis_embedding(g):
    """Continuous injective embedding of the unoriented axis in R^4."""
    r, a = fixed_vectors(g)
    z1 = np.exp(2j * np.arctan2(r[..., 0], r[..., 1]))
    z2 = np.exp(2j * np.arctan2(a[..., 0], a[..., 1]))
    s1, s2 = z1 + z2, z1 * z2
    return np.stack([s1.real, s1.imag, s2.real, s2.imag], axis=-1)


def normalizer(g):
    """Map sending the axis of ``g`` to the imaginary axis.

    The attracting end goes to infinity and the foot of the perpendicular
    from ``o = i`` goes to ``i``.
    """
    r, a = fixed_vectors(g)
    T = np.array([[r[1], -r[0]], [a[1], -a[0]]])
    det = np.linalg.det(T)
    if det < 0:
        T[0] *= -1
        det = -det
    T = T / np.sqrt(det)
    w = (T[0, 0] * 1j + T[0, 1]) / (T[1, 0] * 1j + T[1, 1])
    k = abs(w)
    return np.diag([k**-0.5, k**0.5]) @ T


@dataclass
class GeodesicClass:
    """A primitive closed geodesic, carried by a lift whose axis passes near ``o``."""

    length: float
    trace: float
    matrix: np.ndarray = field(repr=False)
    word: tuple
    delta: float


class _UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, i):
        while self.p[i] != i:
            self.p[i] = self.p[self.p[i]]
            i = self.p[i]
        return i

    def union(self, i, j):
        a, b = self.find(i), self.find(j)
        if a != b:
            self.p[max(a, b)] = min(a, b)


def _word_sort_key(w):
    return (len(w), [(abs(x), x < 0) for x in w])


def enumerate_classes(geom: SurfaceGeometry, cutoff: float, tol: float = 1e-9) -> list[GeodesicClass]:
    """All primitive closed geodesics of length at most ``cutoff``."""
    from scipy.spatial import cKDTree

    D = geom.covering_radius
    r_enum = 2 * np.arcsinh(np.sinh(cutoff / 2) * np.cosh(D)) + 1e-6
    B = geom.ball(r_enum)
    M = B.mats
    tr = np.abs(M[:, 0, 0] + M[:, 1, 1])
    hyp = tr > 2 + 1e-12
    ell = np.full(len(M), np.inf)
    ell[hyp] = trace_length(tr[hyp])
    cand = np.nonzero(hyp & (ell <= cutoff + tol))[0]
    if not len(cand):
        return []
    delta = geom.axis_distance(M[cand])
    cand = cand[delta <= D + 1e-9]
    if not len(cand):
        return []
    emb = _axis_embedding(M[cand])
    # keep the shortest element on each axis (the primitive one)
    tree = cKDTree(emb)
    order = np.argsort(ell[cand], kind="stable")
    taken = np.zeros(len(cand), bool)
    prim = []
    for i in order:
        if taken[i]:
            continue
        for j in tree.query_ball_point(emb[i], 1e-6):
            taken[j] = True
        prim.append(cand[i])
    prim = np.array(prim)
    pemb = _axis_embedding(M[prim])
    ptree = cKDTree(pemb)
    uf = _UnionFind(len(prim))
    H = geom.ball(2 * D + cutoff / 2 + 0.1).mats
    Hinv = inv2(H)
    for i, idx in enumerate(prim):
        conj = np.einsum("nij,jk,nkl->nil", H, M[idx], Hinv)
        hits = ptree.query_ball_point(_axis_embedding(conj), 1e-6)
        for lst in hits:
            for j in lst:
                uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(len(prim)):
        groups.setdefault(uf.find(i), []).append(i)
    out = []
    pdelta = geom.axis_distance(M[prim])
    for members in groups.values():
        best = min(members, key=lambda i: (round(pdelta[i], 9), _word_sort_key(B.words[prim[i]])))
        idx = prim[best]
        word = _reduce(B.words[idx], geom.genus)
        out.append(
            GeodesicClass(float(ell[idx]), float(tr[idx]), M[idx].copy(), tuple(word), float(pdelta[best]))
        )
    out.sort(key=lambda c: (round(c.length, 9), _word_sort_key(c.word)))
    return out


@dataclass
class Crossing:
    """Transverse crossing of two closed geodesics.

    ``t1`` and ``t2`` are arc-length positions on the two fundamental
    segments, ``angle`` is measured counter-clockwise from the first curve
    to the (unoriented) second one, ``turn`` is +1 when the second curve's
    forward direction crosses from right to left of the first, and
    ``element`` maps the point ``Q2(t2)`` of the second lift to ``Q1(t1)``.
    """

    t1: float
    t2: float
    cos: float
    angle: float
    turn: int
    element: np.ndarray = field(repr=False)
    word: tuple


def _mpow(g, k):
    out = np.eye(2)
    base = g if k >= 0 else inv2(g)
    for _ in range(abs(k)):
        out = out @ base
    return out


def _wpow(w, k):
    return tuple(w) * k if k >= 0 else invert(w) * (-k)


def axis_crossings(geom: SurfaceGeometry, g1, w1, g2, w2, *, same=False, angle_tol=1e-7):
    """Crossings of the closed geodesics of ``g1`` and ``g2`` on the surface.

    Both matrices should already be recentred (axis within ``D`` of ``o``).
    With ``same=True`` the two curves are the same class and self-crossings
    are returned (each self-intersection appears twice).

    Returns
    -------
    crossings : list of Crossing
    coincident : bool
        True when some lift of the second curve shares the first axis.
    """
    g1 = np.asarray(g1, float)
    g2 = np.asarray(g2, float)
    ell1 = float(trace_length(abs(np.trace(g1))))
    ell2 = float(trace_length(abs(np.trace(g2))))
    d1 = float(geom.axis_distance(g1))
    d2 = float(geom.axis_distance(g2))
    B = geom.ball(d1 + d2 + (ell1 + ell2) / 2 + 0.2)
    T1 = normalizer(g1)
    T2 = normalizer(g2)
    r2, a2 = fixed_vectors(g2)
    TH = np.einsum("ij,njk->nik", T1, B.mats)
    pr = TH @ r2
    pa = TH @ a2
    scale = np.maximum(np.abs(pr).max(axis=1), 1.0)
    inf_r = np.abs(pr[:, 1]) < 1e-12 * np.abs(pr[:, 0])
    inf_a = np.abs(pa[:, 1]) < 1e-12 * np.abs(pa[:, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        xr = pr[:, 0] / pr[:, 1]
        xa = pa[:, 0] / pa[:, 1]
        coincident_mask = (inf_r & (np.abs(xa) < 1e-9)) | (inf_a & (np.abs(xr) < 1e-9))
        cross = (~inf_r) & (~inf_a) & (xr * xa < 0) & ~coincident_mask
    coincident = bool(coincident_mask.any()) and not same
    found: list[Crossing] = []
    g1i, g2i = inv2(g1), inv2(g2)
    for n in np.nonzero(cross)[0]:
        u, v = (xr[n], xa[n]) if xr[n] < xa[n] else (xa[n], xr[n])
        t = 0.5 * np.log(-u * v)
        c = (u + v) / (u - v)
        if not (-ell1 / 2 - 1e-6 <= t <= ell1 / 2 + 1e-6):
            continue
        s = np.sqrt(max(0.0, 1 - c * c))
        if s < angle_tol:
            # distinct geodesics never meet at angle zero: this lift shares the axis
            coincident = coincident or not same
            continue
        m = int(np.floor((t + ell1 / 2) / ell1))
        t1 = t - m * ell1
        # position on the second lift
        h = B.mats[n]
        W = T2 @ inv2(h) @ inv2(T1)
        z = 1j * np.exp(t)
        p = (W[0, 0] * z + W[0, 1]) / (W[1, 0] * z + W[1, 1])
        tt = float(np.log(p.imag))
        k = int(np.floor((tt + ell2 / 2) / ell2))
        t2 = tt - k * ell2
        elem = _mpow(g1, -m) @ h @ _mpow(g2, k)
        word = free_reduce(_wpow(w1, -m) + tuple(B.words[n]) + _wpow(w2, k))
        # forward direction of curve 2 goes left-to-right iff the repelling end is negative
        turn = -1 if xr[n] < xa[n] else 1
        found.append(Crossing(float(t1), float(t2), float(c), float(np.arccos(c)), turn, elem, word))
    # circular de-duplication on the first segment
    uniq: list[Crossing] = []
    for cr in found:
        dup = False
        for other in uniq:
            dt = abs(cr.t1 - other.t1)
            dt = min(dt, abs(ell1 - dt))
            if dt < 1e-7 and abs(cr.cos - other.cos) < 1e-7:
                dup = True
                break
        if not dup:
            uniq.append(cr)
    uniq.sort(key=lambda c: (c.t1, c.cos))
    return uniq, coincident


# --- class identity -------------------------------------------------------------

@dataclass
class Lift:
    """A recentred lift of a curve: matrix, word and geometric data."""

    matrix: np.ndarray = field(repr=False)
    word: tuple
    length: float
    delta: float


def lift_word(geom: SurfaceGeometry, word) -> Lift:
    from .errors import EllipticOrParabolic
    from .hyperbolic import word_matrix

    g = word_matrix(word, geom.gens)
    tr = abs(g[0, 0] + g[1, 1])
    if tr <= 2 + 1e-12:
        raise EllipticOrParabolic(f"word {word} is not hyperbolic")
    m, w = geom.recenter(g, word)
    return Lift(m, tuple(w), float(trace_length(tr)), float(geom.axis_distance(m)))


def lift_matrix(geom: SurfaceGeometry, g, word) -> Lift:
    tr = abs(g[0, 0] + g[1, 1])
    m, w = geom.recenter(g, word)
    return Lift(m, tuple(w), float(trace_length(tr)), float(geom.axis_distance(m)))


def same_class(geom: SurfaceGeometry, a: Lift, b: Lift, rtol: float = 1e-8) -> bool:
    """Whether two lifts represent the same unoriented closed geodesic.

    Powers are distinguished by length; conjugacy is found by searching the
    ball that must contain a conjugator when both axes pass near ``o``.
    """
    if abs(a.length - b.length) > rtol * max(1.0, a.length):
        return False
    B = geom.ball(a.delta + b.delta + a.length / 2 + 0.1)
    conj = np.einsum("nij,jk,nkl->nil", B.mats, a.matrix, inv2(B.mats))
    d = np.linalg.norm(_axis_embedding(conj) - _axis_embedding(b.matrix), axis=1)
    return bool(d.min() < 1e-6)


class CurveRegistry:
    """Assigns stable labels to closed-geodesic classes at one reference metric."""

    def __init__(self, geom: SurfaceGeometry):
        self.geom = geom
        self.lifts: list[Lift] = []
        self.names: list[str] = []

    def lookup(self, lift: Lift) -> int | None:
        for k, other in enumerate(self.lifts):
            if same_class(self.geom, lift, other):
                return k
        return None

    def register(self, lift: Lift, name: str | None = None) -> int:
        k = self.lookup(lift)
        if k is not None:
            return k
        from .words import format_word

        self.lifts.append(lift)
        self.names.append(name or format_word(lift.word))
        return len(self.lifts) - 1
