"""Curve systems, geodesic arrangements and horizon subcomplexes.

Intersection data are read off the geodesic representatives at a reference
metric.  The arrangement of a curve system is stored as a ribbon graph:
darts ``(vertex, curve, ±1)`` carry a cyclic order from the crossing angles,
faces are orbits of ``sigma ∘ alpha`` and each face boundary is followed in
the universal cover to get its holonomy.  A face is a disk exactly when that
holonomy is trivial; nontrivial face boundaries are the boundary curves of
the subsurface filled by the system.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateArrangement,
    DegenerateCrossing,
    NotFilling,
    SizeLimit,
    ValidationError,
)
from .geodesics import (
    CurveRegistry,
    Lift,
    axis_crossings,
    inv2,
    lift_matrix,
    lift_word,
    same_class,
    surface_geometry,
    _reduce,
)
from .hyperbolic import FNPoint
from .words import CurveClass, format_word, normal_form, reduce_word

MAX_CHAIN_SYSTEM = 20
PERTURBATION = 1e-3
MAX_RETRIES = 5
_SAME_POINT = 1e-8
_NEAR_POINT = 1e-5


# --- containers ---------------------------------------------------------------

@dataclass(frozen=True)
class Multicurve:
    """Pairwise disjoint, pairwise non-isotopic curves."""

    components: tuple[CurveClass, ...] = ()

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.components)

    def to_dict(self) -> dict:
        return {"components": [{"id": c.id, "word": format_word(c.word)} for c in self.components]}


@dataclass(frozen=True)
class CurveSystem:
    """An ordered finite set of curves, optionally with intersection numbers."""

    curves: tuple[CurveClass, ...]
    intersection_matrix: np.ndarray | None = field(default=None, compare=False, repr=False)
    candidate_systole: bool = False

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        if not self.curves:
            raise ValidationError("a curve system needs at least one curve")
        genera = {c.genus for c in self.curves}
        if len(genera) != 1:
            raise ValidationError("curves come from different genera")
        M = self.intersection_matrix
        if M is not None:
            M = np.asarray(M, dtype=int)
            if M.shape != (len(self), len(self)) or (M != M.T).any() or (np.diag(M) != 0).any():
                raise ValidationError("intersection matrix must be symmetric with zero diagonal")
            if (M < 0).any():
                raise ValidationError("intersection numbers are nonnegative")
            if self.candidate_systole and (M > 1).any():
                raise ValidationError("systole-type systems have pairwise intersections at most one")
            M.setflags(write=False)
            object.__setattr__(self, "intersection_matrix", M)

    @classmethod
    def from_words(cls, words: Iterable, genus: int = 2, ids: Sequence[str] | None = None, **kw):
        words = list(words)
        ids = ids or [f"c{k + 1}" for k in range(len(words))]
        return cls(tuple(reduce_word(w, genus, id=i) for w, i in zip(words, ids)), **kw)

    def __len__(self):
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    def __getitem__(self, k):
        return self.curves[k]

    @property
    def genus(self) -> int:
        return self.curves[0].genus

    @property
    def words(self) -> list[tuple]:
        return [c.word for c in self.curves]

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.curves]

    def subset(self, indices: Iterable[int]) -> "CurveSystem":
        idx = sorted(set(indices))
        M = None
        if self.intersection_matrix is not None:
            M = self.intersection_matrix[np.ix_(idx, idx)]
        return CurveSystem(tuple(self.curves[i] for i in idx), M, self.candidate_systole)

    def with_intersections(self, metric: FNPoint) -> "CurveSystem":
        data = pair_data(self, metric)
        return CurveSystem(self.curves, data.intersections, self.candidate_systole)

    def to_dict(self) -> dict:
        doc = {
            "genus": self.genus,
            "curves": [{"id": c.id, "word": format_word(c.word)} for c in self.curves],
        }
        if self.intersection_matrix is not None:
            doc["expected_intersections"] = self.intersection_matrix.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "CurveSystem":
        genus = int(doc.get("genus", 2))
        entries = doc["curves"]
        ids = [e.get("id") or f"c{k + 1}" for k, e in enumerate(entries)]
        return cls.from_words([e["word"] for e in entries], genus, ids)


# --- pairwise geometric data ---------------------------------------------------

@dataclass
class PairData:
    """Lifts and crossings of every pair of curves at one metric."""

    metric: FNPoint
    lifts: list[Lift]
    crossings: dict  # (i, j) with i < j  ->  list[Crossing]
    isotopic: set  # pairs (i, j) of isotopic curves
    intersections: np.ndarray

    @property
    def geometry(self):
        return surface_geometry(self.metric)


def _check_concurrency(n, crossings, lifts):
    """Reject near-coincident crossings that are not exactly concurrent."""
    for c in range(n):
        ts = []
        for (i, j), lst in crossings.items():
            if i == c:
                ts.extend(cr.t1 for cr in lst)
            elif j == c:
                ts.extend(cr.t2 for cr in lst)
        ts.sort()
        ell = lifts[c].length
        for a, b in zip(ts, ts[1:] + ts[:1]):
            gap = (b - a) % ell
            gap = min(gap, ell - gap)
            if len(ts) > 1 and _SAME_POINT < gap < _NEAR_POINT:
                raise DegenerateArrangement(f"crossings on curve {c} are {gap:.1e} apart")


def is_simple(word, metric: FNPoint) -> bool:
    """Whether the closed geodesic of ``word`` has no self-crossings."""
    geom = surface_geometry(metric)
    lift = lift_word(geom, tuple(word))
    own, _ = axis_crossings(geom, lift.matrix, lift.word, lift.matrix, lift.word, same=True)
    return not own


def _pair_data_at(words: tuple, genus: int, metric: FNPoint) -> PairData:
    geom = surface_geometry(metric)
    lifts = [lift_word(geom, w) for w in words]
    n = len(words)
    crossings: dict = {}
    isotopic = set()
    I = np.zeros((n, n), dtype=int)
    for i in range(n):
        own, _ = axis_crossings(geom, lifts[i].matrix, lifts[i].word, lifts[i].matrix, lifts[i].word, same=True)
        if own:
            raise ValidationError(
                f"curve {format_word(words[i])} is not simple ({len(own) // 2} self-crossings)"
            )
    for i, j in itertools.combinations(range(n), 2):
        li, lj = lifts[i], lifts[j]
        cr, coincident = axis_crossings(geom, li.matrix, li.word, lj.matrix, lj.word)
        if coincident or (not cr and same_class(geom, li, lj)):
            isotopic.add((i, j))
            cr = []
        crossings[(i, j)] = cr
        I[i, j] = I[j, i] = len(cr)
    _check_concurrency(n, crossings, lifts)
    return PairData(metric, lifts, crossings, isotopic, I)


@lru_cache(maxsize=128)
def _pair_data_cached(words: tuple, genus: int, vec: tuple) -> PairData:
    base = FNPoint.from_vector(vec, genus)
    rng = np.random.default_rng(20240917)
    last: Exception | None = None
    for attempt in range(MAX_RETRIES + 1):
        metric = base
        if attempt:
            v = np.asarray(vec) + PERTURBATION * rng.standard_normal(len(vec))
            metric = FNPoint.from_vector(v, genus)
        try:
            return _pair_data_at(words, genus, metric)
        except (DegenerateArrangement, DegenerateCrossing) as exc:
            last = exc
    raise DegenerateArrangement(f"arrangement still degenerate after {MAX_RETRIES} perturbations: {last}")


def pair_data(C: CurveSystem, metric: FNPoint) -> PairData:
    """Crossing data for all pairs, perturbing the metric if it is degenerate."""
    return _pair_data_cached(tuple(C.words), C.genus, tuple(map(float, metric.vector)))


def intersection_number(c1: CurveClass, c2: CurveClass, metric: FNPoint) -> int:
    """Geometric intersection number of two curves.

    Crossings of the geodesic representatives are counted; for ``c1 == c2``
    the self-intersection number is returned (0 for simple curves).
    Lifts sharing an axis count as the same curve, not as crossings.
    """
    geom = surface_geometry(metric)
    l1, l2 = lift_word(geom, c1.word), lift_word(geom, c2.word)
    if same_class(geom, l1, l2):
        own, _ = axis_crossings(geom, l1.matrix, l1.word, l1.matrix, l1.word, same=True)
        return len(own) // 2
    cr, coincident = axis_crossings(geom, l1.matrix, l1.word, l2.matrix, l2.word)
    return 0 if coincident else len(cr)


# --- ribbon graph ------------------------------------------------------------------

@dataclass
class Face:
    darts: list
    holonomy: np.ndarray = field(repr=False)
    word: tuple

    @property
    def is_disk(self) -> bool:
        F = self.holonomy
        scale = max(1.0, float(np.abs(F).max()))
        return min(np.abs(F - np.eye(2)).max(), np.abs(F + np.eye(2)).max()) < 1e-6 * scale


@dataclass
class Arrangement:
    """Ribbon graph of a geodesic arrangement.

    ``vertices[v]`` is the list of crossing records ``(i, j, crossing)``
    meeting at one surface point;
    ``free_loops`` lists curves that meet no other curve of the system.
    """

    curves: tuple[int, ...]
    vertices: list
    sigma: dict
    alpha: dict
    faces: list[Face]
    free_loops: list[int]
    components: list[list[int]]

    @property
    def V(self) -> int:
        return len(self.vertices)

    @property
    def E(self) -> int:
        return len(self.alpha) // 2

    @property
    def F(self) -> int:
        return len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.V - self.E + self.F

    @property
    def connected(self) -> bool:
        return len(self.components) == 1


def _components(idx, data: PairData):
    parent = {i: i for i in idx}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(idx, 2):
        if data.crossings[(i, j)]:
            parent[find(i)] = find(j)
    groups: dict = {}
    for i in idx:
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def _cluster_crossings(data: PairData, idx):
    """Group pairwise crossings into surface points.

    Several geodesics may pass through one point (in genus two this is forced
    at Weierstrass points), so a vertex is a set of crossing records.
    """
    records = [(i, j, cr) for i, j in itertools.combinations(idx, 2) for cr in data.crossings[(i, j)]]
    parent = list(range(len(records)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for c in idx:
        ell = data.lifts[c].length
        events = sorted(
            (cr.t1 if i == c else cr.t2, r) for r, (i, j, cr) in enumerate(records) if c in (i, j)
        )
        for (ta, ra), (tb, rb) in zip(events, events[1:] + events[:1]):
            gap = (tb - ta) % ell
            if ra != rb and min(gap, ell - gap) <= _SAME_POINT:
                parent[find(ra)] = find(rb)
    groups: dict = {}
    for r in range(len(records)):
        groups.setdefault(find(r), []).append(records[r])
    return sorted(groups.values(), key=lambda g: (g[0][0], g[0][1], g[0][2].t1))


def build_arrangement(data: PairData, indices: Iterable[int]) -> Arrangement:
    idx = tuple(sorted(set(indices)))
    # a class listed twice contributes one geodesic
    idx = tuple(c for c in idx if not any((b, c) in data.isotopic for b in idx if b < c))
    vertices = _cluster_crossings(data, idx)
    on_curve: dict[int, list] = {c: [] for c in idx}
    switch: dict = {}  # (v, c, c') -> element taking the c'-lift to the c-lift
    for v, recs in enumerate(vertices):
        placed = set()
        for i, j, cr in recs:
            for c, t in ((i, cr.t1), (j, cr.t2)):
                if c not in placed:
                    placed.add(c)
                    on_curve[c].append((t, v))
            switch[(v, i, j)] = (cr.element, tuple(cr.word))
            switch[(v, j, i)] = (inv2(cr.element), tuple(-x for x in reversed(cr.word)))
    free = [c for c in idx if not on_curve[c]]
    pos = {}
    alpha = {}
    for c, lst in on_curve.items():
        lst.sort()
        for k, (t, v) in enumerate(lst):
            pos[(v, c)] = t
            w = lst[(k + 1) % len(lst)][1]
            alpha[(v, c, 1)] = (w, c, -1)
            alpha[(w, c, -1)] = (v, c, 1)
    sigma = {}
    for v, recs in enumerate(vertices):
        ref = min(min(i, j) for i, j, _ in recs)
        fwd = {ref: 0.0}
        for i, j, cr in recs:
            phi = cr.angle if cr.turn > 0 else cr.angle + np.pi  # forward of j seen from i
            if i == ref:
                fwd[j] = phi
            elif j == ref:
                fwd[i] = -phi
        darts = []
        for c, phi in fwd.items():
            darts.append((phi % (2 * np.pi), (v, c, 1)))
            darts.append(((phi + np.pi) % (2 * np.pi), (v, c, -1)))
        darts.sort()
        for k in range(len(darts)):
            sigma[darts[k][1]] = darts[(k + 1) % len(darts)][1]

    faces = []
    seen = set()
    for d0 in sorted(alpha):
        if d0 in seen:
            continue
        F = np.eye(2)
        word: tuple = ()
        cycle = []
        d = d0
        while True:
            seen.add(d)
            cycle.append(d)
            v, c, s = d
            w = alpha[d][0]
            lift = data.lifts[c]
            tv, tw = pos[(v, c)], pos[(w, c)]
            if s > 0 and tw <= tv:
                F = F @ lift.matrix
                word = word + lift.word
            elif s < 0 and tw >= tv:
                F = F @ inv2(lift.matrix)
                word = word + tuple(-x for x in reversed(lift.word))
            nxt = sigma[(w, c, -s)]
            if nxt[1] != c:
                elem, ew = switch[(w, c, nxt[1])]
                F = F @ elem
                word = word + ew
            d = nxt
            if d == d0:
                break
        faces.append(Face(cycle, F, _reduce(word, data.metric.genus)))
    return Arrangement(idx, vertices, sigma, alpha, faces, free, _components(idx, data))


def curve_arrangement(C: CurveSystem, metric: FNPoint) -> Arrangement:
    """Ribbon graph of the geodesic representatives of ``C`` at ``metric``."""
    return build_arrangement(pair_data(C, metric), range(len(C)))


def _filling_from(data: PairData, idx, genus) -> bool:
    arr = build_arrangement(data, idx)
    if not arr.connected or arr.free_loops:
        return False
    return arr.euler_characteristic == 2 - 2 * genus and all(f.is_disk for f in arr.faces)


def is_filling(C: CurveSystem, metric: FNPoint) -> bool:
    """Whether the complement of ``C`` is a union of disks."""
    return _filling_from(pair_data(C, metric), range(len(C)), C.genus)


# --- boundary multicurves ---------------------------------------------------------

def _boundary_lifts(data: PairData, idx) -> list[Lift]:
    """Nontrivial boundary classes of a regular neighbourhood (unmerged)."""
    geom = data.geometry
    arr = build_arrangement(data, idx)
    out = [data.lifts[c] for c in arr.free_loops]
    for face in arr.faces:
        if not face.is_disk:
            out.append(lift_matrix(geom, face.holonomy, face.word))
    return out


def _as_multicurve(data: PairData, C: CurveSystem, lifts: list[Lift], registry: CurveRegistry | None):
    geom = data.geometry
    kept: list[Lift] = []
    for lf in lifts:
        if not any(same_class(geom, lf, other) for other in kept):
            kept.append(lf)
    comps = []
    for lf in kept:
        name = None
        for k, own in enumerate(data.lifts):
            if same_class(geom, lf, own):
                name = C[k].id
                break
        word = normal_form(lf.word, C.genus)
        if registry is not None:
            label = registry.register(lf, name)
            name = registry.names[label]
        comps.append(CurveClass(word, name or "m:" + format_word(word), C.genus))
    comps.sort(key=lambda c: c.id)
    return Multicurve(tuple(comps))


def boundary_multicurve(C: CurveSystem, metric: FNPoint, registry: CurveRegistry | None = None) -> Multicurve:
    """Boundary multicurve ``m(C)`` of the subsurface filled by ``C``.

    Disk-bounding boundaries are dropped and isotopic boundaries merged; the
    result is empty exactly when ``C`` fills.  When ``registry`` is given the
    component ids are the registry's labels, which makes multicurves from
    different systems comparable.
    """
    data = pair_data(C, metric)
    return _as_multicurve(data, C, _boundary_lifts(data, range(len(C))), registry)


# --- chains and horizon ------------------------------------------------------------

def _filling_table(data: PairData, n: int, genus: int) -> dict[int, bool]:
    fills: dict[int, bool] = {}
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            mask = sum(1 << i for i in combo)
            if any(fills.get(mask & ~(1 << i)) for i in combo):
                fills[mask] = True
            else:
                fills[mask] = size > 1 and _filling_from(data, combo, genus)
    return fills


def _maximal_nonfilling(fills: dict[int, bool], n: int) -> list[int]:
    out = []
    for mask, f in fills.items():
        if f:
            continue
        if all(fills[mask | (1 << i)] for i in range(n) if not mask & (1 << i)):
            out.append(mask)
    return sorted(out)


def _bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def nonfilling_chains(C: CurveSystem, metric: FNPoint) -> list[list[tuple[int, ...]]]:
    """All maximal chains ``C1 ⊊ … ⊊ Ck`` of nonfilling subsets of ``C``.

    Subsets are index tuples into ``C``.  Since nonfilling is closed under
    taking subsets, a maximal chain adds one curve at a time, starts at a
    singleton and ends at a maximal nonfilling subset.
    """
    n = len(C)
    if n > MAX_CHAIN_SYSTEM:
        raise SizeLimit(f"chain enumeration is limited to {MAX_CHAIN_SYSTEM} curves, got {n}")
    data = pair_data(C, metric)
    fills = _filling_table(data, n, C.genus)
    chains = []
    for top in _maximal_nonfilling(fills, n):
        for order in itertools.permutations(_bits(top)):
            chains.append([tuple(sorted(order[: k + 1])) for k in range(len(order))])
    chains.sort()
    return chains


def curve_complex_dimension(genus: int) -> int:
    """Dimension of the curve complex of a closed genus-``genus`` surface (maximal multicurves have ``3g-3`` curves)."""
    return 3 * genus - 4


def virtual_cohomological_dimension(genus: int) -> int:
    """Virtual cohomological dimension of the mapping class group, the least possible spine dimension."""
    return 4 * genus - 5


def boundary_sphere_dimension(genus: int) -> int:
    """Dimension of the spheres in the homotopy type of the curve complex."""
    return 2 * genus - 2


@dataclass
class HorizonComplex:
    """Simplicial complex of multicurves ordered by inclusion.

    ``vertices`` are multicurves given as sorted tuples of curve labels;
    ``simplices`` are tuples of vertex indices listed in increasing order of
    inclusion.  The complex is closed under faces.
    """

    vertices: list[tuple[str, ...]]
    simplices: list[tuple[int, ...]]
    provenance: list = field(default_factory=list, compare=False, repr=False)

    @property
    def dimension(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)

    def canonical(self) -> tuple[frozenset, frozenset]:
        verts = frozenset(self.vertices)
        simp = frozenset(frozenset(self.vertices[i] for i in s) for s in self.simplices)
        return verts, simp

    def __eq__(self, other):
        if not isinstance(other, HorizonComplex):
            return NotImplemented
        return self.canonical() == other.canonical()

    def is_face_closed(self) -> bool:
        have = {frozenset(s) for s in self.simplices}
        return all(frozenset(f) in have for s in self.simplices for k in range(1, len(s)) for f in itertools.combinations(s, k))

    def is_inclusion_ordered(self) -> bool:
        for s in self.simplices:
            for a, b in zip(s, s[1:]):
                if not set(self.vertices[a]) < set(self.vertices[b]):
                    return False
        return True

    def to_dict(self) -> dict:
        return {"vertices": [list(v) for v in self.vertices], "simplices": [list(s) for s in self.simplices]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "HorizonComplex":
        return cls([tuple(v) for v in doc["vertices"]], [tuple(s) for s in doc["simplices"]])


def _inclusion_chains(sets: list[frozenset]) -> set[tuple[frozenset, ...]]:
    """All chains (under strict inclusion) of a family of sets."""
    out = set()
    ordered = sorted(set(sets), key=lambda s: (len(s), sorted(s)))

    def grow(chain):
        out.add(tuple(chain))
        for s in ordered:
            if chain[-1] < s:
                grow(chain + [s])

    for s in ordered:
        grow([s])
    return out


def horizon_subcomplex(C: CurveSystem, metric: FNPoint, registry: CurveRegistry | None = None) -> HorizonComplex:
    """Subcomplex of the subdivided curve complex swept out by the horizon of ``Min(C)``.

    Each maximal nonfilling chain ``C1 ⊊ … ⊊ Ck`` contributes the multicurves
    ``m(C1), …, m(Ck)``; these are pairwise disjoint, so together they span a
    simplex of the curve complex.  Its image in the barycentric subdivision is
    recorded as all inclusion chains among unions of the ``m(Ci)``.
    """
    if not is_filling(C, metric):
        raise NotFilling("the horizon is only defined for filling systems")
    data = pair_data(C, metric)
    registry = registry or CurveRegistry(data.geometry)
    for k, lf in enumerate(data.lifts):
        registry.register(lf, C[k].id)
    cache: dict = {}

    def m(subset):
        if subset not in cache:
            mc = _as_multicurve(data, C, _boundary_lifts(data, subset), registry)
            cache[subset] = frozenset(mc.ids)
        return cache[subset]

    simplices: set[frozenset] = set()
    provenance = []
    for chain in nonfilling_chains(C, metric):
        blocks = list(dict.fromkeys(m(s) for s in chain))
        unions = {frozenset().union(*combo) for r in range(1, len(blocks) + 1) for combo in itertools.combinations(blocks, r)}
        for ch in _inclusion_chains(list(unions)):
            simplices.add(ch)
        provenance.append([[C[i].id for i in s] for s in chain])
    verts = sorted({v for ch in simplices for v in ch}, key=lambda v: (len(v), sorted(v)))
    index = {v: k for k, v in enumerate(verts)}
    simp = sorted({tuple(index[v] for v in ch) for ch in simplices}, key=lambda s: (len(s), s))
    return HorizonComplex([tuple(sorted(v)) for v in verts], simp, provenance)
