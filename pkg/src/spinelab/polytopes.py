"""The polytope of negative length gradients at a point and its normal fan.

``D(p) = conv{-∇L(c)(p)}`` is computed by brute force: every affinely
independent subset of ``k`` points (``k`` = affine dimension) spanning a
supporting hyperplane gives a facet, and faces are intersections of facets.
The normal fan ``V(p)`` is computed separately from the facet normals and
its inclusion order is compared with the face order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTolerance, ProbeInconclusive, RankDeficient, NoConvergence, ValidationError
from .hyperbolic import FNPoint, lengths_of
from .minima import GradientFrame, locus_project, numerical_rank
from .topology import CurveSystem

MAX_POINTS = 25
_PLANE_TOL = 1e-8


@dataclass(frozen=True)
class Face:
    labels: tuple[int, ...]
    dimension: int
    functional: np.ndarray = field(compare=False, repr=False)
    offset: float = field(compare=False, default=0.0)


@dataclass
class FaceLattice:
    """Face poset of the convex hull of ``points``.

    ``faces`` run over all nonempty faces including the polytope itself,
    sorted by dimension then labels; ``incidence[i]`` lists the faces that
    contain face ``i`` as a facet of it (covering relation).
    """

    points: np.ndarray
    faces: list[Face]
    incidence: dict[int, list[int]]
    dimension: int
    frame: np.ndarray = field(repr=False)  # orthonormal basis of the affine directions
    centre: np.ndarray = field(repr=False)

    def index(self, labels) -> int:
        key = tuple(sorted(labels))
        for k, f in enumerate(self.faces):
            if f.labels == key:
                return k
        raise KeyError(labels)

    def by_dimension(self, d: int) -> list[Face]:
        return [f for f in self.faces if f.dimension == d]

    @property
    def vertices(self) -> list[int]:
        return [f.labels[0] for f in self.faces if f.dimension == 0]

    @property
    def facets(self) -> list[Face]:
        return self.by_dimension(self.dimension - 1)

    def leq(self, i: int, j: int) -> bool:
        return set(self.faces[i].labels) <= set(self.faces[j].labels)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "faces": [
                {"labels": list(f.labels), "dimension": f.dimension, "functional": list(map(float, f.functional)), "offset": float(f.offset)}
                for f in self.faces
            ],
        }

    def to_dot(self, names=None) -> str:
        names = names or [str(i) for i in range(len(self.points))]
        lines = ["digraph faces {", "  rankdir=BT;"]
        for k, f in enumerate(self.faces):
            lab = ",".join(names[i] for i in f.labels)
            lines.append(f'  f{k} [label="{lab}"];')
        for k, ups in sorted(self.incidence.items()):
            for u in ups:
                lines.append(f"  f{k} -> f{u};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _affine_frame(P):
    centre = P.mean(axis=0)
    Q = P - centre
    if not len(Q) or np.abs(Q).max() < 1e-14:
        return centre, np.zeros((0, P.shape[1]))
    _, s, Vt = np.linalg.svd(Q, full_matrices=False)
    k = int((s > 1e-9 * max(1.0, s[0])).sum())
    return centre, Vt[:k]


def build_face_lattice(source, negate: bool = True) -> FaceLattice:
    """Face lattice of ``conv`` of the rows (negated gradients by default).

    ``source`` is a :class:`GradientFrame` or a matrix of rows.

    Raises
    ------
    ValidationError
        If there are more than 25 points.
    DegenerateTolerance
        If two points nearly but not exactly coincide.
    """
    G = source.gradients if isinstance(source, GradientFrame) else np.atleast_2d(np.asarray(source, float))
    P = -G if negate else G.copy()
    n = len(P)
    if n > MAX_POINTS:
        raise ValidationError(f"brute-force hulls are limited to {MAX_POINTS} points")
    for i, j in itertools.combinations(range(n), 2):
        dist = np.linalg.norm(P[i] - P[j])
        if dist < 1e-10:
            raise DegenerateTolerance(f"points {i} and {j} coincide within 1e-10")
    centre, B = _affine_frame(P)
    k = len(B)
    Y = (P - centre) @ B.T  # coordinates in the affine hull
    scale = max(1.0, float(np.abs(Y).max(initial=0.0)))
    facets: dict[tuple, tuple[np.ndarray, float]] = {}
    if k == 0:
        facet_sets = []
    elif k == 1:
        lo, hi = Y[:, 0].min(), Y[:, 0].max()
        facet_sets = []
        for sgn, val in ((-1.0, lo), (1.0, hi)):
            on = tuple(int(i) for i in np.nonzero(np.abs(Y[:, 0] - val) < _PLANE_TOL * scale)[0])
            facets[on] = (np.array([sgn]), sgn * val)
            facet_sets.append(on)
    else:
        for combo in itertools.combinations(range(n), k):
            M = Y[list(combo)]
            D = M[1:] - M[0]
            _, s, Vt = np.linalg.svd(D)
            if s[-1] < 1e-9 * scale:
                continue
            normal = Vt[-1]
            h = normal @ M[0]
            vals = Y @ normal - h
            if vals.max() > _PLANE_TOL * scale:
                if vals.min() < -_PLANE_TOL * scale:
                    continue
                normal, h, vals = -normal, -h, -vals
            on = tuple(int(i) for i in np.nonzero(np.abs(vals) <= _PLANE_TOL * scale)[0])
            if on not in facets:
                facets[on] = (normal, h)
        facet_sets = list(facets)
    # faces are intersections of facets
    faces_sets: set[tuple] = {tuple(range(n))}
    frontier = set(facet_sets)
    while frontier:
        faces_sets |= frontier
        new = set()
        for a in frontier:
            for b in facet_sets:
                inter = tuple(sorted(set(a) & set(b)))
                if inter and inter not in faces_sets:
                    new.add(inter)
        frontier = new
    faces = []
    for labels in faces_sets:
        dim = numerical_rank(Y[list(labels)] - Y[labels[0]], 1e-9) if len(labels) > 1 else 0
        if len(labels) > 1 and np.abs(Y[list(labels)] - Y[labels[0]]).max() < 1e-12:
            dim = 0
        containing = [facets[f] for f in facet_sets if set(labels) <= set(f)]
        if containing:
            u = sum(nv for nv, _ in containing)
            h = float(sum(hv for _, hv in containing))
        else:
            u, h = np.zeros(k), 0.0
        functional = B.T @ u if k else np.zeros(P.shape[1])
        offset = h + float(functional @ centre)
        faces.append(Face(tuple(labels), int(dim), functional, offset))
    faces.sort(key=lambda f: (f.dimension, f.labels))
    incidence: dict[int, list[int]] = {i: [] for i in range(len(faces))}
    for i, fi in enumerate(faces):
        for j, fj in enumerate(faces):
            if fj.dimension == fi.dimension + 1 and set(fi.labels) < set(fj.labels):
                incidence[i].append(j)
    return FaceLattice(P, faces, incidence, k, B, centre)


# --- normal fan ---------------------------------------------------------------------

@dataclass
class FanCell:
    labels: tuple[int, ...]
    dimension: int
    generators: np.ndarray = field(repr=False)  # rays of the cone (plus ± lineality basis)


@dataclass
class NormalFan:
    cells: list[FanCell]
    ambient: int

    def contains(self, i: int, j: int, points: np.ndarray) -> bool:
        """Whether cell ``i`` is contained in cell ``j``.

        Each generator of cell ``i`` must attain its maximum over the points
        on every label of cell ``j``.
        """
        for u in self.cells[i].generators:
            vals = points @ u
            top = vals.max()
            tol = 1e-8 * max(1.0, np.abs(vals).max())
            if (np.abs(vals[list(self.cells[j].labels)] - top) > tol).any():
                return False
        return True


def dual_fan(lattice: FaceLattice) -> NormalFan:
    """Normal fan of the hull: one cone of maximising functionals per face."""
    P = lattice.points
    d = P.shape[1]
    B = lattice.frame
    # lineality: directions orthogonal to the affine hull
    if len(B):
        _, _, Vt = np.linalg.svd(np.vstack([B, np.zeros((d - len(B), d))]) if len(B) < d else B)
        lin = Vt[len(B):] if len(B) < d else np.zeros((0, d))
    else:
        lin = np.eye(d)
    facets = lattice.facets if lattice.dimension > 0 else []
    cells = []
    for f in lattice.faces:
        rays = [g.functional / np.linalg.norm(g.functional) for g in facets if set(f.labels) <= set(g.labels)]
        gens = np.array(rays + list(lin) + list(-lin)) if (rays or len(lin)) else np.zeros((0, d))
        dim = numerical_rank(np.array(rays + list(lin)), 1e-9) if (rays or len(lin)) else 0
        # the labels are recomputed from a relative-interior functional
        u = np.sum(rays, axis=0) if rays else np.zeros(d)
        vals = P @ u
        tol = 1e-8 * max(1.0, np.abs(vals).max())
        labels = tuple(int(i) for i in np.nonzero(vals >= vals.max() - tol)[0])
        cells.append(FanCell(labels, int(dim), gens))
    return NormalFan(cells, d)


def check_duality(lattice: FaceLattice, fan: NormalFan) -> bool:
    """Exact anti-isomorphism test between the face poset and the fan poset."""
    if len(lattice.faces) != len(fan.cells):
        return False
    for i, f in enumerate(lattice.faces):
        if fan.cells[i].labels != f.labels:
            return False
        if fan.cells[i].dimension != fan.ambient - f.dimension:
            return False
    P = lattice.points
    for i, j in itertools.product(range(len(lattice.faces)), repeat=2):
        if lattice.leq(i, j) != fan.contains(j, i, P):
            return False
    return True


# --- folding ---------------------------------------------------------------------------

@dataclass
class FoldingReport:
    facet: tuple[int, ...]
    dependent: bool
    folded_faces: list[tuple[int, ...]]
    hinge: tuple[int, ...]
    probes: dict = field(default_factory=dict, repr=False)


def affinely_dependent(P) -> bool:
    P = np.atleast_2d(P)
    if len(P) <= 1:
        return False
    return numerical_rank(P[1:] - P[0], 1e-9) < len(P) - 1


def detect_folding(lattice: FaceLattice, facet, *, probe=None) -> FoldingReport:
    """Report whether a facet's labelled points are affinely dependent and, if
    so, how it folds.

    ``probe(subset) -> bool`` decides whether a genuine equal-length locus
    exists near the base point for a subset; it is required only for
    dependent facets.  The folded faces are the maximal accepted subsets.
    """
    facet = tuple(sorted(facet))
    lattice.index(facet)
    P = lattice.points[list(facet)]
    if not affinely_dependent(P):
        return FoldingReport(facet, False, [facet], ())
    if probe is None:
        raise ProbeInconclusive("a dependent facet needs a probe to resolve its folding")
    k = numerical_rank(P[1:] - P[0], 1e-9)
    results = {}
    for size in range(len(facet) - 1, k, -1):
        for sub in itertools.combinations(facet, size):
            if any(set(sub) <= set(a) for a, ok in results.items() if ok):
                continue
            if numerical_rank(lattice.points[list(sub)][1:] - lattice.points[sub[0]], 1e-9) < k:
                continue
            results[sub] = bool(probe(sub))
    accepted = [s for s, ok in results.items() if ok]
    maximal = [s for s in accepted if not any(set(s) < set(t) for t in accepted)]
    if not maximal:
        raise ProbeInconclusive("no candidate split admits a nearby locus")
    hinge = tuple(sorted(set.intersection(*(set(s) for s in maximal)))) if len(maximal) > 1 else ()
    return FoldingReport(facet, True, sorted(maximal), hinge, results)


# --- strata -----------------------------------------------------------------------------

@dataclass
class StratumPrediction:
    base: FNPoint
    subsets: list[tuple[int, ...]]
    confidence: dict
    confirmations: dict = field(default_factory=dict)
    curves: CurveSystem | None = None


def sample_stratum(p: FNPoint, C: CurveSystem, subset, direction, *, steps=(2e-2, 1e-2, 5e-3), tol: float = 1e-6):
    """Look for a point near ``p`` whose systole set (within ``C``) is exactly ``subset``.

    Moves from ``p`` along ``direction``, projects onto the equal-length
    locus of the subset and compares the lengths of all curves of ``C``.
    Returns the confirming point or ``None``.
    """
    from .spectrum import systoles

    sub = list(subset)
    S = C.subset(sub)
    direction = np.asarray(direction, float)
    direction = direction / np.linalg.norm(direction)
    for t in steps:
        x0 = FNPoint.from_vector(p.vector + t * direction, p.genus)
        try:
            pt = locus_project(x0, S) if len(sub) > 1 else type("P", (), {"base": x0})()
        except (RankDeficient, NoConvergence):
            continue
        x = pt.base
        L = lengths_of(C.words, x.vector)
        m = L[sub].max()
        others = np.delete(L, sub)
        if others.size and others.min() <= m + tol:
            continue
        # the subset must be the systole set of the surface, not just of C
        sys_set = systoles(x, tol, check_intersections=False)
        if len(sys_set.curves) == len(sub) and abs(sys_set.value - m) < tol:
            return x
    return None


def predict_adjacent_strata(p: FNPoint, C: CurveSystem | None = None, *, validate: bool = True) -> StratumPrediction:
    """Subsets of the systoles at ``p`` that label strata adjacent to ``p``.

    These are the labels of proper faces of ``D(p)`` (equivalently cells of
    ``V(p)``).  Subsets with linearly independent gradients are marked
    ``certified`` and, when ``validate`` is set, confirmed by sampling.
    """
    from .spectrum import systoles

    if C is None:
        C = systoles(p).curves
    frame = GradientFrame.at(C, p)
    lattice = build_face_lattice(frame)
    subsets, conf, confirmations = [], {}, {}
    for f in lattice.faces:
        if f.dimension >= lattice.dimension:
            continue
        lab = f.labels
        subsets.append(lab)
        indep = numerical_rank(frame.gradients[list(lab)]) == len(lab)
        conf[lab] = "certified" if indep else "first_order_only"
        if validate and indep:
            # move where the face's curves shrink slowest, i.e. along its normal
            u = f.functional
            confirmations[lab] = sample_stratum(p, C, lab, u) is not None
    return StratumPrediction(p, subsets, conf, confirmations, C)


def equivalent_strata(C1: CurveSystem, C2: CurveSystem, x0: FNPoint, profiles: int = 10, seed: int = 0) -> bool:
    """Whether ``Min(C1) = Min(C2)``, tested on random weight profiles.

    Minimisers of random positive combinations of each system are checked
    for membership in the set of minima of the other.
    """
    from .minima import LengthFunctional, min_membership, minimize_length_functional

    rng = np.random.default_rng(seed)
    for _ in range(profiles):
        for A, B in ((C1, C2), (C2, C1)):
            w = rng.uniform(0.5, 2.0, len(A))
            x = minimize_length_functional(LengthFunctional(A, tuple(w)), x0).minimizer
            if min_membership(B, x) == "outside":
                return False
    return True
