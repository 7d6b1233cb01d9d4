"""Short closed geodesics and systoles of a point in Teichmüller space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geodesics import enumerate_classes, surface_geometry
from .hyperbolic import PANTS_WORDS, FNPoint, GeodesicLengthReport, lengths_of
from .topology import CurveSystem, pair_data
from .words import CurveClass, format_word

HARD_CUTOFF = 8.0
SYSTOLE_TOL = 1e-7


def enumerate_short_geodesics(x: FNPoint, cutoff: float, hard_cap: float = HARD_CUTOFF) -> list[GeodesicLengthReport]:
    """Every closed geodesic of length at most ``cutoff``, once per unoriented class.

    Raises
    ------
    ValidationError
        If ``cutoff`` exceeds ``hard_cap``.
    SearchBudgetExceeded
        If the group ball needed for a complete search is too large.
    """
    if cutoff > hard_cap:
        raise ValidationError(f"cutoff {cutoff} exceeds the hard cap {hard_cap}")
    geom = surface_geometry(x)
    out = []
    for cls in enumerate_classes(geom, cutoff):
        curve = CurveClass(cls.word, genus=x.genus)
        out.append(GeodesicLengthReport(curve, cls.length, cls.trace))
    return out


@dataclass(frozen=True)
class SystoleSet:
    """All shortest closed geodesics at ``base``."""

    base: FNPoint
    value: float
    curves: CurveSystem
    tolerance: float
    lengths: tuple[float, ...] = ()
    near_misses: tuple[float, ...] = ()

    def __len__(self):
        return len(self.curves)


def _systole_bound(x: FNPoint) -> float:
    probes = list(PANTS_WORDS) + [(2,), (4,), (1, 2), (3, 4)]
    return float(np.min(lengths_of(probes, x.vector)))


def systoles(x: FNPoint, tol: float = SYSTOLE_TOL, *, check_intersections: bool = True) -> SystoleSet:
    """The systole set at ``x``.

    Curves whose lengths lie within ``tol`` of the minimum are members; the
    lengths of any curves within ``10 tol`` but outside ``tol`` are reported
    in ``near_misses`` so that callers can detect ambiguous ties.
    """
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    bound = _systole_bound(x)
    reports = enumerate_short_geodesics(x, bound + 10 * tol + 1e-9, hard_cap=max(HARD_CUTOFF, bound + 1))
    value = reports[0].length
    members = [r for r in reports if r.length <= value + tol]
    near = tuple(r.length for r in reports if value + tol < r.length <= value + 10 * tol)
    curves = tuple(
        CurveClass(r.curve.word, id=f"s{k + 1}", genus=x.genus) for k, r in enumerate(members)
    )
    system = CurveSystem(curves)
    if check_intersections and len(system) > 1:
        I = pair_data(system, x).intersections
        system = CurveSystem(curves, I, candidate_systole=True)
    return SystoleSet(x, value, system, tol, tuple(r.length for r in members), near)


def systole_value(x: FNPoint) -> float:
    """``f_sys(x)``."""
    return systoles(x, check_intersections=False).value


def describe(reports: list[GeodesicLengthReport]) -> list[tuple[str, float, float]]:
    return [(format_word(r.curve.word), r.length, r.trace) for r in reports]
