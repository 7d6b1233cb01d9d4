"""The Bolza surface and the six-curve system on it.

Coordinates were obtained by matching the length spectrum of the regular
octagon group (``scripts/derive_bolza.py``) and then recognised in closed
form.  In the pants decomposition ``(a1, a2, [a1, b1])``:

* Bolza point: ``(s, s, L, s/2, s/2, -L/4)`` with ``s = 2 arccosh(1+√2)``
  (the systole) and ``L = 2 arccosh(11+8√2)``.
* Six-curve critical point: ``(r, r, R, 0, r, -R/4)`` with
  ``r = 2 arccosh 2`` and ``R = 2 arccosh 17``.  Here the six curves are the
  systoles, all of length ``r``, meeting at right angles, and their
  gradients span a 3-dimensional space.

At the Bolza point the same six curves are systoles (of length ``s``) whose
gradients are linearly independent: they label a facet of the polytope of
negative systole gradients.
"""

from __future__ import annotations

import numpy as np

from .hyperbolic import FNPoint
from .topology import CurveSystem

BOLZA_SYSTOLE = 2 * np.arccosh(1 + np.sqrt(2))
BOLZA_SEPARATING = 2 * np.arccosh(11 + 8 * np.sqrt(2))
SIX_CURVE_SYSTOLE = 2 * np.arccosh(2.0)
SIX_CURVE_SEPARATING = 2 * np.arccosh(17.0)

#: length spectrum of the Bolza surface below 7: (length, number of classes)
BOLZA_SPECTRUM = (
    (BOLZA_SYSTOLE, 12),
    (2 * np.arccosh(3 + 2 * np.sqrt(2)), 12),
    (2 * np.arccosh(5 + 3 * np.sqrt(2)), 24),
    (2 * np.arccosh(7 + 5 * np.sqrt(2)), 48),
)

SIX_CURVE_WORDS = (
    "a1",
    "b1",
    "a2",
    "a2 b2",
    "a2 b2 a1",
    "a1 b1^-1 a1^-1 a2^-1",
)

#: the twelve systoles of the Bolza surface
BOLZA_SYSTOLE_WORDS = (
    "a1",
    "b1",
    "a2",
    "a1 b1",
    "a2 b2",
    "b1^-1 a1^-1 a2^-1",
    "a2 b2 a1",
    "a2 b2 a2^-1",
    "a1 b1^-1 a1^-1 a2^-1",
    "a1 b1^-1 a1^-1 b2",
    "a1 a2 b2 a2^-1",
    "a2 b2 a1 b1",
)


def bolza_point() -> FNPoint:
    s, L = BOLZA_SYSTOLE, BOLZA_SEPARATING
    return FNPoint((s, s, L), (s / 2, s / 2, -L / 4), 2)


def six_curve_critical_point() -> FNPoint:
    r, R = SIX_CURVE_SYSTOLE, SIX_CURVE_SEPARATING
    return FNPoint((r, r, R), (0.0, r, -R / 4), 2)


def six_curve_system() -> CurveSystem:
    return CurveSystem.from_words(SIX_CURVE_WORDS, 2, [f"c{k + 1}" for k in range(6)], candidate_systole=True)


def bolza_systoles() -> CurveSystem:
    return CurveSystem.from_words(
        BOLZA_SYSTOLE_WORDS, 2, [f"s{k + 1}" for k in range(12)], candidate_systole=True
    )


def bolza_preset() -> tuple[FNPoint, CurveSystem]:
    """The Bolza point together with the six-curve system."""
    return bolza_point(), six_curve_system()
