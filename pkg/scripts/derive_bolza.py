"""Re-derive the Bolza constants used by the package from an independent model.

The regular octagon group (the four side pairings of the regular octagon
with interior angles pi/4) is built directly in PSL(2,R), and its length
spectrum below 7 is compared with the one computed from the Fenchel-Nielsen
preset.  The six-curve critical point is then recovered by minimising the
equal-weight length sum from the Bolza point.

Run:  python scripts/derive_bolza.py
"""

from __future__ import annotations

import json

import numpy as np

from spinelab.bolza import (
    BOLZA_SEPARATING,
    BOLZA_SPECTRUM,
    BOLZA_SYSTOLE,
    SIX_CURVE_SEPARATING,
    SIX_CURVE_SYSTOLE,
    bolza_point,
    six_curve_critical_point,
    six_curve_system,
)
from spinelab.minima import LengthFunctional, minimize_length_functional
from spinelab.spectrum import enumerate_short_geodesics

CUTOFF = 7.0


def octagon_generators() -> list[np.ndarray]:
    """Side pairings of the regular octagon with angles pi/4, as real 2x2 matrices."""
    d = 2 * np.arccosh(1 + np.sqrt(2))
    cayley = np.array([[1j, 1j], [-1, 1]]) / np.sqrt(2j)
    T = np.array([[np.cosh(d / 2), np.sinh(d / 2)], [np.sinh(d / 2), np.cosh(d / 2)]], complex)
    gens = []
    for k in range(4):
        rot = np.diag([np.exp(1j * k * np.pi / 8), np.exp(-1j * k * np.pi / 8)])
        g = cayley @ rot @ T @ np.linalg.inv(rot) @ np.linalg.inv(cayley)
        gens.append(g.real)
    return gens


def translation_lengths(gens, radius: float) -> np.ndarray:
    """Translation lengths of all elements moving ``i`` by at most ``radius``."""
    G = gens + [np.linalg.inv(g) for g in gens]
    bound = np.cosh(radius)
    seen = {tuple(np.round(np.eye(2).ravel(), 7))}
    frontier, found = [np.eye(2)], []
    while frontier:
        nxt = []
        for m in frontier:
            for g in G:
                p = m @ g
                p = p * np.sign(p.ravel()[np.argmax(np.abs(p.ravel()) > 1e-9)])
                if (p**2).sum() / 2 > bound:
                    continue
                key = tuple(np.round(p.ravel(), 7))
                if key in seen:
                    continue
                seen.add(key)
                nxt.append(p)
                found.append(p)
        frontier = nxt
    tr = np.abs(np.array([np.trace(p) for p in found]))
    return 2 * np.arccosh(tr[tr > 2 + 1e-9] / 2)


def main() -> dict:
    # a closed geodesic of length l has a lift whose axis meets the octagon,
    # so its translation moves the centre by at most l + 2 * (octagon radius)
    octagon_radius = np.arccosh(1 + np.sqrt(2))
    oct_lengths = translation_lengths(octagon_generators(), CUTOFF + 2 * octagon_radius)
    oct_values = np.unique(np.round(oct_lengths[oct_lengths < CUTOFF], 6))
    # powers of shorter elements are not primitive geodesics
    ratios = oct_values[:, None] / oct_values[None, :]
    power = ((np.abs(ratios - np.round(ratios)) < 1e-5) & (np.round(ratios) >= 2)).any(axis=1)
    oct_values = oct_values[~power]

    reports = enumerate_short_geodesics(bolza_point(), CUTOFF)
    fn_lengths = np.array([r.length for r in reports])
    fn_values, counts = np.unique(np.round(fn_lengths, 6), return_counts=True)

    closed = np.array([v for v, _ in BOLZA_SPECTRUM])
    mult = [m for _, m in BOLZA_SPECTRUM]

    F = LengthFunctional.equal(six_curve_system())
    res = minimize_length_functional(F, bolza_point(), tol=1e-9)
    p6 = six_curve_critical_point()

    out = {
        "octagon_spectrum": oct_values.tolist(),
        "fn_spectrum": fn_values.tolist(),
        "fn_multiplicities": counts.tolist(),
        "spectra_agree": bool(np.array_equal(oct_values, fn_values)),
        "closed_forms_agree": bool(np.allclose(fn_values, np.round(closed, 6), atol=2e-6)),
        "multiplicities_agree": counts.tolist() == mult,
        "systole": BOLZA_SYSTOLE,
        "separating": BOLZA_SEPARATING,
        "six_curve_minimizer": res.minimizer.vector.tolist(),
        "six_curve_closed_form": p6.vector.tolist(),
        "six_curve_gap": float(np.abs(res.minimizer.vector - p6.vector).max()),
        "six_curve_constants": [SIX_CURVE_SYSTOLE, SIX_CURVE_SEPARATING],
    }
    return out


if __name__ == "__main__":
    print(json.dumps(main(), indent=2))
