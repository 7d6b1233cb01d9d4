"""Small dense linear programs solved by the simplex method with Bland's rule.

Problems have the form ``min c·x`` subject to ``A x = b`` with ``x >= 0``
except for variables flagged free.  Infeasible problems come back with a
Farkas certificate ``y``: ``Aᵀy <= 0`` and ``b·y > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LPNumerics

_TOL = 1e-10
MAX_PIVOTS = 5000


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    value: float | None
    farkas: np.ndarray | None = None
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def _pivot(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T, basis, allowed, tol):
    """Minimise the objective held in the last row of ``T`` (Bland's rule)."""
    m = T.shape[0] - 1
    pivots = 0
    while True:
        cost = T[-1, :-1]
        enter = next((j for j in range(len(cost)) if allowed[j] and cost[j] < -tol), None)
        if enter is None:
            return "optimal", pivots
        colv = T[:m, enter]
        ratios = [
            (T[i, -1] / colv[i], basis[i], i) for i in range(m) if colv[i] > tol
        ]
        if not ratios:
            return "unbounded", pivots
        best = min(r[0] for r in ratios)
        leave = min((r for r in ratios if r[0] <= best + tol * max(1.0, abs(best))), key=lambda r: r[1])[2]
        _pivot(T, leave, enter)
        basis[leave] = enter
        pivots += 1
        if pivots > MAX_PIVOTS:
            raise LPNumerics("simplex exceeded the pivot limit")


def simplex(c, A, b, free=None, tol: float = _TOL) -> LPResult:
    """Solve ``min c·x, A x = b, x >= 0`` (free variables allowed).

    Returns
    -------
    LPResult
        ``x`` is reported in the original variables.  When infeasible,
        ``farkas`` holds ``y`` with ``Aᵀy <= 0`` and ``b·y > 0``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    m, n = A.shape
    free = np.zeros(n, bool) if free is None else np.asarray(free, bool)
    # split free variables x = x⁺ - x⁻
    cols = [A[:, j] for j in range(n)] + [-A[:, j] for j in np.nonzero(free)[0]]
    costs = list(c) + [-c[j] for j in np.nonzero(free)[0]]
    Aw = np.column_stack(cols) if cols else np.zeros((m, 0))
    cw = np.array(costs)
    N = Aw.shape[1]
    scale = max(1.0, float(np.abs(Aw).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    tol_s = tol * scale

    sign = np.where(b < 0, -1.0, 1.0)
    As = Aw * sign[:, None]
    bs = b * sign
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = As
    T[:m, N : N + m] = np.eye(m)
    T[:m, -1] = bs
    T[-1, :N] = -As.sum(axis=0)
    T[-1, -1] = -bs.sum()
    basis = list(range(N, N + m))
    allowed = np.ones(N + m, bool)
    status, piv = _run(T, basis, allowed, tol_s)
    w = -T[-1, -1]
    if w > tol_s * max(1, m):
        # phase-one duals: reduced cost of artificial i is 1 - y_i
        y = (1.0 - T[-1, N : N + m]) * sign
        return LPResult("infeasible", None, None, farkas=y, pivots=piv)
    # drive artificial variables out of the basis
    keep = list(range(m))
    for i in range(m):
        if basis[i] >= N:
            j = next((j for j in range(N) if abs(T[i, j]) > tol_s), None)
            if j is None:
                keep.remove(i)  # redundant row
            else:
                _pivot(T, i, j)
                basis[i] = j
    T = np.vstack([T[keep], T[-1:]])
    basis = [basis[i] for i in keep]
    T = np.delete(T, np.s_[N : N + m], axis=1)
    # phase two
    T[-1, :] = 0.0
    T[-1, :N] = cw
    for i, j in enumerate(basis):
        T[-1] -= cw[j] * T[i]
    status, piv2 = _run(T, basis, np.ones(N, bool), tol_s)
    xw = np.zeros(N)
    for i, j in enumerate(basis):
        xw[j] = T[i, -1]
    x = xw[:n].copy()
    for k, j in enumerate(np.nonzero(free)[0]):
        x[j] -= xw[n + k]
    if status == "unbounded":
        return LPResult("unbounded", x, -np.inf, pivots=piv + piv2)
    return LPResult("optimal", x, float(c @ x), pivots=piv + piv2)


# --- the three alternatives used throughout -----------------------------------

@dataclass
class Alternative:
    """Outcome of a theorem-of-the-alternative LP on a gradient matrix ``G``.

    Exactly one of ``direction`` (a vector ``v`` with ``G v >= 1``) and
    ``weights`` (``y >= 0``, ``Σy = 1``, ``Gᵀy ≈ 0``) is set.
    """

    direction: np.ndarray | None
    weights: np.ndarray | None
    residual: float


def lengthening_alternative(G, check: float = 1e-8) -> Alternative:
    """Either a direction increasing every row of ``G`` or a vanishing convex combination."""
    G = np.asarray(G, dtype=float)
    n, d = G.shape
    A = np.vstack([G.T, np.ones((1, n))])
    b = np.zeros(d + 1)
    b[-1] = 1.0
    res = simplex(np.zeros(n), A, b)
    if res.feasible:
        y = np.maximum(res.x, 0)
        y /= y.sum()
        r = float(np.linalg.norm(G.T @ y))
        if r > check:
            raise LPNumerics(f"convex combination residual {r:.2e} exceeds {check:.0e}")
        return Alternative(None, y, r)
    z = res.farkas
    u, t = z[:d], z[d]
    if t <= 0:
        raise LPNumerics("degenerate Farkas certificate")
    v = -u / t
    slack = float(1 - (G @ v).min())
    if slack > check * max(1.0, float(np.abs(G).max() * np.abs(v).sum())):
        raise LPNumerics(f"lengthening direction violates a constraint by {slack:.2e}")
    return Alternative(v, None, max(slack, 0.0))


def positive_combination(G, check: float = 1e-6) -> tuple[np.ndarray | None, np.ndarray | None, float]:
    """Weights ``a >= 1`` with ``Gᵀa = 0``, or a direction ``v`` with ``G v <= 0``, ``Σ G v < 0``."""
    G = np.asarray(G, dtype=float)
    n, d = G.shape
    rhs = -G.T @ np.ones(n)
    res = simplex(np.zeros(n), G.T, rhs)
    if res.feasible:
        a = 1 + np.maximum(res.x, 0)
        return a, None, float(np.linalg.norm(G.T @ a))
    v = res.farkas
    gv = G @ v
    if gv.max() > check * max(1.0, np.abs(gv).max()) or gv.sum() >= 0:
        raise LPNumerics("eutacticity certificate failed its own check")
    return None, v, float(max(gv.max(), 0.0))


def hull_max_min(G, target_rows=None):
    """Maximise the smallest convex weight among combinations of rows equal
    to a vector with equal pairings against all rows.

    Solves ``max s`` over ``a >= 0, Σa = 1, (G Gᵀ) a = r 1, a_i >= s``.
    Returns the LP result with variables ``(a, r, s)``.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    K = G @ G.T
    # variables: a (n), r (free), s (free), slack σ (n)
    nv = n + 2 + n
    A = np.zeros((n + 1 + n, nv))
    b = np.zeros(n + 1 + n)
    A[:n, :n] = K
    A[:n, n] = -1.0
    A[n, :n] = 1.0
    b[n] = 1.0
    A[n + 1 :, :n] = np.eye(n)
    A[n + 1 :, n + 1] = -1.0
    A[n + 1 :, n + 2 :] = -np.eye(n)
    c = np.zeros(nv)
    c[n + 1] = -1.0
    free = np.zeros(nv, bool)
    free[n] = free[n + 1] = True
    return simplex(c, A, b, free)
