"""scikit-learn style wrappers for the two fit/predict shaped operations.

``LengthMinimizer`` fits the minimum of a weighted length functional from a
batch of start points.  ``FanCellClassifier`` fits the normal fan of the
gradient polytope at a point and labels directions by the cell that holds
them, i.e. by the curves that stay shortest when moving that way.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .hyperbolic import FNPoint, lengths_of
from .minima import GradientFrame, LengthFunctional, minimize_length_functional
from .polytopes import build_face_lattice, dual_fan
from .topology import CurveSystem


class LengthMinimizer(BaseEstimator):
    """Minimise ``Σ a_j L(c_j)`` from several starts.

    Parameters
    ----------
    curves : CurveSystem
        A filling system.
    weights : "equal" or sequence of float
    tol : float
        Gradient tolerance of each run.

    Attributes
    ----------
    minimizers_ : ndarray of shape (n_starts, 6g-6)
    minimizer_ : FNPoint
        The run with the smallest value.
    value_ : float
    spread_ : float
        Largest coordinate distance between two minimisers.
    """

    def __init__(self, curves: CurveSystem | None = None, weights="equal", tol: float = 1e-7):
        self.curves = curves
        self.weights = weights
        self.tol = tol

    def _functional(self) -> LengthFunctional:
        if isinstance(self.weights, str):
            if self.weights != "equal":
                raise ValueError("weights must be 'equal' or a sequence")
            return LengthFunctional.equal(self.curves)
        return LengthFunctional(self.curves, tuple(self.weights))

    def fit(self, X, y=None):
        """Run the minimiser from every row of ``X`` (Fenchel–Nielsen vectors)."""
        X = np.atleast_2d(np.asarray(X, float))
        F = self._functional()
        genus = self.curves.genus
        runs = [minimize_length_functional(F, FNPoint.from_vector(x, genus), tol=self.tol) for x in X]
        self.minimizers_ = np.array([r.minimizer.vector for r in runs])
        self.values_ = np.array([r.value for r in runs])
        self.converged_ = np.array([r.converged for r in runs])
        best = int(np.argmin(self.values_))
        self.minimizer_ = runs[best].minimizer
        self.value_ = float(self.values_[best])
        diffs = self.minimizers_[:, None, :] - self.minimizers_[None, :, :]
        self.spread_ = float(np.abs(diffs).max()) if len(X) > 1 else 0.0
        return self

    def predict(self, X) -> np.ndarray:
        """Value of the functional at each row of ``X``."""
        check_is_fitted(self, "minimizer_")
        F = self._functional()
        X = np.atleast_2d(np.asarray(X, float))
        return np.array([np.asarray(F.weights) @ lengths_of(self.curves.words, x) for x in X])

    def score(self, X, y=None) -> float:
        """Negative mean excess of the functional over the fitted minimum."""
        return -float(np.mean(self.predict(X) - self.value_))


class FanCellClassifier(ClassifierMixin, BaseEstimator):
    """Label directions by the cell of the normal fan ``V(p)`` containing them.

    The label of a direction ``v`` is the set of curves whose lengths
    decrease fastest (or grow slowest) along ``v``: those maximising
    ``⟨-∇L(c), v⟩``.

    Parameters
    ----------
    point : FNPoint
    curves : CurveSystem
    tol : float
        Relative tolerance for ties.
    """

    def __init__(self, point: FNPoint | None = None, curves: CurveSystem | None = None, tol: float = 1e-8):
        self.point = point
        self.curves = curves
        self.tol = tol

    def fit(self, X=None, y=None):
        frame = GradientFrame.at(self.curves, self.point)
        self.lattice_ = build_face_lattice(frame)
        self.fan_ = dual_fan(self.lattice_)
        self.points_ = self.lattice_.points
        self.classes_ = np.array([",".join(map(str, f.labels)) for f in self.lattice_.faces], dtype=object)
        return self

    def predict_labels(self, X) -> list[tuple[int, ...]]:
        check_is_fitted(self, "fan_")
        X = np.atleast_2d(np.asarray(X, float))
        out = []
        for v in X:
            vals = self.points_ @ v
            top = vals.max()
            tie = self.tol * max(1.0, float(np.abs(vals).max()))
            out.append(tuple(int(i) for i in np.nonzero(vals >= top - tie)[0]))
        return out

    def predict(self, X) -> np.ndarray:
        """Cell labels as comma-joined curve indices (one string per row)."""
        return np.array([",".join(map(str, lab)) for lab in self.predict_labels(X)], dtype=object)

    def predict_ids(self, X) -> list[tuple[str, ...]]:
        ids = self.curves.ids
        return [tuple(ids[i] for i in lab) for lab in self.predict_labels(X)]
