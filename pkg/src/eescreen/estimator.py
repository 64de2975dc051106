"""scikit-learn style front end for elementary-effects screening."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .design import FIRST_ORDER, MODES, ParameterSpec, make_plan
from .effects import FIRST, SECOND, aggregate, compute_effects
from .exceptions import IncompleteEvaluationError, InvalidDesignError
from .report import classify_all


def _as_spec(p, levels):
    if isinstance(p, ParameterSpec):
        return p
    if isinstance(p, dict):
        return ParameterSpec(p["name"], p["min"], p["max"], p.get("levels", levels))
    name, lo, hi, *rest = p
    return ParameterSpec(name, lo, hi, rest[0] if rest else levels)


class MorrisScreening(BaseEstimator):
    """Elementary-effects screening with the sample / fit workflow.

    Parameters
    ----------
    parameters : list
        ``ParameterSpec`` objects, ``(name, min, max[, levels])`` tuples or
        dicts with the same keys.
    mode : {"first_order", "second_order"}
        Trajectory design, or pair blocks that also give interaction effects.
    n_replicates : int
        Number of trajectories (or blocks).
    seed : int
        Seed of the design generator.
    levels : int
        Grid levels for parameters that do not set their own.
    negligible_rel : float
        mu* below this fraction of the largest mu* (with sigma also below it)
        is classified negligible.

    Attributes
    ----------
    plan_ : DesignPlan
    X_design_ : ndarray of shape (n_points, n_features)
        Physical input values to evaluate, one row per distinct design point.
    effects_ : list of EffectSample
    summary_ : list of EffectsSummary
        First-order rows, then pair rows for ``second_order``.
    mu_, mu_star_, sigma_ : ndarray of shape (n_features,)
    zones_ : list of str
    interaction_mu_star_, interaction_sigma_ : ndarray of shape (n_features, n_features)
        Upper triangle filled; ``second_order`` only.

    Examples
    --------
    >>> est = MorrisScreening([("a", 0, 1), ("b", 0, 1)], n_replicates=4, seed=1)
    >>> X = est.sample()
    >>> est = est.fit(X, 2 * X[:, 0] + X[:, 1])
    >>> est.mu_star_.round(6).tolist()
    [2.0, 1.0]
    """

    def __init__(self, parameters=None, mode=FIRST_ORDER, n_replicates=10, seed=0, levels=10,
                 negligible_rel=0.01):
        self.parameters = parameters
        self.mode = mode
        self.n_replicates = n_replicates
        self.seed = seed
        self.levels = levels
        self.negligible_rel = negligible_rel

    def _specs(self):
        if not self.parameters:
            raise InvalidDesignError("parameters must be given before sampling")
        return tuple(_as_spec(p, self.levels) for p in self.parameters)

    def sample(self):
        """Generate the design and return the points to evaluate."""
        if self.mode not in MODES:
            raise InvalidDesignError(f"mode must be one of {MODES}, got {self.mode!r}")
        specs = self._specs()
        self.plan_ = make_plan(specs, self.mode, self.n_replicates, self.seed)
        self.X_design_ = self.plan_.physical_matrix()
        self.n_features_in_ = len(specs)
        self.feature_names_in_ = np.array([s.name for s in specs], dtype=object)
        return self.X_design_.copy()

    def _point_ids(self, X):
        plan = self.plan_
        ids = []
        for row in X:
            key = []
            for spec, x in zip(plan.parameters, row):
                m = (x - spec.x_min) / (spec.x_max - spec.x_min) * (spec.levels - 1)
                level = int(round(m))
                if abs(m - level) > 1e-6 or not 0 <= level < spec.levels:
                    raise ValueError(f"row {row.tolist()} is not a point of the design grid")
                key.append(level)
            try:
                ids.append(plan._ids[tuple(key)])
            except KeyError:
                raise ValueError(f"row {row.tolist()} is not part of the sampled design") from None
        return ids

    def fit(self, X, y):
        """Compute effects from model outputs ``y`` at the design rows ``X``.

        Rows may come in any order; every design point must be present.
        """
        if not hasattr(self, "plan_"):
            self.sample()
        X = check_array(X, dtype=float)
        y = column_or_1d(y)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        if len(y) != len(X):
            raise ValueError(f"X has {len(X)} rows but y has {len(y)}")
        outputs = dict(zip(self._point_ids(X), (float(v) for v in y)))
        missing = [n for n in range(self.plan_.n_distinct) if n not in outputs]
        if missing:
            raise IncompleteEvaluationError(missing)

        self.effects_ = compute_effects(self.plan_, outputs)
        self.summary_ = aggregate(self.effects_)
        first = [s for s in self.summary_ if s.kind == FIRST]
        self.mu_ = np.array([s.mu for s in first])
        self.mu_star_ = np.array([s.mu_star for s in first])
        self.sigma_ = np.array([np.nan if s.sigma is None else s.sigma for s in first])
        self.zones_ = classify_all(first, self.negligible_rel) if self.n_replicates >= 2 else None
        if self.mode != FIRST_ORDER:
            k = self.n_features_in_
            self.interaction_mu_star_ = np.full((k, k), np.nan)
            self.interaction_sigma_ = np.full((k, k), np.nan)
            for s in self.summary_:
                if s.kind == SECOND:
                    self.interaction_mu_star_[s.i, s.j] = s.mu_star
                    self.interaction_sigma_[s.i, s.j] = np.nan if s.sigma is None else s.sigma
        return self

    def fit_function(self, func):
        """Sample, evaluate ``func`` on each physical row, and fit."""
        X = self.sample()
        y = np.array([float(func(row)) for row in X])
        return self.fit(X, y)

    def ranking(self):
        """Feature names ordered by decreasing mu*."""
        check_is_fitted(self, "mu_star_")
        order = np.argsort(-self.mu_star_, kind="stable")
        return [self.feature_names_in_[i] for i in order]
