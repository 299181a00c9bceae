"""Scikit-learn style estimators wrapping the distributed protocol.

``fit`` shards the training data across one master and ``n_workers``
simulated machines, optionally corrupts a fraction of them, and runs the
robust surrogate-likelihood loop; ``coef_``/``intercept_`` hold the final
iterate. With ``byzantine_fraction=0`` this is simply a communication-
efficient distributed fitting strategy.
"""
from __future__ import annotations

import numbers

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .aggregation import AggRule
from .attacks import AttackSpec
from .core import ByzantineMask, Dataset, ShardAssignment
from .glm import GlmModel, Penalty
from .protocol import AlgoSpec, run
from .solver import SolverOptions


class _RobustDistributedGlm(BaseEstimator):
    """Shared plumbing for the classifier and regressor front ends."""

    _family = "logistic"

    def __init__(
        self,
        algorithm="bcsl",
        rule="median",
        trim_beta=0.2,
        lam=0.0,
        penalty="none",
        gamma=0.0,
        n_workers=10,
        byzantine_fraction=0.0,
        attack="sign_flip",
        attack_scale=3.0,
        attack_sigma=1.0,
        rounds=10,
        init="zero",
        fit_intercept=True,
        tol=1e-8,
        max_inner_iter=500,
        random_state=None,
    ):
        self.algorithm = algorithm
        self.rule = rule
        self.trim_beta = trim_beta
        self.lam = lam
        self.penalty = penalty
        self.gamma = gamma
        self.n_workers = n_workers
        self.byzantine_fraction = byzantine_fraction
        self.attack = attack
        self.attack_scale = attack_scale
        self.attack_sigma = attack_sigma
        self.rounds = rounds
        self.init = init
        self.fit_intercept = fit_intercept
        self.tol = tol
        self.max_inner_iter = max_inner_iter
        self.random_state = random_state

    def _seed(self) -> int:
        if self.random_state is None:
            return 0
        if isinstance(self.random_state, numbers.Integral):
            return int(self.random_state)
        raise ValueError("random_state must be an int or None")

    def _shard(self, n_samples: int) -> ShardAssignment:
        machines = self.n_workers + 1
        n = n_samples // machines
        if n < 1:
            raise ValueError(
                f"{n_samples} samples cannot feed {machines} machines; reduce n_workers"
            )
        rng = np.random.default_rng(np.random.SeedSequence(entropy=self._seed(), spawn_key=(0,)))
        perm = rng.permutation(n_samples)
        shards = [perm[k * n : (k + 1) * n] for k in range(machines)]
        return ShardAssignment(shards=shards)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=self._family == "linear")
        y = self._encode_targets(y)
        features = np.hstack([np.ones((X.shape[0], 1)), X]) if self.fit_intercept else X
        data = Dataset(
            features, y, kind="binary" if self._family == "logistic" else "continuous"
        )
        shards = self._shard(data.n_samples)
        mask_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=self._seed(), spawn_key=(1,))
        )
        mask = ByzantineMask.sample(self.byzantine_fraction, shards.n_workers, mask_rng)
        algo = AlgoSpec(
            algorithm=self.algorithm,
            rule=AggRule(kind=self.rule, beta=self.trim_beta if self.rule == "trimmed" else 0.0),
            lam=float(self.lam),
            rounds=self.rounds,
            init=self.init,
        )
        trace = run(
            algo,
            GlmModel(family=self._family, fit_intercept=self.fit_intercept),
            Penalty(kind=self.penalty, gamma=self.gamma),
            data,
            shards,
            mask,
            AttackSpec(kind=self.attack, scale=self.attack_scale, sigma=self.attack_sigma),
            seed=self._seed(),
            opts=SolverOptions(tol=self.tol, max_iter=self.max_inner_iter),
        )
        theta = trace.final_theta
        if self.fit_intercept:
            self.intercept_ = float(theta[0])
            self.coef_ = theta[1:].copy()
        else:
            self.intercept_ = 0.0
            self.coef_ = theta.copy()
        self.trace_ = trace
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = len(trace) - 1
        return self

    def _encode_targets(self, y: np.ndarray) -> np.ndarray:
        return y

    def _decision(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the estimator was fitted with "
                f"{self.n_features_in_}"
            )
        return X @ self.coef_ + self.intercept_


class ByzantineRobustClassifier(ClassifierMixin, _RobustDistributedGlm):
    """Binary logistic classifier fitted by the robust distributed loop."""

    _family = "logistic"

    def _encode_targets(self, y: np.ndarray) -> np.ndarray:
        classes = np.unique(y)
        if classes.shape[0] != 2:
            raise ValueError("expected exactly two classes")
        self.classes_ = classes
        return (y == classes[1]).astype(np.float64)

    def decision_function(self, X):
        return self._decision(X)

    def predict_proba(self, X):
        p1 = expit(self._decision(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        scores = self._decision(X)
        return self.classes_[(scores > 0).astype(int)]


class ByzantineRobustRegressor(RegressorMixin, _RobustDistributedGlm):
    """Linear regressor fitted by the robust distributed loop."""

    _family = "linear"

    def __init__(
        self,
        algorithm="bcslp",
        rule="median",
        trim_beta=0.2,
        lam=0.1,
        penalty="none",
        gamma=0.0,
        n_workers=10,
        byzantine_fraction=0.0,
        attack="sign_flip",
        attack_scale=3.0,
        attack_sigma=1.0,
        rounds=10,
        init="zero",
        fit_intercept=True,
        tol=1e-8,
        max_inner_iter=500,
        random_state=None,
    ):
        super().__init__(
            algorithm=algorithm,
            rule=rule,
            trim_beta=trim_beta,
            lam=lam,
            penalty=penalty,
            gamma=gamma,
            n_workers=n_workers,
            byzantine_fraction=byzantine_fraction,
            attack=attack,
            attack_scale=attack_scale,
            attack_sigma=attack_sigma,
            rounds=rounds,
            init=init,
            fit_intercept=fit_intercept,
            tol=tol,
            max_inner_iter=max_inner_iter,
            random_state=random_state,
        )

    def predict(self, X):
        return self._decision(X)
