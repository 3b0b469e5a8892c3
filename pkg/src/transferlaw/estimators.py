"""scikit-learn style wrappers around the fitting and simulation functions."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .complexity import gaussian_negative_entropy
from .fit import DEFAULT_FIXED_D, FitOptions, fit_full, fit_simple
from .law import Observation, full_law_eval, simple_law_eval
from .theory.network import init_network, network_eval, run_asgd


def _observations(X, y, ncols):
    X, y = check_X_y(X, y, ensure_min_samples=2)
    if X.shape[1] != ncols:
        raise ValueError(f"expected {ncols} column(s), got {X.shape[1]}")
    s = X[:, 1] if ncols == 2 else np.ones(len(y))
    return X, [Observation(float(n), float(si), float(e)) for n, si, e in zip(X[:, 0], s, y)]


class SimpleScalingLaw(RegressorMixin, BaseEstimator):
    """``error = D * n**-alpha + C`` fitted in log space.

    ``X`` has one column (pre-training size ``n``); ``y`` holds positive errors.
    Set ``fixed_D=None`` to estimate D as well.
    """

    def __init__(self, fixed_D=DEFAULT_FIXED_D, multistart=8, seed=0):
        self.fixed_D = fixed_D
        self.multistart = multistart
        self.seed = seed

    def fit(self, X, y):
        X, obs = _observations(X, y, 1)
        self.report_ = fit_simple(obs, FitOptions(fixed_D=self.fixed_D,
                                                  multistart=self.multistart, seed=self.seed))
        self.params_ = self.report_.params
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        return np.atleast_1d(simple_law_eval(self.params_, X[:, 0]))


class FullScalingLaw(RegressorMixin, BaseEstimator):
    """``error = delta (n**-alpha + gamma) s**-beta + eps_irr`` fitted in log space.

    ``X`` has columns ``(n, s)``.
    """

    def __init__(self, fit_eps=False, multistart=8, seed=0):
        self.fit_eps = fit_eps
        self.multistart = multistart
        self.seed = seed

    def fit(self, X, y):
        X, obs = _observations(X, y, 2)
        self.report_ = fit_full(obs, FitOptions(fixed_D=None, fix_eps_zero=not self.fit_eps,
                                                multistart=self.multistart, seed=self.seed))
        self.params_ = self.report_.params
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        return np.atleast_1d(full_law_eval(self.params_, X[:, 0], X[:, 1]))


class GaussianComplexity(BaseEstimator):
    """Negative entropy of a Gaussian fitted to activation rows (``neg_entropy_``)."""

    def __init__(self, epsilon=None):
        self.epsilon = epsilon

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        self.report_ = gaussian_negative_entropy(X, self.epsilon)
        self.neg_entropy_ = self.report_.neg_entropy
        self.n_features_in_ = X.shape[1]
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "report_")
        return self.neg_entropy_


class TwoLayerASGDRegressor(RegressorMixin, BaseEstimator):
    """Width-``M`` tanh network trained by one averaged SGD pass over the rows.

    Inputs must be unit vectors.  The averaged parameters are kept.
    """

    def __init__(self, M=256, eta=0.1, lam=0.01, seed=0):
        self.M = M
        self.eta = eta
        self.lam = lam
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        state = init_network(self.M, X.shape[1], self.seed)
        _, self.state_ = run_asgd(state, lambda T: (X[:T], y[:T]), len(y), self.eta, self.lam)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "state_")
        return np.atleast_1d(network_eval(self.state_, check_array(X)))
