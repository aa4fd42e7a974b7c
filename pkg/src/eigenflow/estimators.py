"""Scikit-learn style estimators wrapping the coupled learning rules.

``CoupledPCA`` and ``CoupledSVD`` expose the online and averaged trainers
through the usual fit/transform surface (get_params/set_params come from
``BaseEstimator``), so the rules compose with sklearn pipelines and model
selection. Both estimate a single principal component direction together
with its scalar; multiple-component extraction via deflation is out of scope.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from . import dynamics, rules_pca, rules_svd
from .rules_pca import PcaRule
from .rules_svd import SvdRule


def _check_fitted(estimator, attr: str) -> None:
    if not hasattr(estimator, attr):
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call fit first."
        )


class CoupledPCA(TransformerMixin, BaseEstimator):
    """Principal eigenvector/eigenvalue estimation by a coupled learning rule.

    Parameters
    ----------
    rule : str, default "l2"
        One of "l2", "l2_ala", "sum_exact", "sum_mod" (constraint kept at the
        solution: unit Euclidean norm or unit component sum).
    mode : str, default "online"
        "online" consumes one sample per row of X in order; "averaged" forms
        the empirical covariance X'X/len(X) and integrates the averaged ODE.
    gamma0, t0 : float
        Inverse-time learning-rate schedule gamma0*t0/(t0+t) for online mode.
    dt, max_steps, tol : float, int, float
        Integrator settings for averaged mode; integration stops once the
        residual norm drops below tol.
    seed : int
        Seed for the default state initialization.

    Attributes
    ----------
    component_ : ndarray of shape (n_features,)
        Estimated principal direction (unit norm or unit sum per the rule).
    eigenvalue_ : float
        Coupled eigenvalue estimate.
    n_iter_ : int
        Update steps actually taken.
    """

    def __init__(self, rule="l2", mode="online", gamma0=0.05, t0=100.0,
                 dt=0.05, max_steps=10000, tol=1e-10, seed=0):
        self.rule = rule
        self.mode = mode
        self.gamma0 = gamma0
        self.t0 = t0
        self.dt = dt
        self.max_steps = max_steps
        self.tol = tol
        self.seed = seed

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] < 2:
            raise ValueError("CoupledPCA needs at least 2 features")
        kind = PcaRule.from_string(self.rule)
        n = X.shape[1]
        if self.mode == "averaged":
            C = X.T @ X / X.shape[0]
            state = rules_pca.initial_pca_state(n, self.seed, C=C)
            residual = rules_pca.pca_residual_fn(kind, C)
            traj = dynamics.integrate(
                rules_pca.pca_field(kind, C),
                state.to_array(),
                dt=self.dt,
                steps=self.max_steps,
                record_every=max(1, self.max_steps // 10),
                stop_when=lambda z: float(np.linalg.norm(residual(z))) < self.tol,
            )
            final = rules_pca.PcaState.from_array(traj.final_state)
            self.n_iter_ = traj.steps[-1]
        elif self.mode == "online":
            state = rules_pca.initial_pca_state(n, self.seed)
            schedule = dynamics.RateSchedule(kind="inverse-time", gamma0=self.gamma0, t0=self.t0)
            w, lam = dynamics.train_pca_online_batch(
                kind, X[:, None, :], state.w[None, :], np.array([state.lam]), schedule
            )
            final = rules_pca.PcaState(w=w[0], lam=float(lam[0]))
            self.n_iter_ = X.shape[0]
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        self.component_ = final.w
        self.eigenvalue_ = final.lam
        self.n_features_in_ = n
        return self

    def transform(self, X):
        """Project rows onto the learned direction (the unit activity)."""
        _check_fitted(self, "component_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return (X @ self.component_)[:, None]


class CoupledSVD(BaseEstimator):
    """Principal singular-triple estimation from paired samples (y, x).

    ``fit(X, Y)`` consumes paired rows realizing a cross-covariance
    E{yx'}; online mode streams the pairs, averaged mode forms Y'X/len(X)
    and integrates the averaged ODE. Constant-sum rules carry a second
    scalar estimate ``rho_``.
    """

    def __init__(self, rule="l2", mode="online", gamma0=0.05, t0=100.0,
                 dt=0.05, max_steps=10000, tol=1e-10, seed=0):
        self.rule = rule
        self.mode = mode
        self.gamma0 = gamma0
        self.t0 = t0
        self.dt = dt
        self.max_steps = max_steps
        self.tol = tol
        self.seed = seed

    def fit(self, X, Y):
        X = check_array(X, dtype=np.float64)
        Y = check_array(Y, dtype=np.float64)
        if X.shape[0] != Y.shape[0]:
            raise ValueError("X and Y must have the same number of rows")
        if X.shape[1] < 2 or Y.shape[1] < 2:
            raise ValueError("CoupledSVD needs at least 2 features on each side")
        kind = SvdRule.from_string(self.rule)
        m, n = Y.shape[1], X.shape[1]
        if self.mode == "averaged":
            A = Y.T @ X / X.shape[0]
            state = rules_svd.initial_svd_state(m, n, self.seed, A=A, kind=kind)
            residual = rules_svd.svd_residual_fn(kind, A)
            traj = dynamics.integrate(
                rules_svd.svd_field(kind, A),
                state.to_array(),
                dt=self.dt,
                steps=self.max_steps,
                record_every=max(1, self.max_steps // 10),
                stop_when=lambda z: float(np.linalg.norm(residual(z))) < self.tol,
            )
            final = rules_svd.SvdState.from_array(traj.final_state, m, n, kind.is_sum)
            self.n_iter_ = traj.steps[-1]
        elif self.mode == "online":
            state = rules_svd.initial_svd_state(m, n, self.seed, kind=kind)
            schedule = dynamics.RateSchedule(kind="inverse-time", gamma0=self.gamma0, t0=self.t0)
            rho0 = None if state.rho is None else np.array([state.rho])
            u, v, sigma, rho = dynamics.train_svd_online_batch(
                kind, Y[:, None, :], X[:, None, :],
                state.u[None, :], state.v[None, :], np.array([state.sigma]), rho0, schedule,
            )
            final = rules_svd.SvdState(
                u=u[0], v=v[0], sigma=float(sigma[0]),
                rho=None if rho is None else float(rho[0]),
            )
            self.n_iter_ = X.shape[0]
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        self.left_vector_ = final.u
        self.right_vector_ = final.v
        self.singular_value_ = final.sigma
        self.rho_ = final.rho
        self.n_features_in_ = n
        self.n_targets_in_ = m
        return self

    def transform(self, X):
        """Project x-side rows onto the learned right direction."""
        _check_fitted(self, "right_vector_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return (X @ self.right_vector_)[:, None]

    def transform_left(self, Y):
        """Project y-side rows onto the learned left direction."""
        _check_fitted(self, "left_vector_")
        Y = check_array(Y, dtype=np.float64)
        if Y.shape[1] != self.n_targets_in_:
            raise ValueError(
                f"Y has {Y.shape[1]} features, expected {self.n_targets_in_}"
            )
        return (Y @ self.left_vector_)[:, None]
