"""Maximum-likelihood logistic regression via IRLS.

Serves both as the fixed-effects model in its own right and as the exact
degenerate case (zero random-effect variance) that the mixed model must
reproduce.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator

from .errors import DataError, NumericalError, SeparationError

# Linear predictors beyond this are saturated to machine precision anyway;
# clipping keeps fitted probabilities strictly inside (0, 1).
ETA_CLIP = 35.0


def log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    """Bernoulli log-likelihood at linear predictor eta, stable for large |eta|."""
    return float(y @ eta - np.logaddexp(0.0, eta).sum())


def _augment(X: np.ndarray, fit_intercept: bool) -> np.ndarray:
    if fit_intercept:
        return np.column_stack([np.ones(len(X)), X])
    return X


def _validate_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or len(X) != len(y):
        raise DataError("X must be 2-d with one row per outcome")
    if len(y) == 0:
        raise DataError("empty design")
    if not np.isfinite(X).all():
        raise DataError("X contains non-finite values")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("outcomes must be 0/1")
    return X, y


class LogisticIRLS(BaseEstimator):
    """Logistic regression fit by iteratively reweighted least squares.

    Convergence requires both a relative deviance change below
    ``tol_deviance`` and a score (gradient) infinity-norm below
    ``tol_gradient``. Deviance is kept non-increasing by step-halving.
    Standard errors come from the inverse Fisher information at the optimum.

    Attributes (after fit)
    ----------------------
    params_ : ndarray, intercept first when fit_intercept
    bse_ : ndarray, standard errors aligned with params_
    loglik_, deviance_ : float
    n_iter_ : int
    converged_ : bool
    gradient_norm_ : float
    """

    def __init__(
        self,
        fit_intercept=True,
        tol_deviance=1e-10,
        tol_gradient=1e-8,
        max_iter=100,
        separation_bound=30.0,
    ):
        self.fit_intercept = fit_intercept
        self.tol_deviance = tol_deviance
        self.tol_gradient = tol_gradient
        self.max_iter = max_iter
        self.separation_bound = separation_bound

    def fit(self, X, y):
        X, y = _validate_xy(X, y)
        A = _augment(X, self.fit_intercept)
        n, k = A.shape
        if n < k:
            raise DataError(f"{n} rows cannot identify {k} coefficients")

        beta = np.zeros(k)
        eta = A @ beta
        loglik = log_likelihood(eta, y)
        deviance_path = [-2.0 * loglik]
        converged = False
        it = 0
        grad_norm = np.inf
        for it in range(1, self.max_iter + 1):
            mu = expit(np.clip(eta, -ETA_CLIP, ETA_CLIP))
            w = mu * (1.0 - mu)
            if not np.isfinite(w).all():
                raise NumericalError("non-finite working weights")
            grad = A.T @ (y - mu)
            H = A.T @ (A * w[:, None])
            try:
                delta = np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                delta = np.linalg.lstsq(H, grad, rcond=None)[0]

            # Step-halve until the log-likelihood does not decrease.
            step = 1.0
            for _ in range(30):
                candidate = beta + step * delta
                cand_eta = A @ candidate
                cand_ll = log_likelihood(cand_eta, y)
                if cand_ll >= loglik - 1e-12:
                    break
                step *= 0.5
            beta, eta = candidate, cand_eta
            if np.abs(beta).max() > self.separation_bound:
                raise SeparationError(
                    "coefficients diverged; outcomes are likely separable"
                )

            mu = expit(np.clip(eta, -ETA_CLIP, ETA_CLIP))
            grad_norm = float(np.abs(A.T @ (y - mu)).max())
            rel_change = 2.0 * abs(cand_ll - loglik) / max(2.0 * abs(cand_ll), 1.0)
            loglik = cand_ll
            deviance_path.append(-2.0 * loglik)
            if rel_change < self.tol_deviance and grad_norm < self.tol_gradient:
                converged = True
                break

        mu = expit(np.clip(eta, -ETA_CLIP, ETA_CLIP))
        w = mu * (1.0 - mu)
        fisher = A.T @ (A * w[:, None])
        try:
            cov = np.linalg.inv(fisher)
        except np.linalg.LinAlgError:
            raise NumericalError("singular Fisher information at the optimum")
        self.params_ = beta
        self.bse_ = np.sqrt(np.diag(cov))
        self.cov_params_ = cov
        if self.fit_intercept:
            self.intercept_ = float(beta[0])
            self.coef_ = beta[1:].copy()
        else:
            self.intercept_ = 0.0
            self.coef_ = beta.copy()
        self.loglik_ = loglik
        self.deviance_ = -2.0 * loglik
        self.deviance_path_ = deviance_path
        self.n_iter_ = it
        self.converged_ = converged
        self.gradient_norm_ = grad_norm
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return _augment(X, self.fit_intercept) @ self.params_

    def predict_proba(self, X) -> np.ndarray:
        p1 = expit(np.clip(self.decision_function(X), -ETA_CLIP, ETA_CLIP))
        return np.column_stack([1.0 - p1, p1])
