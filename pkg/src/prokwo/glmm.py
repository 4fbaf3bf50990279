"""Mixed-effects logistic regression with crossed random intercepts.

Maximum likelihood under the Laplace approximation. The random effects are
parametrized spherically, u_j = sigma_j * s_j with s_j ~ N(0, I), which keeps
the inner problem well conditioned all the way down to sigma = 0 and makes
the zero-variance fit reduce exactly to plain logistic regression.

For variance parameters sigma the marginal log-likelihood is approximated by

    ll(beta, sigma) = loglik(eta*) - 0.5 * sum_j ||s_j*||^2
                      - 0.5 * logdet(Lam' Z' W Z Lam + I)

where (beta, s*) jointly maximize the penalized log-likelihood (inner
penalized IRLS) and W is evaluated at the joint mode. The inner Newton system
over (s_child, s_word, beta) is solved by eliminating the larger factor's
diagonal block and factorizing the remaining dense Schur complement, which is
exact for the two-block crossed structure. The outer problem optimizes the
log-scale sigmas with a bounded derivative-free Nelder-Mead search.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sps
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.special import expit
from sklearn.base import BaseEstimator

from .errors import DataError, NumericalError, SeparationError
from .glm import ETA_CLIP, _augment, _validate_xy, log_likelihood

# Dense cross-block handling up to this many cells; beyond, use sparse ops.
_DENSE_CROSS_CELLS = 4_000_000


def _as_group_list(groups, n: int) -> list[np.ndarray]:
    if isinstance(groups, (list, tuple)):
        arrays = [np.asarray(g) for g in groups]
    else:
        g = np.asarray(groups)
        arrays = [g] if g.ndim == 1 else [g[:, j] for j in range(g.shape[1])]
    if not 1 <= len(arrays) <= 2:
        raise DataError("one or two grouping factors are supported")
    for g in arrays:
        if g.shape != (n,):
            raise DataError("each grouping factor needs one label per row")
    return arrays


class _FactorPair:
    """Precomputed index structure for the (optional) crossed pair.

    The weighted cross-count matrix Z_big' W Z_small has one cell per unique
    (big, small) label pair; its sparsity pattern is fixed, so each IRLS
    iteration only refreshes the cell values with a bincount.
    """

    def __init__(self, g_big: np.ndarray, q_big: int, g_small: np.ndarray, q_small: int):
        key = g_big.astype(np.int64) * q_small + g_small
        unique, self.inverse = np.unique(key, return_inverse=True)
        self.n_cells = len(unique)
        rows = (unique // q_small).astype(np.int32)
        self.cols = (unique % q_small).astype(np.int32)
        self.indptr = np.zeros(q_big + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=q_big), out=self.indptr[1:])
        self.q_big, self.q_small = q_big, q_small
        self.dense = q_big * q_small <= _DENSE_CROSS_CELLS
        self.flat_key = key if self.dense else None

    def weighted_counts(self, w: np.ndarray):
        """Z_big' diag(w) Z_small as dense ndarray or CSR, pattern reused."""
        if self.dense:
            flat = np.bincount(self.flat_key, weights=w,
                               minlength=self.q_big * self.q_small)
            return flat.reshape(self.q_big, self.q_small)
        data = np.bincount(self.inverse, weights=w, minlength=self.n_cells)
        return sps.csr_matrix(
            (data, self.cols, self.indptr), shape=(self.q_big, self.q_small)
        )


def _penalized_loglik_and_grad(A, y, group_idx, n_levels, sigma, beta, s_list):
    """Penalized log-likelihood and its gradient over (s_1[, s_2], beta).

    The gradient is returned concatenated in block order (s blocks first,
    beta last) to make finite-difference verification straightforward.
    """
    eta = A @ beta
    for g, sig, s in zip(group_idx, sigma, s_list):
        eta = eta + sig * s[g]
    mu = expit(np.clip(eta, -ETA_CLIP, ETA_CLIP))
    resid = y - mu
    pll = log_likelihood(eta, y) - 0.5 * sum(float(s @ s) for s in s_list)
    parts = [
        sig * np.bincount(g, weights=resid, minlength=q) - s
        for g, q, sig, s in zip(group_idx, n_levels, sigma, s_list)
    ]
    parts.append(A.T @ resid)
    return pll, np.concatenate(parts)


class MixedLogisticRegression(BaseEstimator):
    """Logistic regression with one or two independent random intercepts.

    Parameters
    ----------
    fit_intercept : bool
        Prepend an intercept column to X.
    inner_tol_deviance, inner_tol_gradient : float
        Joint-mode convergence: relative penalized-deviance change and
        score infinity-norm.
    max_inner_iter : int
        Cap on Newton steps per inner solve.
    outer_tol : float
        Relative objective tolerance of the outer variance search.
    max_outer_evals : int
        Cap on outer objective evaluations.
    sigma_bounds : (float, float)
        Search interval for each random-intercept standard deviation; the
        lower edge is the boundary (sigma -> 0) report threshold.
    fix_sigma : sequence of float, optional
        Skip the outer search and fit at these standard deviations
        (zeros allowed); used for degenerate-case checks.
    separation_bound : float
        Fixed-effect magnitude beyond which the fit aborts as separated.

    Attributes (after fit)
    ----------------------
    params_, bse_ : fixed effects (intercept first) and their Wald SEs
    variance_components_ : ndarray, fitted variance per factor (sigma^2)
    random_effects_ : list of ndarray, conditional modes on the natural scale
    loglik_laplace_ : float
    converged_ : bool; status_ : str
    n_outer_evals_, n_inner_iter_, gradient_norm_, boundary_ : diagnostics
    """

    def __init__(
        self,
        fit_intercept=True,
        inner_tol_deviance=1e-10,
        inner_tol_gradient=1e-8,
        max_inner_iter=200,
        outer_tol=1e-8,
        max_outer_evals=500,
        sigma_bounds=(1e-6, 30.0),
        fix_sigma=None,
        separation_bound=30.0,
    ):
        self.fit_intercept = fit_intercept
        self.inner_tol_deviance = inner_tol_deviance
        self.inner_tol_gradient = inner_tol_gradient
        self.max_inner_iter = max_inner_iter
        self.outer_tol = outer_tol
        self.max_outer_evals = max_outer_evals
        self.sigma_bounds = sigma_bounds
        self.fix_sigma = fix_sigma
        self.separation_bound = separation_bound

    # -- inner machinery ----------------------------------------------------

    def _eta(self, A, sigma, beta, s_list):
        eta = A @ beta
        for g, sig, s in zip(self._groups, sigma, s_list):
            eta = eta + sig * s[g]
        return eta

    def _inner_blocks(self, A, w, sigma):
        """Hessian pieces of the penalized problem at working weights w."""
        groups, levels = self._groups, self._levels
        diag = [
            sigma[j] ** 2 * np.bincount(groups[j], weights=w, minlength=levels[j])
            + 1.0
            for j in range(len(groups))
        ]
        wA = A * w[:, None]
        C = [
            sigma[j]
            * np.column_stack(
                [
                    np.bincount(groups[j], weights=wA[:, c], minlength=levels[j])
                    for c in range(A.shape[1])
                ]
            )
            for j in range(len(groups))
        ]
        F = A.T @ wA
        if len(groups) == 2:
            cross = (sigma[self._big] * sigma[self._small]) * self._pair.weighted_counts(w)
        else:
            cross = None
        return diag, C, F, cross

    @staticmethod
    def _schur_cross(cross, dinv):
        """(cross' D^-1 cross, row-scaled cross consumer) for either storage."""
        if sps.issparse(cross):
            return (cross.T @ cross.multiply(dinv[:, None]).tocsr()).toarray()
        return cross.T @ (cross * dinv[:, None])

    def _solve_newton(self, diag, C, F, cross, g_s, g_beta):
        """Solve H [delta_s; delta_beta] = g by eliminating the big factor.

        The big factor's Hessian block is diagonal, so its elimination is
        exact and the remaining (small factor + beta) Schur complement is a
        small dense Cholesky solve.
        """
        big, small = self._big, self._small
        dinv = 1.0 / diag[big]
        Cb = C[big]
        if small is None:
            S = F - Cb.T @ (Cb * dinv[:, None])
            rhs = g_beta - Cb.T @ (g_s[big] * dinv)
            q_small = 0
        else:
            q_small = len(diag[small])
            S = np.empty((q_small + F.shape[0],) * 2)
            S[:q_small, :q_small] = np.diag(diag[small]) - self._schur_cross(cross, dinv)
            S[:q_small, q_small:] = C[small] - cross.T @ (Cb * dinv[:, None])
            S[q_small:, :q_small] = S[:q_small, q_small:].T
            S[q_small:, q_small:] = F - Cb.T @ (Cb * dinv[:, None])
            rhs = np.concatenate(
                [
                    g_s[small] - cross.T @ (g_s[big] * dinv),
                    g_beta - Cb.T @ (g_s[big] * dinv),
                ]
            )
        try:
            chol = cho_factor(S, lower=True)
        except np.linalg.LinAlgError:
            raise NumericalError("reduced Newton system is not positive definite")
        sol = cho_solve(chol, rhs)
        delta_small = sol[:q_small]
        delta_beta = sol[q_small:]
        back = g_s[big].copy()
        if small is not None:
            back -= cross @ delta_small
        back -= Cb @ delta_beta
        delta_big = dinv * back
        deltas = [None, None] if small is not None else [None]
        deltas[big] = delta_big
        if small is not None:
            deltas[small] = delta_small
        return deltas, delta_beta

    def _inner_solve(self, A, y, sigma, beta, s_list):
        """Penalized IRLS to the joint mode at fixed sigma (warm-startable)."""
        groups, levels = self._groups, self._levels
        pll, grad = _penalized_loglik_and_grad(
            A, y, groups, levels, sigma, beta, s_list
        )
        converged = False
        it = 0
        grad_norm = float(np.abs(grad).max()) if grad.size else 0.0
        for it in range(1, self.max_inner_iter + 1):
            eta = self._eta(A, sigma, beta, s_list)
            mu = expit(np.clip(eta, -ETA_CLIP, ETA_CLIP))
            w = mu * (1.0 - mu)
            if not np.isfinite(w).all():
                raise NumericalError("non-finite working weights")
            resid = y - mu
            g_s = [
                sigma[j] * np.bincount(groups[j], weights=resid, minlength=levels[j])
                - s_list[j]
                for j in range(len(groups))
            ]
            g_beta = A.T @ resid
            diag, C, F, cross = self._inner_blocks(A, w, sigma)
            deltas, delta_beta = self._solve_newton(
                diag, C, F, cross, g_s, g_beta
            )

            step = 1.0
            for _ in range(30):
                cand_beta = beta + step * delta_beta
                cand_s = [s + step * d for s, d in zip(s_list, deltas)]
                cand_pll, cand_grad = _penalized_loglik_and_grad(
                    A, y, groups, levels, sigma, cand_beta, cand_s
                )
                if cand_pll >= pll - 1e-12:
                    break
                step *= 0.5
            beta, s_list = cand_beta, cand_s
            if np.abs(beta).max() > self.separation_bound:
                raise SeparationError(
                    "fixed effects diverged; outcomes are likely separable"
                )
            grad_norm = float(np.abs(cand_grad).max()) if cand_grad.size else 0.0
            rel_change = 2.0 * abs(cand_pll - pll) / max(2.0 * abs(cand_pll), 1.0)
            pll = cand_pll
            if (
                rel_change < self.inner_tol_deviance
                and grad_norm < self.inner_tol_gradient
            ):
                converged = True
                break
        return beta, s_list, pll, converged, it, grad_norm

    def _laplace_parts(self, A, y, sigma, beta, s_list):
        """Laplace log-likelihood pieces at a joint mode (final weights)."""
        eta = self._eta(A, sigma, beta, s_list)
        mu = expit(np.clip(eta, -ETA_CLIP, ETA_CLIP))
        w = mu * (1.0 - mu)
        diag, C, F, cross = self._inner_blocks(A, w, sigma)
        big, small = self._big, self._small
        logdet = float(np.log(diag[big]).sum())
        if small is not None:
            dinv = 1.0 / diag[big]
            Sss = np.diag(diag[small]) - self._schur_cross(cross, dinv)
            sign, extra = np.linalg.slogdet(Sss)
            if sign <= 0:
                raise NumericalError("random-effect information not positive definite")
            logdet += float(extra)
        penalty = 0.5 * sum(float(s @ s) for s in s_list)
        ll = log_likelihood(eta, y) - penalty - 0.5 * logdet
        return ll, (diag, C, F, cross)

    def _beta_covariance(self, blocks):
        """Fixed-effects block of the inverse penalized information matrix."""
        diag, C, F, cross = blocks
        big, small = self._big, self._small
        dinv = 1.0 / diag[big]
        Cb = C[big]
        Sbb = F - Cb.T @ (Cb * dinv[:, None])
        if small is None:
            return np.linalg.inv(Sbb)
        Sss = np.diag(diag[small]) - self._schur_cross(cross, dinv)
        Ssb = C[small] - cross.T @ (Cb * dinv[:, None])
        chol = cho_factor(Sss, lower=True)
        return np.linalg.inv(Sbb - Ssb.T @ cho_solve(chol, Ssb))

    # -- public API ----------------------------------------------------------

    def fit(self, X, y, groups):
        X, y = _validate_xy(X, y)
        A = _augment(X, self.fit_intercept)
        n, p = A.shape
        raw_groups = _as_group_list(groups, n)
        self.group_levels_ = []
        self._groups = []
        for g in raw_groups:
            labels, idx = np.unique(g, return_inverse=True)
            if len(labels) < 2:
                raise DataError("each random factor needs >= 2 levels")
            self.group_levels_.append(labels)
            self._groups.append(idx.astype(np.int64))
        self._levels = [len(lv) for lv in self.group_levels_]

        if len(self._groups) == 2:
            self._big = int(np.argmax(self._levels))
            self._small = 1 - self._big
            self._pair = _FactorPair(
                self._groups[self._big],
                self._levels[self._big],
                self._groups[self._small],
                self._levels[self._small],
            )
        else:
            self._big, self._small = 0, None
            self._pair = None

        k = len(self._groups)
        state = {
            "beta": np.zeros(p),
            "s": [np.zeros(q) for q in self._levels],
        }
        inner_log = {"converged": True, "iters": 0, "grad": np.nan}

        def profile_ll(sigma):
            beta, s_list, _, conv, iters, grad = self._inner_solve(
                A, y, sigma, state["beta"], [s.copy() for s in state["s"]]
            )
            state["beta"], state["s"] = beta, s_list
            inner_log["converged"] = conv
            inner_log["iters"] = iters
            inner_log["grad"] = grad
            ll, _ = self._laplace_parts(A, y, sigma, beta, s_list)
            return ll

        lo, hi = self.sigma_bounds
        if self.fix_sigma is not None:
            sigma = np.asarray(self.fix_sigma, dtype=float)
            if sigma.shape != (k,):
                raise DataError(f"fix_sigma must supply {k} values")
            if (sigma < 0).any():
                raise DataError("fix_sigma values must be >= 0")
            profile_ll(sigma)
            outer_success = True
            self.n_outer_evals_ = 1
        else:
            evals = [0]

            def objective(x):
                evals[0] += 1
                return -profile_ll(np.exp(x))

            f0 = objective(np.zeros(k))
            res = minimize(
                objective,
                x0=np.zeros(k),
                method="Nelder-Mead",
                bounds=[(np.log(lo), np.log(hi))] * k,
                options={
                    # Nelder-Mead's fatol is absolute; scale the requested
                    # relative tolerance by the objective magnitude.
                    "fatol": max(self.outer_tol * abs(f0), 1e-12),
                    "xatol": 1e-5,
                    "maxfev": self.max_outer_evals,
                },
            )
            sigma = np.exp(res.x)
            profile_ll(sigma)  # refresh state at the optimum
            outer_success = bool(res.success)
            self.n_outer_evals_ = evals[0]

        ll, blocks = self._laplace_parts(A, y, sigma, state["beta"], state["s"])
        cov = self._beta_covariance(blocks)
        beta = state["beta"]

        self.params_ = beta.copy()
        self.bse_ = np.sqrt(np.diag(cov))
        self.cov_params_ = cov
        if self.fit_intercept:
            self.intercept_ = float(beta[0])
            self.coef_ = beta[1:].copy()
        else:
            self.intercept_ = 0.0
            self.coef_ = beta.copy()
        self.sigma_ = sigma.copy()
        self.variance_components_ = sigma**2
        self.random_effects_ = [
            sig * s for sig, s in zip(sigma, state["s"])
        ]
        self.loglik_laplace_ = ll
        self.n_inner_iter_ = inner_log["iters"]
        self.gradient_norm_ = inner_log["grad"]
        self.boundary_ = bool((sigma <= lo * 10.0).any()) and self.fix_sigma is None
        self.converged_ = bool(inner_log["converged"] and outer_success)
        self.status_ = "converged" if self.converged_ else "non-converged"
        self._fit_data = (A, y)
        return self

    def _linear_predictor(self, X, groups=None, include_random=True):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        eta = _augment(X, self.fit_intercept) @ self.params_
        if include_random and groups is not None:
            raw = _as_group_list(groups, len(X))
            if len(raw) != len(self.group_levels_):
                raise DataError(
                    f"model was fit with {len(self.group_levels_)} grouping "
                    f"factors, got {len(raw)}"
                )
            for j, g in enumerate(raw):
                labels = self.group_levels_[j]
                pos = np.minimum(np.searchsorted(labels, g), len(labels) - 1)
                known = labels[pos] == g
                eta = eta + np.where(known, self.random_effects_[j][pos], 0.0)
        return eta

    def predict_proba(self, X, groups=None, include_random=True) -> np.ndarray:
        """Class probabilities; unseen group labels get a zero random effect."""
        eta = self._linear_predictor(X, groups, include_random)
        p1 = expit(np.clip(eta, -ETA_CLIP, ETA_CLIP))
        return np.column_stack([1.0 - p1, p1])

    def laplace_loglik(self, sigma) -> float:
        """Profile Laplace log-likelihood at given standard deviations.

        Re-solves the inner problem on the stored fit data from a cold
        start, leaving the fitted state untouched. At all-zero sigma this
        equals the plain logistic log-likelihood at its MLE.
        """
        A, y = self._fit_data
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != (len(self._levels),):
            raise DataError(f"expected {len(self._levels)} sigma values")
        beta, s_list, _, _, _, _ = self._inner_solve(
            A, y, sigma, np.zeros(A.shape[1]), [np.zeros(q) for q in self._levels]
        )
        ll, _ = self._laplace_parts(A, y, sigma, beta, s_list)
        return ll
