import numpy as np
import pytest
from scipy.special import expit

from prokwo.errors import DataError
from prokwo.glm import LogisticIRLS
from prokwo.glmm import MixedLogisticRegression, _penalized_loglik_and_grad

from oracles import agq_fit, agq_marginal_loglik, central_difference_gradient


def simulate_crossed(rng, n_children, n_words, beta, sigma_child, sigma_word):
    """Fully crossed design with one word-level covariate."""
    x_word = rng.normal(size=n_words)
    child = np.repeat(np.arange(n_children), n_words)
    word = np.tile(np.arange(n_words), n_children)
    x = x_word[word]
    x = (x - x.mean()) / x.std(ddof=1)
    eta = (
        beta[0]
        + beta[1] * x
        + sigma_child * rng.normal(size=n_children)[child]
        + sigma_word * rng.normal(size=n_words)[word]
    )
    y = (rng.random(len(eta)) < expit(eta)).astype(float)
    return x[:, None], y, child, word


def simulate_single(rng, n_groups, per_group, beta, sigma):
    group = np.repeat(np.arange(n_groups), per_group)
    x = rng.normal(size=len(group))
    eta = beta[0] + beta[1] * x + sigma * rng.normal(size=n_groups)[group]
    y = (rng.random(len(eta)) < expit(eta)).astype(float)
    return x[:, None], y, group


class TestDegenerateCase:
    def test_zero_variance_matches_irls(self):
        rng = np.random.default_rng(0)
        X, y, child, word = simulate_crossed(rng, 25, 10, (-0.2, 0.8), 0.5, 0.4)
        irls = LogisticIRLS().fit(X, y)
        mixed = MixedLogisticRegression(fix_sigma=(0.0, 0.0)).fit(X, y, [child, word])
        assert np.abs(mixed.params_ - irls.params_).max() < 1e-6
        assert mixed.variance_components_.tolist() == [0.0, 0.0]

    def test_laplace_objective_at_zero_equals_logistic_loglik(self):
        rng = np.random.default_rng(1)
        X, y, child, word = simulate_crossed(rng, 20, 8, (0.1, -0.6), 0.6, 0.3)
        irls = LogisticIRLS().fit(X, y)
        mixed = MixedLogisticRegression().fit(X, y, [child, word])
        assert mixed.laplace_loglik(np.zeros(2)) == pytest.approx(
            irls.loglik_, abs=1e-9
        )


class TestInnerGradient:
    def test_penalized_gradient_matches_central_differences(self):
        rng = np.random.default_rng(2)
        X, y, child, word = simulate_crossed(rng, 12, 6, (0.2, 0.7), 0.5, 0.5)
        A = np.column_stack([np.ones(len(y)), X])
        groups = [child, word]
        levels = [12, 6]
        sigma = np.array([0.7, 0.4])

        def unpack(theta):
            s1 = theta[:12]
            s2 = theta[12:18]
            beta = theta[18:]
            return beta, [s1, s2]

        def objective(theta):
            beta, s_list = unpack(theta)
            pll, _ = _penalized_loglik_and_grad(
                A, y, groups, levels, sigma, beta, s_list
            )
            return pll

        for _ in range(5):
            theta = rng.normal(scale=0.5, size=12 + 6 + 2)
            beta, s_list = unpack(theta)
            _, grad = _penalized_loglik_and_grad(
                A, y, groups, levels, sigma, beta, s_list
            )
            numeric = central_difference_gradient(objective, theta, h=1e-5)
            denom = np.maximum(np.abs(grad), 1.0)
            assert (np.abs(grad - numeric) / denom).max() < 1e-6


class TestSingleFactorAgainstQuadrature:
    def test_small_dataset_fixed_effect(self):
        # 10 groups x 5 observations, the hardest regime for the Laplace
        # approximation; the quadrature oracle is the reference.
        rng = np.random.default_rng(12)
        X, y, group = simulate_single(rng, 10, 5, (0.3, 0.8), 0.6)
        mixed = MixedLogisticRegression().fit(X, y, [group])
        A = np.column_stack([np.ones(len(y)), X])
        beta_oracle, sigma_oracle, _ = agq_fit(A, y, group, n_nodes=15)
        assert np.abs(mixed.params_ - beta_oracle).max() < 1e-3

    def test_laplace_close_to_quadrature_likelihood_at_optimum(self):
        rng = np.random.default_rng(7)
        X, y, group = simulate_single(rng, 30, 20, (0.0, 0.5), 0.5)
        mixed = MixedLogisticRegression().fit(X, y, [group])
        A = np.column_stack([np.ones(len(y)), X])
        agq = agq_marginal_loglik(mixed.params_, mixed.sigma_[0], A, y, group)
        assert mixed.loglik_laplace_ == pytest.approx(agq, rel=1e-3)


class TestInvariances:
    def test_row_permutation_and_relabeling(self):
        rng = np.random.default_rng(3)
        X, y, child, word = simulate_crossed(rng, 18, 9, (0.1, 0.9), 0.5, 0.4)
        base = MixedLogisticRegression().fit(X, y, [child, word])

        perm = rng.permutation(len(y))
        relabel_child = rng.permutation(18)[child]
        relabel_word = rng.permutation(9)[word]
        shuffled = MixedLogisticRegression().fit(
            X[perm], y[perm], [relabel_child[perm], relabel_word[perm]]
        )
        assert np.abs(base.params_ - shuffled.params_).max() < 1e-8
        assert np.abs(base.sigma_ - shuffled.sigma_).max() < 1e-6

    def test_predicted_probabilities_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(4)
        X, y, child, word = simulate_crossed(rng, 15, 8, (2.5, 2.0), 0.8, 0.8)
        fit = MixedLogisticRegression().fit(X, y, [child, word])
        proba = fit.predict_proba(X, groups=[child, word])[:, 1]
        assert (proba > 0.0).all() and (proba < 1.0).all()


class TestBoundaryAndDiagnostics:
    def test_boundary_variance_reported_not_error(self):
        rng = np.random.default_rng(7)
        # no real child effect: sigma_child should hit the lower bound
        X, y, child, word = simulate_crossed(rng, 20, 10, (0.0, 0.8), 0.0, 0.6)
        fit = MixedLogisticRegression().fit(X, y, [child, word])
        assert fit.status_ == "converged"
        assert fit.boundary_
        assert fit.variance_components_[0] < 1e-6

    def test_single_level_factor_rejected(self):
        with pytest.raises(DataError):
            MixedLogisticRegression().fit(
                np.zeros((4, 1)), np.array([0.0, 1, 0, 1]), [np.zeros(4, dtype=int)]
            )

    def test_fix_sigma_shape_checked(self):
        rng = np.random.default_rng(6)
        X, y, child, word = simulate_crossed(rng, 10, 5, (0.0, 0.5), 0.3, 0.3)
        with pytest.raises(DataError):
            MixedLogisticRegression(fix_sigma=(0.5,)).fit(X, y, [child, word])

    def test_estimator_params_roundtrip(self):
        model = MixedLogisticRegression(outer_tol=1e-6, max_outer_evals=100)
        params = model.get_params()
        assert params["outer_tol"] == 1e-6
        assert MixedLogisticRegression(**params).get_params() == params


class TestRecoverySmoke:
    def test_crossed_design_point_estimates(self):
        rng = np.random.default_rng(8)
        X, y, child, word = simulate_crossed(rng, 120, 40, (-0.3, 1.0), 0.6, 0.4)
        fit = MixedLogisticRegression().fit(X, y, [child, word])
        assert fit.status_ == "converged"
        assert abs(fit.params_[1] - 1.0) <= 3.5 * fit.bse_[1]
        ci_low = fit.params_[1] - 1.959964 * fit.bse_[1]
        ci_high = fit.params_[1] + 1.959964 * fit.bse_[1]
        assert ci_low < 1.0 < ci_high
