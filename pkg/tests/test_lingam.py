import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.linear_model import LinearRegression

from factorcausal.exceptions import DataError, EstimationError
from factorcausal.lingam import (GAUSSIAN_ENTROPY, DirectLiNGAM, ResidualPanel, VARLiNGAM, _entropy,
                                 causal_order, entropy_approx, estimate_w0, is_acyclic_under,
                                 ordering_score, pairwise_residual, var_lingam)
from factorcausal.synth import dependence_along


def _lingam_sample(seed, m=3000):
    rng = np.random.default_rng(seed)
    e = rng.laplace(size=(m, 3))
    x0 = e[:, 0]
    x1 = 0.9 * x0 + e[:, 1]
    x2 = -0.7 * x1 + 0.5 * x0 + e[:, 2]
    return np.column_stack([x0, x1, x2])


def test_entropy_gaussian_and_laplace():
    g = np.random.default_rng(0).standard_normal(200_000)
    g = (g - g.mean()) / g.std()
    assert entropy_approx(g) == pytest.approx(GAUSSIAN_ENTROPY, abs=2e-3)
    lap = np.random.default_rng(0).laplace(size=200_000)
    lap = (lap - lap.mean()) / lap.std()
    assert entropy_approx(lap) < GAUSSIAN_ENTROPY - 0.01


def test_entropy_input_checks():
    with pytest.raises(DataError):
        entropy_approx(np.ones(10))
    with pytest.raises(DataError):
        entropy_approx(np.random.default_rng(0).standard_normal(100) * 3)


def test_entropy_large_values_stay_finite():
    u = np.zeros(100)
    u[0] = 800.0
    assert np.isfinite(_entropy(u))


def test_pairwise_residual_is_orthogonal():
    rng = np.random.default_rng(1)
    zi = rng.standard_normal(500)
    zj = 0.3 * zi + rng.standard_normal(500)
    r = pairwise_residual(zj, zi)
    assert abs(np.cov(r, zi)[0, 1]) < 1e-12
    with pytest.raises(EstimationError):
        pairwise_residual(zj, np.ones(500))


def test_ordering_score_matches_loop_oracle():
    Z = _lingam_sample(2, 2000)
    for order in itertools.permutations(range(3)):
        assert ordering_score(Z, order) == pytest.approx(dependence_along(Z, order), rel=1e-8)


def test_causal_order_recovers_chain():
    assert causal_order(_lingam_sample(3)) == [0, 1, 2]
    Z = _lingam_sample(3)[:, [2, 0, 1]]
    assert causal_order(ResidualPanel(Z.T, ("c", "a", "b"))) == [1, 2, 0]


def test_estimate_w0_matches_ols_oracle():
    Z = _lingam_sample(4)
    W0 = estimate_w0(Z, [0, 1, 2])
    ref = LinearRegression().fit(Z[:, :2], Z[:, 2]).coef_
    np.testing.assert_allclose(W0[2, :2], ref, rtol=1e-10)
    assert W0[0].tolist() == [0, 0, 0] and W0[1, 2] == 0
    np.testing.assert_allclose(W0[1, 0], 0.9, atol=0.05)
    with pytest.raises(DataError):
        estimate_w0(Z, [0, 0, 1])


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(4)), st.integers(0, 10_000))
def test_w0_triangular_under_any_order(order, seed):
    Z = np.random.default_rng(seed).laplace(size=(200, 4))
    W0 = estimate_w0(Z, order)
    assert is_acyclic_under(W0, order)
    assert np.all(np.diag(W0) == 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_causal_order_is_permutation(seed):
    Z = np.random.default_rng(seed).standard_t(3, size=(300, 5))
    assert sorted(causal_order(Z)) == list(range(5))


@settings(max_examples=10, deadline=None)
@given(st.permutations(range(3)))
def test_causal_order_column_equivariance(perm):
    Z = _lingam_sample(5)
    base = causal_order(Z)
    inv = np.argsort(perm)
    got = causal_order(Z[:, list(perm)])
    assert [perm[i] for i in got] == base
    assert [int(inv[b]) for b in base] == got


def test_var_lingam_identity_and_recovery(chain_panel, chain_spec):
    panel, _ = chain_panel
    m = var_lingam(panel, L=1)
    assert m.order == (0, 1, 2)
    np.testing.assert_allclose(m.W0, chain_spec.W0, atol=0.08)
    np.testing.assert_allclose(m.W[0], chain_spec.W[0], atol=0.08)
    I = np.eye(3)
    assert np.max(np.abs(m.W[0] - (I - m.W0) @ m.var.M[0])) == 0.0


def test_var_lingam_bic_lag(chain_panel):
    assert var_lingam(chain_panel[0]).L == 1


def test_degenerate_residuals_raise():
    x = np.random.default_rng(0).laplace(size=(300, 1))
    with pytest.raises(EstimationError):
        causal_order(np.column_stack([x, 2 * x, np.random.default_rng(1).laplace(size=(300, 1))]))
    with pytest.raises(EstimationError):
        causal_order(np.column_stack([x, np.ones((300, 1))]))


def test_estimators_follow_sklearn_conventions(chain_panel):
    panel, _ = chain_panel
    est = VARLiNGAM(lags=1)
    assert clone(est).get_params() == {"lags": 1, "max_lag": 5}
    est.fit(panel)
    assert est.causal_order_ == [0, 1, 2]
    assert est.adjacency_matrices_.shape == (2, 3, 3)
    assert est.predict(panel).shape == (panel.n_obs - 1, 3)
    d = DirectLiNGAM().fit(_lingam_sample(6))
    assert d.causal_order_ == [0, 1, 2]
    assert d.adjacency_matrix_.shape == (3, 3)
