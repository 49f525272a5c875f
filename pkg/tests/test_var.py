import warnings

import numpy as np
import pytest
from sklearn.base import clone

from factorcausal.exceptions import DataError, RankDeficiencyError
from factorcausal.synth import SvarSpec, generate
from factorcausal.var import VAR, bic, fit_var, lag_matrix, select_lag

statsmodels = pytest.importorskip("statsmodels.tsa.api")


@pytest.fixture
def var2_data():
    W = np.zeros((2, 3, 3))
    W[0] = [[0.4, 0.1, 0.0], [0.0, 0.3, 0.0], [0.2, 0.0, 0.1]]
    W[1] = [[-0.3, 0.0, 0.0], [0.0, 0.0, 0.25], [0.0, 0.0, -0.2]]
    panel, _ = generate(SvarSpec(np.zeros((3, 3)), W, 4000, "laplace", seed=2))
    return panel.to_array()


def test_lag_matrix_layout():
    Y = np.arange(12.0).reshape(6, 2)
    Yt, X = lag_matrix(Y, 2)
    np.testing.assert_array_equal(Yt, Y[2:])
    np.testing.assert_array_equal(X[0], [1, 2, 3, 0, 1])
    Yt, X = lag_matrix(Y, 1, start=3)
    assert Yt.shape == (3, 2) and X[0, 1] == 4


def test_fit_var_matches_statsmodels(var2_data):
    m = fit_var(var2_data, 2)
    ref = statsmodels.VAR(var2_data).fit(2, trend="c")
    np.testing.assert_allclose(m.M, ref.coefs, atol=1e-10)
    np.testing.assert_allclose(m.intercept, ref.intercept, atol=1e-12)
    np.testing.assert_allclose(m.residuals.T, ref.resid, atol=1e-10)


def test_select_lag_matches_statsmodels(var2_data):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ref = statsmodels.VAR(var2_data).select_order(5, trend="c").selected_orders["bic"]
    assert select_lag(var2_data, 5) == ref == 2


def test_bic_penalty_form(var2_data):
    m = fit_var(var2_data, 1)
    T, N = m.n_obs, 3
    expect = T * np.log(np.linalg.det(m.residuals @ m.residuals.T / T)) + N * (N + 1) * np.log(T)
    assert bic(m) == pytest.approx(expect, rel=1e-12)


def test_select_lag_one_is_trivial(var2_data):
    assert select_lag(var2_data, 1) == 1
    with pytest.raises(DataError):
        select_lag(var2_data, 0)


def test_rank_deficiency_names_columns():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200, 2))
    Y = np.column_stack([x, x[:, 0] + x[:, 1]])
    with pytest.raises(RankDeficiencyError) as info:
        fit_var(Y, 1, names=("a", "b", "c"))
    assert any(c.endswith(".L1") for c in info.value.columns)


def test_constant_column_collides_with_intercept():
    rng = np.random.default_rng(0)
    Y = np.column_stack([rng.standard_normal(100), np.full(100, 0.5)])
    with pytest.raises(RankDeficiencyError):
        fit_var(Y, 1, names=("a", "flat"))


def test_var_estimator_api(var2_data):
    est = VAR(max_lag=4)
    assert est.get_params() == {"lags": None, "max_lag": 4}
    est.fit(var2_data)
    assert est.lags_ == 2
    assert est.coefs_.shape == (2, 3, 3)
    fitted = est.predict(var2_data)
    np.testing.assert_allclose(var2_data[2:] - fitted, est.resid_, atol=1e-12)
    c = clone(est).set_params(lags=1).fit(var2_data)
    assert c.lags_ == 1
    with pytest.raises(DataError):
        est.predict(var2_data[:, :2])
