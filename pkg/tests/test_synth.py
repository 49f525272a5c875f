import numpy as np
import pytest

from factorcausal.exceptions import DataError
from factorcausal.synth import (SvarSpec, generate, random_spec, recovery_metrics,
                                synthetic_indicators)


def test_generate_is_seed_deterministic(chain_spec):
    a, _ = generate(chain_spec)
    b, _ = generate(chain_spec)
    np.testing.assert_array_equal(a.values, b.values)
    c, _ = generate(SvarSpec(chain_spec.W0, chain_spec.W, 3000, seed=12))
    assert not np.array_equal(a.values, c.values)


def test_generate_frozen_values():
    spec = SvarSpec(np.zeros((2, 2)), np.zeros((1, 2, 2)), 3, "uniform", seed=0)
    panel, _ = generate(spec, burn_in=0)
    rng = np.random.Generator(np.random.PCG64(0))
    expect = rng.uniform(-np.sqrt(3), np.sqrt(3), (3, 2))
    np.testing.assert_array_equal(panel.values, expect.T)
    assert str(panel.dates[0]) == "2000-01-03" and str(panel.dates[-1]) == "2000-01-05"


@pytest.mark.parametrize("noise", ["laplace", "uniform", "student_t", "gaussian"])
def test_noise_has_unit_variance(noise):
    spec = SvarSpec(np.zeros((1, 1)), np.zeros((1, 1, 1)), 40_000, noise, seed=1)
    assert generate(spec)[0].values.var() == pytest.approx(1.0, abs=0.05)


def test_invalid_specs():
    with pytest.raises(DataError, match="cycle"):
        generate(SvarSpec(np.array([[0, 0.5], [0.5, 0]]), np.zeros((1, 2, 2)), 10))
    with pytest.raises(DataError, match="non-stationary"):
        generate(SvarSpec(np.zeros((2, 2)), 1.1 * np.eye(2)[None], 10))
    with pytest.raises(DataError):
        SvarSpec(np.zeros((2, 2)), np.zeros((1, 3, 3)), 10)


def test_random_spec_properties():
    spec = random_spec(5, 2, 100, 0.3, seed=4)
    assert spec.spectral_radius() < 0.9
    assert spec.W.shape == (2, 5, 5)
    nz = np.abs(np.concatenate([spec.W0.ravel(), spec.W.ravel()]))
    nz = nz[nz > 0]
    assert np.all((nz >= 0.3) & (nz <= 0.6))
    generate(spec)  # acyclic and stationary


def test_recovery_metrics_hand_example():
    truth = np.zeros((2, 3, 3))
    truth[0, 1, 0] = 1   # 0 -> 1
    truth[0, 2, 1] = 1   # 1 -> 2
    truth[1, 0, 0] = 1
    est = np.zeros((2, 3, 3))
    est[0, 0, 1] = 1     # reversed 1 -> 0
    est[0, 2, 1] = 1
    est[1, 0, 0] = 1
    est[1, 2, 2] = 1     # extra
    m = recovery_metrics(est, truth)
    assert (m.true_positives, m.false_positives, m.false_negatives) == (2, 2, 1)
    assert m.precision == 0.5 and m.recall == pytest.approx(2 / 3)
    assert m.shd == 2


def test_synthetic_indicators_shape():
    d = np.arange(np.datetime64("2001-01-01"), np.datetime64("2001-03-01"))
    vix, yields = synthetic_indicators(d, seed=2)
    assert list(vix.columns) == ["date", "open", "close"] and len(vix) == d.size
    assert list(yields.columns) == ["date", "3M", "10Y"]
    assert (vix[["open", "close"]] > 0).all().all()
