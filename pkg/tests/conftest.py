import numpy as np
import pytest

from factorcausal.synth import SvarSpec, generate


@pytest.fixture
def chain_spec():
    """Three factors, 0 -> 1 -> 2 instantaneously, with modest lag-1 feedback."""
    W0 = np.array([[0.0, 0.0, 0.0],
                   [0.8, 0.0, 0.0],
                   [0.0, -0.7, 0.0]])
    W1 = np.array([[0.3, 0.0, 0.0],
                   [0.0, 0.0, 0.4],
                   [0.0, 0.0, 0.2]])
    return SvarSpec(W0, W1[None], T=3000, noise="laplace", seed=11, names=("a", "b", "c"))


@pytest.fixture
def chain_panel(chain_spec):
    return generate(chain_spec)


@pytest.fixture
def noise_panel():
    spec = SvarSpec(np.zeros((4, 4)), np.zeros((1, 4, 4)), T=800, noise="laplace", seed=5)
    return generate(spec)[0]
