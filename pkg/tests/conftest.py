import numpy as np
import pytest

from qkdsec.core import qcore
from qkdsec.schemas.distributions import JointDist, ProbDist
from qkdsec.schemas.protocol import AttackModel, ProtocolConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def biased_bit():
    return ProbDist.from_array((0, 1), [0.7, 0.3])


@pytest.fixture
def correlated_bits():
    """X uniform, Y = X flipped with probability 0.1"""
    return JointDist.from_matrix((0, 1), (0, 1), [[0.45, 0.05], [0.05, 0.45]])


@pytest.fixture
def bb84_estimation_povm():
    return qcore.mixed_povm(
        [qcore.basis_pair_povm("Z", "Z"), qcore.basis_pair_povm("X", "X")], [0.5, 0.5], ["Z", "X"]
    )


@pytest.fixture
def noiseless_config():
    def make(seed: int = 7, n: int = 256, **kwargs) -> ProtocolConfig:
        return ProtocolConfig(n=n, seed=seed, attack=AttackModel.bell_diagonal((1.0, 0.0, 0.0, 0.0)), **kwargs)

    return make
