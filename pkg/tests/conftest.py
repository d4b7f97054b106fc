import numpy as np
import pytest

from app.data import export_builtin
from app.network import Dataset, Layer, Mlp, Transfer


@pytest.fixture(scope="session")
def iris_csv(tmp_path_factory):
    return export_builtin("iris", str(tmp_path_factory.mktemp("data") / "iris.csv"))


@pytest.fixture(scope="session")
def wine_csv(tmp_path_factory):
    return export_builtin("wine", str(tmp_path_factory.mktemp("data") / "wine.csv"))


def linear_net(w: float = 0.0, b: float = 0.0) -> Mlp:
    """a = w·p + b, one purelin neuron."""
    return Mlp(input_size=1, layers=(Layer(weights=[[w]], biases=[b], transfer=Transfer.PURELIN),))


def identity_net(width: int) -> Mlp:
    """Outputs equal inputs; handy for scoring hand-picked output vectors."""
    return Mlp(
        input_size=width,
        layers=(Layer(weights=np.eye(width), biases=np.zeros(width), transfer=Transfer.PURELIN),),
    )


@pytest.fixture
def linear_fit():
    """Points (1, 2) and (2, 4): the least-squares line is w=2, b=0."""
    return Dataset(patterns=[[1.0], [2.0]], targets=[[2.0], [4.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
