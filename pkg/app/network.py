"""
Multilayer Perceptron
=====================
Topology, transfer functions, forward propagation, residuals and the
performance index.

  N^(n+1) = W^(n+1) a^n + B^(n+1)        (net input)
  a^(n+1) = f^(n+1)(N^(n+1))             (activation)
  q(x)    = t_j - a_j, pattern-major     (residual vector)
  M(x)    = q(x)^T q(x)                  (performance index, a SUM)

The flattened parameter vector x is laid out layer by layer: weights
row-major, then biases.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import expit

from app.config import settings
from app.errors import DimensionMismatch
from app.linalg import Matrix, Vector, as_matrix, as_vector


class Transfer(str, Enum):
    LOGSIG = "logsig"
    TANSIG = "tansig"
    PURELIN = "purelin"

    def apply(self, n: np.ndarray) -> np.ndarray:
        if self is Transfer.LOGSIG:
            return expit(n)
        if self is Transfer.TANSIG:
            return np.tanh(n)
        return np.array(n, dtype=np.float64, copy=True)

    def derivative(self, n: np.ndarray) -> np.ndarray:
        """d f(N) / dN, the diagonal of F'(N)."""
        if self is Transfer.LOGSIG:
            a = expit(n)
            return a * (1.0 - a)
        if self is Transfer.TANSIG:
            return 1.0 - np.tanh(n) ** 2
        return np.ones_like(n, dtype=np.float64)


@dataclass(frozen=True)
class LayerSpec:
    units: int
    transfer: Transfer = Transfer.LOGSIG

    def __post_init__(self):
        if self.units < 1:
            raise ValueError(f"a layer needs at least one unit, got {self.units}")
        object.__setattr__(self, "transfer", Transfer(self.transfer))


@dataclass(frozen=True, eq=False)
class Layer:
    weights: Matrix   # units x fan_in
    biases: Vector    # units
    transfer: Transfer

    def __post_init__(self):
        object.__setattr__(self, "weights", as_matrix(self.weights))
        object.__setattr__(self, "biases", as_vector(self.biases))
        object.__setattr__(self, "transfer", Transfer(self.transfer))

    @property
    def units(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def param_count(self) -> int:
        return self.weights.size + self.biases.size


@dataclass(frozen=True, eq=False)
class Mlp:
    input_size: int
    layers: Tuple[Layer, ...]

    def __post_init__(self):
        if not self.layers:
            raise DimensionMismatch("network needs at least one layer")
        fan_in = self.input_size
        for idx, layer in enumerate(self.layers, start=1):
            if layer.fan_in != fan_in:
                raise DimensionMismatch(
                    f"layer {idx} expects fan-in {fan_in}, weights have {layer.fan_in} columns"
                )
            if layer.biases.shape != (layer.units,):
                raise DimensionMismatch(
                    f"layer {idx} has {layer.units} units but {layer.biases.size} biases"
                )
            fan_in = layer.units

    @property
    def output_size(self) -> int:
        return self.layers[-1].units

    @property
    def param_count(self) -> int:
        return sum(layer.param_count for layer in self.layers)

    @property
    def layer_sizes(self) -> List[int]:
        return [self.input_size] + [layer.units for layer in self.layers]

    @property
    def transfers(self) -> List[Transfer]:
        return [layer.transfer for layer in self.layers]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mlp):
            return NotImplemented
        return (
            self.layer_sizes == other.layer_sizes
            and self.transfers == other.transfers
            and np.array_equal(flatten(self), flatten(other))
        )


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    """
    Per-layer net inputs N^n and activations a^n.

    For a single pattern every entry is a vector; for a batch (forward_batch)
    every entry is a matrix whose rows are patterns.
    """
    inputs: np.ndarray
    net_inputs: Tuple[np.ndarray, ...]
    activations: Tuple[np.ndarray, ...]
    transfers: Tuple[Transfer, ...]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]

    def layer_input(self, n: int) -> np.ndarray:
        """a^(n-1) for 1-based layer n."""
        return self.inputs if n == 1 else self.activations[n - 2]


@dataclass(frozen=True, eq=False)
class Dataset:
    patterns: Matrix                       # m x input_size
    targets: Matrix                        # m x output_size
    class_labels: Optional[np.ndarray] = None
    class_names: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        patterns = as_matrix(self.patterns)
        targets = as_matrix(self.targets)
        if patterns.shape[0] != targets.shape[0]:
            raise DimensionMismatch(
                f"{patterns.shape[0]} patterns but {targets.shape[0]} targets"
            )
        object.__setattr__(self, "patterns", patterns)
        object.__setattr__(self, "targets", targets)
        if self.class_labels is not None:
            labels = np.asarray(self.class_labels, dtype=np.int64)
            if labels.shape != (patterns.shape[0],):
                raise DimensionMismatch(
                    f"{labels.size} class labels for {patterns.shape[0]} patterns"
                )
            object.__setattr__(self, "class_labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def size(self) -> int:
        return self.patterns.shape[0]

    @property
    def input_size(self) -> int:
        return self.patterns.shape[1]

    @property
    def output_size(self) -> int:
        return self.targets.shape[1]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            patterns=self.patterns[idx],
            targets=self.targets[idx],
            class_labels=None if self.class_labels is None else self.class_labels[idx],
            class_names=self.class_names,
        )


# ── Construction ─────────────────────────────────────────────────────────────

def init_mlp(
    input_size: int,
    specs: Sequence[LayerSpec],
    seed: int,
    half_range: float = settings.INIT_HALF_RANGE,
) -> Mlp:
    """Draw every weight and bias i.i.d. uniform in [-half_range, +half_range]."""
    if half_range <= 0:
        raise ValueError(f"half_range must be positive, got {half_range}")
    if input_size < 1:
        raise ValueError(f"input_size must be at least 1, got {input_size}")
    if not specs:
        raise ValueError("at least one layer spec is required")

    rng = np.random.default_rng(seed)
    layers = []
    fan_in = input_size
    for spec in specs:
        weights = rng.uniform(-half_range, half_range, size=(spec.units, fan_in))
        biases = rng.uniform(-half_range, half_range, size=spec.units)
        layers.append(Layer(weights=weights, biases=biases, transfer=spec.transfer))
        fan_in = spec.units
    return Mlp(input_size=input_size, layers=tuple(layers))


def flatten(mlp: Mlp) -> Vector:
    return np.concatenate(
        [np.concatenate([layer.weights.ravel(), layer.biases]) for layer in mlp.layers]
    )


def unflatten(template: Mlp, x: ArrayLike) -> Mlp:
    x = as_vector(x)
    if x.size != template.param_count:
        raise DimensionMismatch(
            f"parameter vector has {x.size} entries, network needs {template.param_count}"
        )
    layers = []
    offset = 0
    for layer in template.layers:
        n_w = layer.weights.size
        weights = x[offset:offset + n_w].reshape(layer.weights.shape).copy()
        offset += n_w
        biases = x[offset:offset + layer.units].copy()
        offset += layer.units
        layers.append(Layer(weights=weights, biases=biases, transfer=layer.transfer))
    return Mlp(input_size=template.input_size, layers=tuple(layers))


# ── Propagation ──────────────────────────────────────────────────────────────

def forward(mlp: Mlp, pattern: ArrayLike) -> ForwardTrace:
    p = as_vector(pattern)
    if p.size != mlp.input_size:
        raise DimensionMismatch(f"pattern has {p.size} entries, network expects {mlp.input_size}")
    return _propagate(mlp, p)


def forward_batch(mlp: Mlp, patterns: ArrayLike) -> ForwardTrace:
    """Forward pass over all patterns at once; rows of every array are patterns."""
    P = as_matrix(patterns)
    if P.shape[1] != mlp.input_size:
        raise DimensionMismatch(
            f"patterns have {P.shape[1]} columns, network expects {mlp.input_size}"
        )
    return _propagate(mlp, P)


def _propagate(mlp: Mlp, a0: np.ndarray) -> ForwardTrace:
    net_inputs = []
    activations = []
    a = a0
    for layer in mlp.layers:
        # a @ W^T works for a single vector and for a batch of row vectors
        n = a @ layer.weights.T + layer.biases
        a = layer.transfer.apply(n)
        net_inputs.append(n)
        activations.append(a)
    return ForwardTrace(
        inputs=a0,
        net_inputs=tuple(net_inputs),
        activations=tuple(activations),
        transfers=tuple(mlp.transfers),
    )


def predict(mlp: Mlp, patterns: ArrayLike) -> Matrix:
    return forward_batch(mlp, patterns).output


def check_conforms(mlp: Mlp, dataset: Dataset) -> None:
    if dataset.input_size != mlp.input_size:
        raise DimensionMismatch(
            f"dataset patterns have {dataset.input_size} features, network expects {mlp.input_size}"
        )
    if dataset.output_size != mlp.output_size:
        raise DimensionMismatch(
            f"dataset targets have {dataset.output_size} entries, network outputs {mlp.output_size}"
        )


# ── Objective ────────────────────────────────────────────────────────────────

def residuals(mlp: Mlp, dataset: Dataset) -> Vector:
    check_conforms(mlp, dataset)
    errors = dataset.targets - predict(mlp, dataset.patterns)
    return errors.reshape(-1)


def performance_index(mlp: Mlp, dataset: Dataset) -> float:
    q = residuals(mlp, dataset)
    return float(q @ q)


def mse(mlp: Mlp, dataset: Dataset) -> float:
    return performance_index(mlp, dataset) / (dataset.size * mlp.output_size)
