import numpy as np
import pytest

from app.errors import DimensionMismatch
from app.network import (
    Dataset,
    Layer,
    LayerSpec,
    Mlp,
    Transfer,
    flatten,
    forward,
    forward_batch,
    init_mlp,
    mse,
    performance_index,
    residuals,
    unflatten,
)
from conftest import linear_net


# ── Transfers ────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("transfer", list(Transfer))
def test_transfer_derivative_matches_central_difference(transfer):
    n = np.linspace(-10, 10, 100)
    h = 1e-6
    fd = (transfer.apply(n + h) - transfer.apply(n - h)) / (2 * h)
    np.testing.assert_allclose(transfer.derivative(n), fd, atol=1e-6)


def test_logsig_at_zero():
    assert Transfer.LOGSIG.apply(np.array([0.0]))[0] == 0.5


# ── Construction ─────────────────────────────────────────────────────────────

def test_init_is_deterministic():
    specs = [LayerSpec(3, Transfer.TANSIG), LayerSpec(2, Transfer.LOGSIG)]
    a = init_mlp(4, specs, seed=7, half_range=0.5)
    b = init_mlp(4, specs, seed=7, half_range=0.5)
    np.testing.assert_array_equal(flatten(a), flatten(b))
    assert a == b


def test_init_range_and_seed_sensitivity():
    specs = [LayerSpec(5), LayerSpec(3)]
    x = flatten(init_mlp(4, specs, seed=1, half_range=0.5))
    assert np.all(np.abs(x) <= 0.5)
    assert np.any(x != flatten(init_mlp(4, specs, seed=2, half_range=0.5)))


def test_init_param_count():
    mlp = init_mlp(4, [LayerSpec(8), LayerSpec(3)], seed=0)
    assert mlp.param_count == 8 * 4 + 8 + 3 * 8 + 3
    assert mlp.layer_sizes == [4, 8, 3]


def test_init_rejects_nonpositive_half_range():
    with pytest.raises(ValueError):
        init_mlp(2, [LayerSpec(1)], seed=0, half_range=0.0)


def test_layers_must_chain():
    with pytest.raises(DimensionMismatch):
        Mlp(
            input_size=2,
            layers=(
                Layer(weights=np.zeros((3, 2)), biases=np.zeros(3), transfer=Transfer.LOGSIG),
                Layer(weights=np.zeros((1, 2)), biases=np.zeros(1), transfer=Transfer.PURELIN),
            ),
        )


# ── Forward pass ─────────────────────────────────────────────────────────────

def test_forward_single_purelin_neuron():
    trace = forward(linear_net(w=2.0, b=1.0), [3.0])
    assert trace.net_inputs[0][0] == 7.0
    assert trace.output[0] == 7.0


def test_forward_logsig_zero_net_input():
    mlp = Mlp(input_size=1, layers=(Layer(weights=[[0.0]], biases=[0.0], transfer=Transfer.LOGSIG),))
    assert forward(mlp, [5.0]).output[0] == 0.5


def test_forward_matches_straight_line_oracle():
    mlp = init_mlp(2, [LayerSpec(2, Transfer.TANSIG), LayerSpec(1, Transfer.TANSIG)], seed=11)
    p = np.array([1.0, -1.0])
    (W1, b1), (W2, b2) = [(layer.weights, layer.biases) for layer in mlp.layers]

    h = [np.tanh(W1[u, 0] * p[0] + W1[u, 1] * p[1] + b1[u]) for u in range(2)]
    out = np.tanh(W2[0, 0] * h[0] + W2[0, 1] * h[1] + b2[0])

    trace = forward(mlp, p)
    np.testing.assert_allclose(trace.activations[0], h, rtol=1e-12, atol=1e-15)
    assert trace.output[0] == pytest.approx(out, rel=1e-12, abs=1e-15)
    # a^n == f(N^n) layer by layer
    for n, a, f in zip(trace.net_inputs, trace.activations, trace.transfers):
        np.testing.assert_array_equal(a, f.apply(n))


def test_forward_batch_rows_match_single_patterns(rng):
    mlp = init_mlp(3, [LayerSpec(4, Transfer.LOGSIG), LayerSpec(2, Transfer.PURELIN)], seed=5)
    patterns = rng.normal(size=(6, 3))
    batch = forward_batch(mlp, patterns)
    for j, p in enumerate(patterns):
        np.testing.assert_allclose(batch.output[j], forward(mlp, p).output, rtol=1e-12, atol=1e-15)


def test_forward_is_repeatable():
    mlp = init_mlp(2, [LayerSpec(3), LayerSpec(1)], seed=3)
    a, b = forward(mlp, [0.2, 0.4]), forward(mlp, [0.2, 0.4])
    for x, y in zip(a.activations, b.activations):
        np.testing.assert_array_equal(x, y)


def test_forward_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        forward(linear_net(), [1.0, 2.0])


# ── Residuals and performance index ──────────────────────────────────────────

def constant_net(outputs):
    """Zero weights, biases = outputs: every pattern yields `outputs`."""
    k = len(outputs)
    return Mlp(
        input_size=1,
        layers=(Layer(weights=np.zeros((k, 1)), biases=outputs, transfer=Transfer.PURELIN),),
    )


def test_residuals_zero_for_exact_fit(linear_fit):
    np.testing.assert_array_equal(residuals(linear_net(2.0, 0.0), linear_fit), [0.0, 0.0])
    assert performance_index(linear_net(2.0, 0.0), linear_fit) == 0.0


def test_residuals_subtraction():
    data = Dataset(patterns=[[0.0]], targets=[[1.0, 0.0]])
    np.testing.assert_array_equal(residuals(constant_net([0.25, 0.5]), data), [0.75, -0.5])


def test_residuals_are_pattern_major():
    data = Dataset(patterns=[[0.0], [0.0]], targets=[[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(residuals(constant_net([0.0, 0.0]), data), [1.0, 2.0, 3.0, 4.0])


def test_performance_index_sums_squares():
    data = Dataset(patterns=[[0.0], [0.0]], targets=[[1.0, 1.0], [2.0, 0.0]])
    assert performance_index(constant_net([0.0, 0.0]), data) == 6.0
    assert mse(constant_net([0.0, 0.0]), data) == 1.5


@pytest.mark.parametrize("seed", range(5))
def test_performance_index_equals_residual_norm(seed):
    rng = np.random.default_rng(seed)
    mlp = init_mlp(3, [LayerSpec(4, Transfer.TANSIG), LayerSpec(2, Transfer.LOGSIG)], seed=seed)
    data = Dataset(patterns=rng.normal(size=(7, 3)), targets=rng.uniform(size=(7, 2)))
    q = residuals(mlp, data)
    assert performance_index(mlp, data) == pytest.approx(float(np.dot(q, q)), rel=1e-12)


def test_residuals_reject_nonconforming_dataset():
    data = Dataset(patterns=[[0.0, 1.0]], targets=[[1.0]])
    with pytest.raises(DimensionMismatch):
        residuals(linear_net(), data)


def test_dataset_lengths_must_match():
    with pytest.raises(DimensionMismatch):
        Dataset(patterns=[[0.0], [1.0]], targets=[[1.0]])


# ── Flattening ───────────────────────────────────────────────────────────────

def test_flatten_ordering():
    np.testing.assert_array_equal(flatten(linear_net(2.0, 1.0)), [2.0, 1.0])
    mlp = Mlp(input_size=2, layers=(Layer(weights=[[3.0, 4.0]], biases=[5.0], transfer=Transfer.PURELIN),))
    np.testing.assert_array_equal(flatten(mlp), [3.0, 4.0, 5.0])


def test_flatten_round_trip():
    mlp = init_mlp(3, [LayerSpec(4, Transfer.TANSIG), LayerSpec(2, Transfer.PURELIN)], seed=9)
    assert unflatten(mlp, flatten(mlp)) == mlp


def test_unflatten_wrong_length():
    with pytest.raises(DimensionMismatch):
        unflatten(linear_net(), [1.0, 2.0, 3.0])
