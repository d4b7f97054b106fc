import numpy as np
import pytest

from app.backprop import (
    backpropagate,
    fd_gradient,
    fd_jacobian,
    gn_hessian,
    gradient_check,
    gradient_gn,
    gradient_sd,
    jacobian,
    output_sensitivity,
    relative_error,
)
from app.commands.check import random_problem
from app.errors import DimensionMismatch
from app.network import Dataset, Layer, LayerSpec, Mlp, Transfer, forward, init_mlp, residuals
from conftest import linear_net

SEEDS = range(20)


# ── Sensitivities ────────────────────────────────────────────────────────────

def test_output_sensitivity_purelin():
    trace = forward(linear_net(0.0, 0.0), [1.0])
    np.testing.assert_array_equal(output_sensitivity(trace, [0.5]), [-1.0])


def test_output_sensitivity_logsig():
    mlp = Mlp(input_size=1, layers=(Layer(weights=[[0.0]], biases=[0.0], transfer=Transfer.LOGSIG),))
    trace = forward(mlp, [1.0])      # a = 0.5, f' = 0.25
    np.testing.assert_allclose(output_sensitivity(trace, [1.5]), [-0.5])


def test_output_sensitivity_shape_check():
    trace = forward(linear_net(), [1.0])
    with pytest.raises(DimensionMismatch):
        output_sensitivity(trace, [1.0, 2.0])


@pytest.mark.parametrize("seed", range(5))
def test_output_sensitivity_is_dM_dN(seed):
    rng = np.random.default_rng(seed)
    mlp = init_mlp(2, [LayerSpec(3, Transfer.TANSIG), LayerSpec(2, Transfer.LOGSIG)], seed=seed)
    p, t = rng.normal(size=2), rng.uniform(size=2)
    trace = forward(mlp, p)
    f = mlp.layers[-1].transfer

    def M(n_out):
        e = t - f.apply(n_out)
        return float(e @ e)

    h = 1e-6
    fd = []
    for u in range(2):
        dn = np.zeros(2)
        dn[u] = h
        fd.append((M(trace.net_inputs[-1] + dn) - M(trace.net_inputs[-1] - dn)) / (2 * h))
    assert relative_error(output_sensitivity(trace, t), fd) <= 1e-5


def test_backpropagate_zero_and_scalar():
    np.testing.assert_array_equal(
        backpropagate(np.zeros(2), np.ones((2, 3)), np.zeros(3), Transfer.LOGSIG), np.zeros(3)
    )
    np.testing.assert_array_equal(
        backpropagate(np.array([3.0]), [[2.0]], np.array([0.7]), Transfer.PURELIN), [6.0]
    )


def test_backpropagate_shape_checks():
    with pytest.raises(DimensionMismatch):
        backpropagate(np.zeros(2), np.ones((2, 3)), np.zeros(4), Transfer.LOGSIG)
    with pytest.raises(DimensionMismatch):
        backpropagate(np.zeros(3), np.ones((2, 3)), np.zeros(3), Transfer.LOGSIG)


@pytest.mark.parametrize("seed", range(5))
def test_hidden_sensitivity_is_dM_dN(seed):
    rng = np.random.default_rng(seed)
    mlp = init_mlp(
        2,
        [LayerSpec(3, Transfer.TANSIG), LayerSpec(2, Transfer.LOGSIG), LayerSpec(2, Transfer.PURELIN)],
        seed=seed,
    )
    p, t = rng.normal(size=2), rng.uniform(size=2)
    trace = forward(mlp, p)
    L1, L2, L3 = mlp.layers

    s3 = output_sensitivity(trace, t)
    s2 = backpropagate(s3, L3.weights, trace.net_inputs[1], L2.transfer)
    s1 = backpropagate(s2, L2.weights, trace.net_inputs[0], L1.transfer)

    def M(n1):
        a1 = L1.transfer.apply(n1)
        a2 = L2.transfer.apply(L2.weights @ a1 + L2.biases)
        a3 = L3.transfer.apply(L3.weights @ a2 + L3.biases)
        return float((t - a3) @ (t - a3))

    h = 1e-6
    fd = []
    for u in range(3):
        dn = np.zeros(3)
        dn[u] = h
        fd.append((M(trace.net_inputs[0] + dn) - M(trace.net_inputs[0] - dn)) / (2 * h))
    assert relative_error(s1, fd) <= 1e-5


def test_performance_and_residual_seeds_are_linear(rng):
    mlp = init_mlp(3, [LayerSpec(3, Transfer.TANSIG), LayerSpec(3, Transfer.LOGSIG)], seed=2)
    p, t = rng.normal(size=3), rng.uniform(size=3)
    trace = forward(mlp, p)
    q = t - trace.output
    f_prime = mlp.layers[-1].transfer.derivative(trace.net_inputs[-1])
    residual_seeds = [-f_prime * np.eye(3)[k] for k in range(3)]
    combined = 2 * sum(q[k] * residual_seeds[k] for k in range(3))
    np.testing.assert_allclose(output_sensitivity(trace, t), combined, atol=1e-10)


# ── Gradient ─────────────────────────────────────────────────────────────────

def test_gradient_zero_for_exact_fit(linear_fit):
    np.testing.assert_array_equal(gradient_sd(linear_net(2.0, 0.0), linear_fit), [0.0, 0.0])


def test_gradient_single_neuron_by_hand():
    data = Dataset(patterns=[[2.0]], targets=[[1.0]])
    np.testing.assert_allclose(gradient_sd(linear_net(), data), [-4.0, -2.0])


def test_fd_gradient_exact_on_linear_model():
    data = Dataset(patterns=[[2.0]], targets=[[1.0]])
    np.testing.assert_allclose(fd_gradient(linear_net(), data, 1e-6), [-4.0, -2.0], atol=1e-8)


def test_fd_gradient_zero_for_constant_fit():
    data = Dataset(patterns=[[1.0], [3.0]], targets=[[0.0], [0.0]])
    np.testing.assert_allclose(fd_gradient(linear_net(), data), [0.0, 0.0], atol=1e-12)


def test_fd_step_range():
    data = Dataset(patterns=[[2.0]], targets=[[1.0]])
    with pytest.raises(ValueError):
        fd_gradient(linear_net(), data, 1e-2)


# ── Jacobian ─────────────────────────────────────────────────────────────────

def test_jacobian_single_neuron_by_hand():
    data = Dataset(patterns=[[2.0]], targets=[[5.0]])
    np.testing.assert_array_equal(jacobian(linear_net(0.3, 0.1), data), [[-2.0, -1.0]])


def test_jacobian_shape():
    mlp = init_mlp(2, [LayerSpec(1, Transfer.TANSIG), LayerSpec(2, Transfer.LOGSIG)], seed=0)
    assert mlp.param_count == 7
    data = Dataset(patterns=[[0.1, 0.2], [0.3, 0.4]], targets=[[1.0, 0.0], [0.0, 1.0]])
    assert jacobian(mlp, data).shape == (4, 7)


def test_gradient_gn_by_hand():
    np.testing.assert_array_equal(gradient_gn([[-2.0, -1.0]], [1.0]), [-4.0, -2.0])
    np.testing.assert_array_equal(gradient_gn(np.ones((3, 2)), np.zeros(3)), [0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        gradient_gn(np.ones((3, 2)), np.zeros(2))


def test_gn_hessian_by_hand():
    np.testing.assert_array_equal(gn_hessian([[1.0, 0.0]]), [[2.0, 0.0], [0.0, 0.0]])


@pytest.mark.parametrize("seed", range(5))
def test_gn_hessian_symmetric_psd(seed):
    rng = np.random.default_rng(seed)
    H = gn_hessian(rng.normal(size=(6, 9)))
    np.testing.assert_array_equal(H, H.T)
    for _ in range(20):
        v = rng.normal(size=9)
        assert v @ H @ v >= -1e-10 * (v @ v)


# ── Oracles on random networks ───────────────────────────────────────────────

@pytest.mark.parametrize("seed", SEEDS)
def test_gradient_triangle(seed):
    mlp, data = random_problem(seed)
    assert mlp.param_count <= 30
    assert data.size <= 10

    g_sd = gradient_sd(mlp, data)
    g_gn = gradient_gn(jacobian(mlp, data), residuals(mlp, data))
    g_fd = fd_gradient(mlp, data)
    assert relative_error(g_sd, g_gn) <= 1e-8
    assert relative_error(g_sd, g_fd) <= 1e-5
    assert relative_error(g_gn, g_fd) <= 1e-5


@pytest.mark.parametrize("seed", SEEDS)
def test_jacobian_matches_finite_differences(seed):
    mlp, data = random_problem(seed)
    assert relative_error(jacobian(mlp, data), fd_jacobian(mlp, data)) <= 1e-5


def test_jacobian_rows_follow_residual_order():
    mlp, data = random_problem(3)
    J = jacobian(mlp, data)
    k = mlp.output_size
    for j in range(data.size):
        one = Dataset(patterns=data.patterns[j:j + 1], targets=data.targets[j:j + 1])
        np.testing.assert_allclose(J[j * k:(j + 1) * k], jacobian(mlp, one), rtol=1e-12, atol=1e-14)


def test_gradient_check_passes():
    mlp, data = random_problem(42)
    assert gradient_check(mlp, data).passes()
