"""
Back-Propagation
================
Sensitivities, gradients and the residual Jacobian.

  s^L = -2 F'(N^L) (t - a)            performance sensitivity (output layer)
  s^n = F'(N^n) (W^(n+1))^T s^(n+1)   backward recursion
  dM/dW^n = s^n (a^(n-1))^T,  dM/dB^n = s^n

For the Jacobian every (pattern, output k) residual gets its own seed
-F'(N^L) e_k, since q = t - a. The rows come out pattern-major, matching
network.residuals, and the columns follow network.flatten.

All routines run over the whole dataset at once (batch mode).
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from numpy.typing import ArrayLike

from app.config import settings
from app.errors import DimensionMismatch
from app.linalg import Matrix, Vector, as_matrix, as_vector
from app.network import (
    Dataset,
    ForwardTrace,
    Mlp,
    Transfer,
    check_conforms,
    flatten,
    forward_batch,
    performance_index,
    residuals,
    unflatten,
)

logger = logging.getLogger(__name__)


# ── Sensitivities ────────────────────────────────────────────────────────────

def output_sensitivity(trace: ForwardTrace, target: ArrayLike) -> np.ndarray:
    """s^L = -2 f'(N^L) (t - a^L); accepts a single trace or a batch trace."""
    target = np.asarray(target, dtype=np.float64)
    if target.shape != trace.output.shape:
        raise DimensionMismatch(
            f"target shape {target.shape} does not match output shape {trace.output.shape}"
        )
    f_prime = trace.transfers[-1].derivative(trace.net_inputs[-1])
    return -2.0 * f_prime * (target - trace.output)


def backpropagate(
    sens_next: np.ndarray,
    weights_next: ArrayLike,
    trace_layer_net: np.ndarray,
    transfer: Transfer,
) -> np.ndarray:
    """
    s^n = F'(N^n) (W^(n+1))^T s^(n+1).

    The last axis of `sens_next` runs over layer n+1 units and the last axis
    of `trace_layer_net` over layer n units; leading axes broadcast, so the
    same call serves one pattern, a batch, or a batch of Jacobian seeds.
    """
    W = as_matrix(weights_next)
    sens_next = np.asarray(sens_next, dtype=np.float64)
    trace_layer_net = np.asarray(trace_layer_net, dtype=np.float64)
    if W.shape[1] != trace_layer_net.shape[-1]:
        raise DimensionMismatch(
            f"weights have {W.shape[1]} columns, layer has {trace_layer_net.shape[-1]} units"
        )
    if sens_next.shape[-1] != W.shape[0]:
        raise DimensionMismatch(
            f"sensitivity has {sens_next.shape[-1]} entries, weights have {W.shape[0]} rows"
        )
    return Transfer(transfer).derivative(trace_layer_net) * (sens_next @ W)


# ── Gradient ─────────────────────────────────────────────────────────────────

def gradient_sd(mlp: Mlp, dataset: Dataset) -> Vector:
    """Gradient of M(x) in flatten order, summed over all patterns."""
    check_conforms(mlp, dataset)
    trace = forward_batch(mlp, dataset.patterns)
    s = output_sensitivity(trace, dataset.targets)     # m x units(L)

    blocks: List[np.ndarray] = []
    for n in range(len(mlp.layers), 0, -1):
        a_prev = trace.layer_input(n)
        blocks.append(np.concatenate([(s.T @ a_prev).ravel(), s.sum(axis=0)]))
        if n > 1:
            s = backpropagate(s, mlp.layers[n - 1].weights, trace.net_inputs[n - 2], trace.transfers[n - 2])

    return np.concatenate(blocks[::-1])


# ── Jacobian ─────────────────────────────────────────────────────────────────

def jacobian(mlp: Mlp, dataset: Dataset) -> Matrix:
    """dq/dx, one row per (pattern, output) residual, one column per parameter."""
    check_conforms(mlp, dataset)
    trace = forward_batch(mlp, dataset.patterns)
    m = dataset.size
    k = mlp.output_size

    # seeds[j, r, u] = -f'(N^L[j, u]) if u == r else 0
    f_prime = trace.transfers[-1].derivative(trace.net_inputs[-1])
    seeds = -np.einsum("ju,ru->jru", f_prime, np.eye(k))

    blocks: List[np.ndarray] = []
    for n in range(len(mlp.layers), 0, -1):
        a_prev = trace.layer_input(n)
        weight_block = np.einsum("jru,jv->jruv", seeds, a_prev).reshape(m, k, -1)
        blocks.append(np.concatenate([weight_block, seeds], axis=2))
        if n > 1:
            seeds = backpropagate(
                seeds,
                mlp.layers[n - 1].weights,
                trace.net_inputs[n - 2][:, None, :],
                trace.transfers[n - 2],
            )

    return np.concatenate(blocks[::-1], axis=2).reshape(m * k, mlp.param_count)


def gradient_gn(j: ArrayLike, q: ArrayLike) -> Vector:
    """grad M(x) = 2 J^T q."""
    J = as_matrix(j)
    q = as_vector(q)
    if J.shape[0] != q.size:
        raise DimensionMismatch(f"Jacobian has {J.shape[0]} rows, residual vector has {q.size}")
    return 2.0 * (J.T @ q)


def gn_hessian(j: ArrayLike) -> Matrix:
    """2 J^T J, symmetrized so it is exactly symmetric."""
    J = as_matrix(j)
    H = 2.0 * (J.T @ J)
    return (H + H.T) / 2.0


# ── Finite-difference oracles ────────────────────────────────────────────────

def _check_step(h: float) -> None:
    if not 1e-8 <= h <= 1e-3:
        raise ValueError(f"finite-difference step must lie in [1e-8, 1e-3], got {h}")


def fd_gradient(mlp: Mlp, dataset: Dataset, h: float = settings.FD_STEP) -> Vector:
    _check_step(h)
    x = flatten(mlp)
    grad = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (
            performance_index(unflatten(mlp, xp), dataset)
            - performance_index(unflatten(mlp, xm), dataset)
        ) / (2.0 * h)
    return grad


def fd_jacobian(mlp: Mlp, dataset: Dataset, h: float = settings.FD_STEP) -> Matrix:
    _check_step(h)
    x = flatten(mlp)
    columns = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        columns.append(
            (residuals(unflatten(mlp, xp), dataset) - residuals(unflatten(mlp, xm), dataset)) / (2.0 * h)
        )
    return np.column_stack(columns)


def relative_error(a: ArrayLike, b: ArrayLike) -> float:
    """max_i |a_i - b_i| / max(|a_i|, |b_i|, 1)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot compare shapes {a.shape} and {b.shape}")
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float(np.max(np.abs(a - b) / scale))


@dataclass(frozen=True)
class GradientCheck:
    sd_vs_gn: float
    sd_vs_fd: float
    gn_vs_fd: float
    jacobian_vs_fd: float

    def passes(self, analytic_tol: float = 1e-8, fd_tol: float = 1e-5) -> bool:
        return (
            self.sd_vs_gn <= analytic_tol
            and self.sd_vs_fd <= fd_tol
            and self.gn_vs_fd <= fd_tol
            and self.jacobian_vs_fd <= fd_tol
        )


def gradient_check(mlp: Mlp, dataset: Dataset, h: float = settings.FD_STEP) -> GradientCheck:
    """Compare the two analytic gradients, the Jacobian and their finite-difference oracles."""
    J = jacobian(mlp, dataset)
    g_sd = gradient_sd(mlp, dataset)
    g_gn = gradient_gn(J, residuals(mlp, dataset))
    g_fd = fd_gradient(mlp, dataset, h)

    result = GradientCheck(
        sd_vs_gn=relative_error(g_sd, g_gn),
        sd_vs_fd=relative_error(g_sd, g_fd),
        gn_vs_fd=relative_error(g_gn, g_fd),
        jacobian_vs_fd=relative_error(J, fd_jacobian(mlp, dataset, h)),
    )
    logger.debug("gradient check %s", result)
    return result
