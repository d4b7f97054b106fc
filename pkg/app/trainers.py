"""
Training Loops
==============
Three ways to minimize M(x):

  sdbp         → x ← x - α ∇M(x), one batch step per iteration
  improved_gn  → Gauss-Newton step, then the half-gradient pre-adjustment
                 x ← x - ½g, accepted only if M decreases; g is ∇M/(m·k)
                 (basis "mean", the default) or ∇M itself ("sum").
                 "sum" is the half-gradient rule applied literally to the
                 summed index M = q^T q; on Iris-sized sets it overshoots
                 and stalls at the first iteration
  lm           → Gauss-Newton step damped by a ridge that grows on
                 rejection and shrinks on acceptance (no pre-adjustment)

Every iteration produces an IterationRecord; the run stops when the MSE
threshold or the classification threshold is met, the ridge exceeds
ridge_max (stalled), or max_iterations is reached.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.backprop import gradient_gn, gradient_sd, jacobian
from app.config import settings
from app.errors import DimensionMismatch, MissingLabels, NotPositiveDefinite, SingularNormalEquations
from app.linalg import Vector, as_matrix, as_vector, solve_spd
from app.network import Dataset, Mlp, check_conforms, flatten, performance_index, predict, residuals, unflatten

logger = logging.getLogger(__name__)

Classifier = Callable[[np.ndarray], int]


class Algorithm(str, Enum):
    SDBP = "sdbp"
    IMPROVED_GN = "improved_gn"
    LM = "lm"


class PreAdjustBasis(str, Enum):
    MEAN = "mean"   # gradient of M / (m x outputs)
    SUM = "sum"     # gradient of M itself


class StopReason(str, Enum):
    MSE_REACHED = "mse_reached"
    CLASSIFICATION_REACHED = "classification_reached"
    MAX_ITERATIONS = "max_iterations"
    STALLED = "stalled"


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    algorithm: Algorithm = Algorithm.IMPROVED_GN
    alpha: float = Field(default=settings.DEFAULT_ALPHA, gt=0)
    max_iterations: int = Field(default=100, ge=1)
    mse_threshold: float = Field(default=2.47e-5, ge=0)
    classification_threshold: float = Field(default=97.78, ge=0, le=100)
    ridge_initial: float = Field(default=0.0, ge=0)
    ridge_growth: float = Field(default=10.0, gt=1)
    ridge_max: float = 1e10
    ridge_restart: float = Field(default=settings.RIDGE_RESTART, gt=0)
    pre_adjust_enabled: bool = True
    pre_adjust_basis: PreAdjustBasis = PreAdjustBasis.MEAN
    seed: int = 0

    @model_validator(mode="after")
    def _ridge_bounds(self):
        if self.ridge_initial > self.ridge_max:
            raise ValueError(
                f"ridge_initial ({self.ridge_initial}) must not exceed ridge_max ({self.ridge_max})"
            )
        return self


@dataclass(frozen=True)
class IterationRecord:
    index: int
    performance_index: float
    mse: float
    correct_pct: float
    ridge_used: float
    step_accepted: bool
    workspace_scalars: int
    eval_correct_pct: Optional[float] = None
    rejected_ridges: Tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class TrainReport:
    algorithm: Algorithm
    records: Tuple[IterationRecord, ...]
    stop_reason: StopReason
    final_mlp: Mlp
    iterations_to_stable: int
    eval_iterations_to_stable: Optional[int] = None

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def peak_workspace(self) -> int:
        return max(r.workspace_scalars for r in self.records)


@dataclass(frozen=True)
class ProblemSize:
    patterns: int   # m
    outputs: int    # k
    params: int     # n


def workspace_scalars(stage: Algorithm, sizes: ProblemSize) -> int:
    """
    Live float64 count at an iteration's peak.

    sdbp:          gradient + parameters                 = 2n
    improved_gn/lm: J (mk x n) + J^T J (n x n) + q (mk)
                    + grad, step, parameters (3n)
    """
    m, k, n = sizes.patterns, sizes.outputs, sizes.params
    if Algorithm(stage) is Algorithm.SDBP:
        return 2 * n
    return m * k * n + n * n + m * k + 3 * n


# ── Single steps ─────────────────────────────────────────────────────────────

def sdbp_epoch(mlp: Mlp, dataset: Dataset, alpha: float) -> Mlp:
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return unflatten(mlp, flatten(mlp) - alpha * gradient_sd(mlp, dataset))


def gn_step(j: ArrayLike, q: ArrayLike, ridge: float = 0.0) -> Vector:
    """ΔX = -(J^T J + ridge·I)^-1 J^T q."""
    J = as_matrix(j)
    q = as_vector(q)
    if J.shape[0] != q.size:
        raise DimensionMismatch(f"Jacobian has {J.shape[0]} rows, residual vector has {q.size}")
    A = J.T @ J
    A = (A + A.T) / 2.0
    try:
        return -solve_spd(A, J.T @ q, ridge)
    except NotPositiveDefinite as e:
        raise SingularNormalEquations(
            f"normal equations singular at ridge {ridge:g}: {e.detail}",
            pivot_index=e.pivot_index,
            pivot=e.pivot,
        ) from e


def pre_adjust(x: ArrayLike, grad: ArrayLike) -> Vector:
    """x - ½ grad, over weights and biases alike."""
    x = as_vector(x)
    grad = as_vector(grad)
    if x.size != grad.size:
        raise DimensionMismatch(f"parameter vector has {x.size} entries, gradient has {grad.size}")
    return x - 0.5 * grad


def pre_adjust_scale(basis: PreAdjustBasis, sizes: ProblemSize) -> float:
    """Factor applied to ∇M before pre_adjust: 1/(m·k) for "mean", 1 for "sum"."""
    if PreAdjustBasis(basis) is PreAdjustBasis.MEAN:
        return 1.0 / (sizes.patterns * sizes.outputs)
    return 1.0


def correct_pct(mlp: Mlp, dataset: Dataset, classify: Classifier) -> float:
    if dataset.class_labels is None:
        raise MissingLabels("dataset carries no class labels")
    outputs = predict(mlp, dataset.patterns)
    predicted = np.array([classify(row) for row in outputs], dtype=np.int64)
    return 100.0 * float(np.count_nonzero(predicted == dataset.class_labels)) / dataset.size


# ── Training loop ────────────────────────────────────────────────────────────

@dataclass
class _Run:
    """Mutable bookkeeping for one call to train()."""
    config: TrainConfig
    dataset: Dataset
    classify: Classifier
    evaluation: Optional[Dataset]
    workspace: int
    records: List[IterationRecord] = field(default_factory=list)

    def state(self, mlp: Mlp) -> Tuple[float, float, float, Optional[float]]:
        M = performance_index(mlp, self.dataset)
        mse = M / (self.dataset.size * mlp.output_size)
        pct = math.nan
        if self.dataset.class_labels is not None:
            pct = correct_pct(mlp, self.dataset, self.classify)
        eval_pct = None
        if self.evaluation is not None and self.evaluation.class_labels is not None:
            eval_pct = correct_pct(mlp, self.evaluation, self.classify)
        return M, mse, pct, eval_pct

    def record(self, index: int, mlp: Mlp, ridge: float, accepted: bool,
               rejected: Tuple[float, ...] = ()) -> IterationRecord:
        M, mse, pct, eval_pct = self.state(mlp)
        rec = IterationRecord(
            index=index,
            performance_index=M,
            mse=mse,
            correct_pct=pct,
            ridge_used=ridge,
            step_accepted=accepted,
            workspace_scalars=self.workspace,
            eval_correct_pct=eval_pct,
            rejected_ridges=rejected,
        )
        self.records.append(rec)
        logger.info(
            "%s iter %d: M=%.6g mse=%.6g correct=%.2f%% ridge=%g accepted=%s",
            self.config.algorithm.value, index, M, mse, pct, ridge, accepted,
        )
        return rec

    def converged(self, rec: IterationRecord) -> Optional[StopReason]:
        if rec.mse <= self.config.mse_threshold:
            return StopReason.MSE_REACHED
        if not math.isnan(rec.correct_pct) and rec.correct_pct >= self.config.classification_threshold:
            return StopReason.CLASSIFICATION_REACHED
        return None


def _plateau_start(values: List[Optional[float]]) -> Optional[int]:
    """1-based position where the trailing run of values equal to the last one begins."""
    if not values or values[-1] is None:
        return None
    final = values[-1]

    def same(v):
        if v is None:
            return False
        if math.isnan(final):
            return math.isnan(v)
        return v == final

    start = len(values)
    while start > 1 and same(values[start - 2]):
        start -= 1
    return start


def _grow(ridge: float, config: TrainConfig) -> float:
    return ridge * config.ridge_growth if ridge > 0 else config.ridge_restart


def train(
    mlp: Mlp,
    dataset: Dataset,
    config: TrainConfig,
    classify: Classifier,
    evaluation: Optional[Dataset] = None,
) -> TrainReport:
    """
    Run the configured algorithm until a convergence criterion fires.

    `evaluation` (typically the test split) is only scored, never trained on.
    """
    check_conforms(mlp, dataset)
    if evaluation is not None:
        check_conforms(mlp, evaluation)

    sizes = ProblemSize(patterns=dataset.size, outputs=mlp.output_size, params=mlp.param_count)
    run = _Run(
        config=config,
        dataset=dataset,
        classify=classify,
        evaluation=evaluation,
        workspace=workspace_scalars(config.algorithm, sizes),
    )

    # a network that already meets a criterion takes no step
    M, mse, pct, _ = run.state(mlp)
    stop: Optional[StopReason] = None
    if mse <= config.mse_threshold or (not math.isnan(pct) and pct >= config.classification_threshold):
        rec = run.record(1, mlp, config.ridge_initial, accepted=False)
        stop = run.converged(rec)
        final = mlp
    elif config.algorithm is Algorithm.SDBP:
        final, stop = _train_sdbp(mlp, run)
    else:
        final, stop = _train_gauss_newton(mlp, run)

    records = tuple(run.records)
    return TrainReport(
        algorithm=config.algorithm,
        records=records,
        stop_reason=stop,
        final_mlp=final,
        iterations_to_stable=_plateau_start([r.correct_pct for r in records]),
        eval_iterations_to_stable=_plateau_start([r.eval_correct_pct for r in records]),
    )


def _train_sdbp(mlp: Mlp, run: _Run) -> Tuple[Mlp, StopReason]:
    config = run.config
    current = mlp
    for it in range(1, config.max_iterations + 1):
        current = sdbp_epoch(current, run.dataset, config.alpha)
        rec = run.record(it, current, 0.0, accepted=True)
        stop = run.converged(rec)
        if stop is not None:
            return current, stop
    return current, StopReason.MAX_ITERATIONS


def _train_gauss_newton(mlp: Mlp, run: _Run) -> Tuple[Mlp, StopReason]:
    config = run.config
    is_lm = config.algorithm is Algorithm.LM
    adjust = config.pre_adjust_enabled and not is_lm
    adjust_scale = pre_adjust_scale(
        config.pre_adjust_basis,
        ProblemSize(patterns=run.dataset.size, outputs=mlp.output_size, params=mlp.param_count),
    )

    current = mlp
    x = flatten(current)
    ridge = config.ridge_initial

    for it in range(1, config.max_iterations + 1):
        # ── Step 1: performance index at the current parameters ────────────
        M_old = performance_index(current, run.dataset)

        # ── Step 2: Jacobian and gradient ──────────────────────────────────
        J = jacobian(current, run.dataset)
        q = residuals(current, run.dataset)
        grad = gradient_gn(J, q)

        # ── Steps 3-4: step, adjust, accept or grow the ridge and retry ────
        rejected: List[float] = []
        accepted: Optional[Tuple[Mlp, Vector]] = None
        while ridge <= config.ridge_max:
            try:
                candidate = x + gn_step(J, q, ridge)
            except SingularNormalEquations as e:
                logger.debug("iter %d: %s", it, e.detail)
                candidate = None
            if candidate is not None:
                if adjust:
                    candidate = pre_adjust(candidate, adjust_scale * grad)
                trial = unflatten(current, candidate)
                M_new = performance_index(trial, run.dataset)
                if np.isfinite(M_new) and M_new < M_old:
                    accepted = (trial, candidate)
                    break
                logger.debug("iter %d: rejected at ridge %g (M %.6g >= %.6g)", it, ridge, M_new, M_old)
            rejected.append(ridge)
            ridge = _grow(ridge, config)

        if accepted is None:
            run.record(it, current, rejected[-1] if rejected else ridge, accepted=False,
                       rejected=tuple(rejected))
            logger.warning("%s stalled at iteration %d: ridge exceeded %g",
                           config.algorithm.value, it, config.ridge_max)
            return current, StopReason.STALLED

        current, x = accepted
        rec = run.record(it, current, ridge, accepted=True, rejected=tuple(rejected))
        if is_lm:
            ridge = ridge / config.ridge_growth
        stop = run.converged(rec)
        if stop is not None:
            return current, stop

    return current, StopReason.MAX_ITERATIONS
