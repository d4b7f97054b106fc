"""
Train Command
=============
One training run, end to end:

  load → encode → split → normalize → init network → train → trace CSV

Exit status: 0 for any stop reason except `stalled` (2); configuration and
data errors exit 1 with a diagnostic on stderr.
"""

import logging
import sys
from dataclasses import dataclass

from app.data import PreparedData, classify, prepare
from app.errors import ConfigError, TrainingError
from app.network import init_mlp
from app.report import summary_line, write_trace
from app.runconfig import RunConfig
from app.trainers import StopReason, TrainReport, train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_STALLED = 2


@dataclass(frozen=True, eq=False)
class RunOutcome:
    config: RunConfig
    data: PreparedData
    report: TrainReport
    trace_path: str

    @property
    def exit_status(self) -> int:
        return EXIT_STALLED if self.report.stop_reason is StopReason.STALLED else EXIT_OK


def execute(config: RunConfig) -> RunOutcome:
    """Run the pipeline and write the trace; errors propagate to the caller."""
    data = prepare(config.dataset_path, config.label_column, config.split_spec())

    if config.layers[-1] != len(data.class_names):
        raise ConfigError(
            None,
            f"output layer has {config.layers[-1]} units but the dataset has "
            f"{len(data.class_names)} classes",
        )

    mlp = init_mlp(
        input_size=data.train.input_size,
        specs=config.layer_specs(),
        seed=config.seed,
        half_range=config.init_half_range,
    )
    logger.info("training %s on %s (layers %s, %d parameters)",
                config.algo.value, config.dataset_path, mlp.layer_sizes, mlp.param_count)

    report = train(mlp, data.train, config.train_config(), classify, evaluation=data.test)
    trace_path = write_trace(report, config.trace_path())
    return RunOutcome(config=config, data=data, report=report, trace_path=trace_path)


def run(config: RunConfig) -> int:
    try:
        outcome = execute(config)
    except TrainingError as e:
        print(f"error: {type(e).__name__}: {e.detail}", file=sys.stderr)
        return e.exit_code

    print(summary_line(outcome.report))
    print(f"trace written to {outcome.trace_path}")
    if outcome.exit_status == EXIT_STALLED:
        print("error: training stalled (ridge exceeded ridge_max)", file=sys.stderr)
    return outcome.exit_status
