"""
Compare Command
===============
Runs two configurations on the same experiment (dataset, seed, topology)
one after the other and prints the four-row convergence table, one column
per algorithm.
"""

import os
import sys
from typing import Dict, Optional

from app.commands.train import EXIT_OK, EXIT_STALLED, execute
from app.errors import MismatchedExperiment, TrainingError
from app.report import format_comparison, summary_line, write_comparison
from app.runconfig import RunConfig
from app.trainers import StopReason, TrainReport


def _column_labels(config_a: RunConfig, config_b: RunConfig) -> tuple:
    a, b = config_a.algo.value, config_b.algo.value
    if a == b:
        return f"{a} (a)", f"{b} (b)"
    return a, b


def compare(config_a: RunConfig, config_b: RunConfig, out_path: Optional[str] = None) -> int:
    try:
        if config_a.experiment_key() != config_b.experiment_key():
            raise MismatchedExperiment(
                "configs must share dataset, label column, topology, seed and split to be compared"
            )
        if os.path.abspath(config_a.trace_path()) == os.path.abspath(config_b.trace_path()):
            root, ext = os.path.splitext(config_b.trace_path())
            config_b = config_b.model_copy(update={"output_path": f"{root}_b{ext}"})

        label_a, label_b = _column_labels(config_a, config_b)
        reports: Dict[str, TrainReport] = {}
        for label, config in ((label_a, config_a), (label_b, config_b)):
            outcome = execute(config)
            print(f"[{label}] {summary_line(outcome.report)}")
            reports[label] = outcome.report
    except TrainingError as e:
        print(f"error: {type(e).__name__}: {e.detail}", file=sys.stderr)
        return e.exit_code

    print()
    print(format_comparison(reports))
    if out_path:
        write_comparison(reports, out_path)
        print(f"comparison written to {out_path}")

    if any(r.stop_reason is StopReason.STALLED for r in reports.values()):
        return EXIT_STALLED
    return EXIT_OK
