"""
Reporting
=========
Turns TrainReports into the artifacts a run leaves behind.

  write_trace       → per-iteration CSV (one row per IterationRecord)
  summary           → stop reason, iteration counts, final figures
  build_comparison  → the four convergence rows, one column per run

Comparison rows:
  Mean of Squared Error (MSE)         final training mse
  Correct Classification (%)          final test figure (train if no test set)
  Peak workspace scalars              stand-in for a memory measurement
  Iterations to stable classification first iteration of the final plateau
"""

import csv
import os
from typing import Dict, List, Mapping, Optional

from app.trainers import TrainReport

TRACE_HEADER = ["iter", "M", "mse", "correct_pct", "ridge", "accepted", "workspace_scalars"]

COMPARISON_ROWS = [
    "Mean of Squared Error (MSE)",
    "Correct Classification (%)",
    "Peak workspace scalars",
    "Iterations to stable classification",
]


def write_trace(report: TrainReport, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for rec in report.records:
            writer.writerow([
                rec.index,
                repr(rec.performance_index),
                repr(rec.mse),
                repr(rec.correct_pct),
                repr(rec.ridge_used),
                "true" if rec.step_accepted else "false",
                rec.workspace_scalars,
            ])
    return path


def read_trace(path: str) -> List[Dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def final_correct_pct(report: TrainReport) -> float:
    """Test-set figure when the run was scored on one, else the training figure."""
    final = report.final
    return final.eval_correct_pct if final.eval_correct_pct is not None else final.correct_pct


def stable_iteration(report: TrainReport) -> int:
    if report.eval_iterations_to_stable is not None:
        return report.eval_iterations_to_stable
    return report.iterations_to_stable


def summary(report: TrainReport) -> dict:
    final = report.final
    return {
        "algorithm": report.algorithm.value,
        "stop_reason": report.stop_reason.value,
        "iterations": final.index,
        "iterations_to_stable": report.iterations_to_stable,
        "test_iterations_to_stable": report.eval_iterations_to_stable,
        "final_M": final.performance_index,
        "final_mse": final.mse,
        "train_correct_pct": round(final.correct_pct, 2),
        "test_correct_pct": None if final.eval_correct_pct is None else round(final.eval_correct_pct, 2),
        "peak_workspace_scalars": report.peak_workspace,
    }


def summary_line(report: TrainReport) -> str:
    return " ".join(f"{key}={value}" for key, value in summary(report).items())


def build_comparison(reports: Mapping[str, TrainReport]) -> Dict[str, List]:
    """Row name → one value per report, in the mapping's order."""
    columns = list(reports.values())
    return {
        COMPARISON_ROWS[0]: [r.final.mse for r in columns],
        COMPARISON_ROWS[1]: [round(final_correct_pct(r), 2) for r in columns],
        COMPARISON_ROWS[2]: [r.peak_workspace for r in columns],
        COMPARISON_ROWS[3]: [stable_iteration(r) for r in columns],
    }


def format_comparison(reports: Mapping[str, TrainReport]) -> str:
    table = build_comparison(reports)
    headers = ["Convergence parameter", *reports.keys()]
    rows = [[name, *(_fmt(v) for v in values)] for name, values in table.items()]
    widths = [max(len(str(row[i])) for row in [headers, *rows]) for i in range(len(headers))]

    def line(cells):
        return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()

    return "\n".join([line(headers), line(["-" * w for w in widths]), *map(line, rows)])


def write_comparison(reports: Mapping[str, TrainReport], path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    table = build_comparison(reports)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["parameter", *reports.keys()])
        for name, values in table.items():
            writer.writerow([name, *(repr(v) for v in values)])
    return path


def _fmt(value: Optional[float]) -> str:
    if isinstance(value, float):
        return f"{value:.4g}" if abs(value) < 1e-2 else f"{value:.2f}"
    return str(value)
