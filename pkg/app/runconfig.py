"""
Run Configuration
=================
Parses the flat key=value run file (the 'anncfg.conf' of a training run).

    # Iris, improved Gauss-Newton
    preset=iris
    dataset_path=data/iris.csv
    algo=improved_gn
    seed=3

'#' starts a comment, unknown keys are rejected, and every key left out
falls back to its preset value (if a preset is named) or its default.
"""

import os
from typing import Dict, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.config import settings
from app.data import SplitSpec
from app.errors import ConfigError
from app.network import LayerSpec, Transfer
from app.trainers import Algorithm, PreAdjustBasis, TrainConfig

PRESETS: Dict[str, Dict[str, str]] = {
    "iris": {
        "label_column": "-1",
        "alpha": "0.1",
        "layers": "8,3",
        "transfers": "logsig,logsig",
        "mse_threshold": "2.47E-005",
        "class_threshold": "97.78",
    },
    "wine": {
        "label_column": "0",
        "alpha": "0.003",
        "layers": "8,3",
        "transfers": "logsig,logsig",
        "mse_threshold": "1.824E-005",
        "class_threshold": "95.0",
    },
}

LIST_KEYS = {"layers", "transfers"}


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    preset: Optional[str] = None
    dataset_path: str
    label_column: int = -1
    layers: List[int] = Field(min_length=1)
    transfers: List[Transfer]
    init_half_range: float = Field(default=settings.INIT_HALF_RANGE, gt=0)

    algo: Algorithm = Algorithm.IMPROVED_GN
    alpha: float = Field(default=settings.DEFAULT_ALPHA, gt=0)
    max_iters: int = Field(default=100, ge=1)
    mse_threshold: float = Field(default=2.47e-5, ge=0)
    class_threshold: float = Field(default=97.78, ge=0, le=100)
    ridge_initial: float = Field(default=0.0, ge=0)
    ridge_growth: float = Field(default=10.0, gt=1)
    ridge_max: float = 1e10
    ridge_restart: float = Field(default=settings.RIDGE_RESTART, gt=0)
    pre_adjust: bool = True
    pre_adjust_basis: PreAdjustBasis = PreAdjustBasis.MEAN

    test_fraction: float = Field(default=settings.DEFAULT_TEST_FRACTION, gt=0, lt=1)
    stratified: bool = True
    seed: int = 0
    output_path: Optional[str] = None

    @field_validator("layers")
    @classmethod
    def _positive_units(cls, v: List[int]) -> List[int]:
        if any(units < 1 for units in v):
            raise ValueError("every layer needs at least one unit")
        return v

    @model_validator(mode="before")
    @classmethod
    def _default_transfers(cls, data):
        if isinstance(data, dict) and data.get("transfers") is None and isinstance(data.get("layers"), list):
            data = {**data, "transfers": [Transfer.LOGSIG.value] * len(data["layers"])}
        return data

    @model_validator(mode="after")
    def _check_shapes(self):
        if len(self.transfers) != len(self.layers):
            raise ValueError(
                f"transfers lists {len(self.transfers)} entries but layers lists {len(self.layers)}"
            )
        if self.ridge_initial > self.ridge_max:
            raise ValueError("ridge_initial must not exceed ridge_max")
        return self

    # ── Views onto the library types ────────────────────────────────────────

    def layer_specs(self) -> List[LayerSpec]:
        return [LayerSpec(units=u, transfer=t) for u, t in zip(self.layers, self.transfers)]

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            algorithm=self.algo,
            alpha=self.alpha,
            max_iterations=self.max_iters,
            mse_threshold=self.mse_threshold,
            classification_threshold=self.class_threshold,
            ridge_initial=self.ridge_initial,
            ridge_growth=self.ridge_growth,
            ridge_max=self.ridge_max,
            ridge_restart=self.ridge_restart,
            pre_adjust_enabled=self.pre_adjust,
            pre_adjust_basis=self.pre_adjust_basis,
            seed=self.seed,
        )

    def split_spec(self) -> SplitSpec:
        return SplitSpec(test_fraction=self.test_fraction, seed=self.seed, stratified=self.stratified)

    def trace_path(self) -> str:
        if self.output_path:
            return self.output_path
        return os.path.join(settings.TRACE_DIR, f"{self.algo.value}_seed{self.seed}.csv")

    def experiment_key(self) -> Tuple:
        """What two runs must share to be compared side by side."""
        return (
            os.path.abspath(self.dataset_path),
            self.label_column,
            tuple(self.layers),
            tuple(t.value for t in self.transfers),
            self.init_half_range,
            self.seed,
            self.test_fraction,
            self.stratified,
        )


KNOWN_KEYS = set(RunConfig.model_fields)


def _split_lines(text: str) -> List[Tuple[int, str, str]]:
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line_no, f"expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in KNOWN_KEYS:
            raise ConfigError(line_no, f"unknown key '{key}'")
        if not value:
            raise ConfigError(line_no, f"key '{key}' has no value")
        entries.append((line_no, key, value))
    return entries


def _coerce(key: str, value: str):
    if key in LIST_KEYS:
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def parse_config(text: str, overrides: Optional[Mapping[str, str]] = None) -> RunConfig:
    """
    Build a RunConfig from key=value text.

    `overrides` (command-line flags) win over the file; the file wins over
    the preset; the preset wins over the built-in defaults.
    """
    if not text.strip() and not overrides:
        raise ConfigError(None, "configuration is empty")

    lines: Dict[str, Optional[int]] = {}
    values: Dict[str, str] = {}
    for line_no, key, value in _split_lines(text):
        lines[key] = line_no
        values[key] = value
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in KNOWN_KEYS:
            raise ConfigError(None, f"unknown key '{key}'")
        lines[key] = None
        values[key] = str(value)

    merged: Dict[str, str] = {}
    preset = values.get("preset")
    if preset is not None:
        preset = preset.lower()
        if preset not in PRESETS:
            raise ConfigError(lines.get("preset"), f"unknown preset '{preset}' (choose {', '.join(PRESETS)})")
        merged.update(PRESETS[preset])
        if "layers" in values and "transfers" not in values:
            # the preset's transfers only fit the preset's layers
            merged.pop("transfers", None)
        values["preset"] = preset
    merged.update(values)

    for required in ("dataset_path", "layers"):
        if required not in merged:
            raise ConfigError(None, f"missing required key '{required}'")

    try:
        return RunConfig(**{key: _coerce(key, value) for key, value in merged.items()})
    except ValidationError as e:
        err = e.errors()[0]
        if err["loc"]:
            key = str(err["loc"][0])
            raise ConfigError(lines.get(key), f"{key}: {err['msg']}") from None
        raise ConfigError(None, err["msg"]) from None


def load_config(path: str, overrides: Optional[Mapping[str, str]] = None) -> RunConfig:
    if not os.path.isfile(path):
        raise ConfigError(None, f"config file not found: {path}")
    with open(path) as f:
        return parse_config(f.read(), overrides)
