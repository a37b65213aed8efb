"""Experiment configuration files.

The format is flat ``key = value`` text. Lists are written ``[a, b, c]``
(brackets optional), ``#`` starts a comment, every key has a default and
unknown keys are rejected::

    dataset = wdbc.csv
    header = false
    label_column = 1
    drop_columns = [0]
    methods = [MFA, GEU-MFA-S]
    noise_levels = [0, 0.1, 0.2]
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

METHOD_NAMES = ("LDA", "RLDA", "MFA", "GEU-LDA-U", "GEU-LDA-S", "GEU-MFA-U", "GEU-MFA-S")


@dataclass
class ExperimentConfig:
    # data
    dataset: str = ""
    label_column: str = "-1"
    delimiter: str = ","
    header: bool = True
    drop_columns: list = field(default_factory=list)
    standardize: bool = True
    # methods and grids
    methods: list = field(default_factory=lambda: list(METHOD_NAMES))
    sigmas: list = field(default_factory=lambda: [0.001, 0.1, 0.2, 0.4, 0.8, 1.0, 2.0])
    dims: list = field(default_factory=lambda: [1, 2, 4, 8])
    ks: list = field(default_factory=lambda: [1, 3, 5])
    rlda_ridges: list = field(default_factory=lambda: [1e-4, 1e-3, 1e-2, 1e-1])
    k1: int = 5
    k2: int = 20
    # protocol
    noise_levels: list = field(default_factory=lambda: [0.0, 0.1, 0.2])
    noise_on_test: bool = False
    folds: int = 5
    inner_folds: int = 3
    repeats: int = 10
    seed: int = 0
    threads: int = 1
    train_sizes: list = field(default_factory=list)
    # single-model commands (fit / estimate-uncertainty / project)
    fit_method: str = "GEU-MFA-S"
    fit_d: int = 2
    sigma_scale: float = 1.0
    uncertainty_mode: str = "S"
    model_path: str = ""
    # synthetic boundary experiment
    n_per_class: int = 50
    separation: float = 2.0
    spread: float = 1.0
    replicates: list = field(default_factory=lambda: [100, 1000])
    resolution: int = 100
    boundary_d: int = 1
    boundary_k: int = 1

    def validate(self, n_features=None) -> "ExperimentConfig":
        for name in ("methods", "sigmas", "dims", "ks", "noise_levels", "rlda_ridges"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        bad = [m for m in self.methods if m not in METHOD_NAMES]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHOD_NAMES}")
        if self.fit_method not in METHOD_NAMES:
            raise ConfigError(f"unknown fit_method {self.fit_method!r}")
        if self.uncertainty_mode not in ("U", "S"):
            raise ConfigError("uncertainty_mode must be U or S")
        if any(d < 1 for d in self.dims) or any(k < 1 for k in self.ks):
            raise ConfigError("dims and ks must be positive")
        if n_features is not None and max(self.dims) > n_features:
            raise ConfigError(f"dims {self.dims} exceed the {n_features} available features")
        if any(s < 0 for s in self.sigmas) or any(r <= 0 for r in self.rlda_ridges):
            raise ConfigError("sigmas must be non-negative and rlda_ridges positive")
        if any(level < 0 for level in self.noise_levels):
            raise ConfigError("noise levels must be non-negative")
        if self.folds < 2 or self.inner_folds < 2 or self.repeats < 1 or self.threads < 1:
            raise ConfigError("folds/inner_folds need >= 2, repeats and threads >= 1")
        if self.k1 < 1 or self.k2 < 1:
            raise ConfigError("k1 and k2 must be positive")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_LIST_ITEM_TYPES = {
    "drop_columns": str, "methods": str, "sigmas": float, "dims": int, "ks": int,
    "rlda_ridges": float, "noise_levels": float, "train_sizes": int, "replicates": int,
}


def _coerce(kind, text, key):
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {kind.__name__}") from None


def _parse_value(key, text):
    if key in _LIST_ITEM_TYPES:
        inner = text.strip()
        if inner.startswith("["):
            if not inner.endswith("]"):
                raise ConfigError(f"{key}: unterminated list")
            inner = inner[1:-1]
        items = [t.strip() for t in inner.split(",") if t.strip()]
        return [_coerce(_LIST_ITEM_TYPES[key], t, key) for t in items]
    kind = {"bool": bool, "int": int, "float": float}.get(_FIELDS[key].type, str)
    return _coerce(kind, text.strip(), key)


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value)
    cfg = dataclasses.replace(base or ExperimentConfig(), **values)
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text)
    # relative dataset paths resolve against the config file
    if cfg.dataset and not Path(cfg.dataset).is_absolute():
        cfg.dataset = str((path.parent / cfg.dataset).resolve())
    if cfg.model_path and not Path(cfg.model_path).is_absolute():
        cfg.model_path = str((path.parent / cfg.model_path).resolve())
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, list):
            value = "[" + ", ".join(str(v) for v in value) + "]"
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"
