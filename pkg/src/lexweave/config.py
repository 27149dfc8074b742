"""Experiment configuration: a JSON file mirroring ExperimentConfig.

Every command serializes the fully resolved configuration into a
sidecar next to its outputs, so any result directory names the exact
settings that regenerate it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError


@dataclass
class PathsConfig:
    lexicon: str = ""
    embeddings: str = ""
    lemma_frequencies: str = ""
    out: str = "out"


@dataclass
class SplitConfig:
    mode: str = "frequency"  # "frequency" | "constrained" | "none"
    threshold: int = 5
    fraction: float = 0.1
    seed: int = 1


@dataclass
class MappingConfig:
    ridge: float = 0.0


@dataclass
class NetworkConfig:
    hidden: int = 1000
    epochs: int = 100
    patience: int = 5
    batch: int = 512
    step: float = 1e-3
    validation_fraction: float = 0.05
    seed: int = 1


@dataclass
class ProductionConfig:
    threshold: float = 0.01
    max_length: int = 25
    candidate_cap: int = 10_000
    feedback: str = "EOL"  # learning for the comprehension feedback mapping
    what: str = "network"  # "network" | "linear" | "gold"


@dataclass
class ProbeConfig:
    shrinkage: float = 0.1
    target: str = "class"
    features: str = "embeddings"  # "embeddings" | "shifts"
    min_cell_tokens: int = 30
    loocv: bool = True
    by_cell: bool = False


@dataclass
class EvaluationConfig:
    k: int = 10


@dataclass
class ReportConfig:
    results: str = ""  # per-word CSV from comprehend or produce
    kind: str = "evaluation"  # "evaluation" | "production"
    metric: str = "mean_accuracy"
    min_class_types: int = 3


@dataclass
class ExperimentConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    grams: int = 3
    learning: str = "EOL"
    split: SplitConfig = field(default_factory=SplitConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    production: ProductionConfig = field(default_factory=ProductionConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    report: ReportConfig = field(default_factory=ReportConfig)

    def validate(self) -> None:
        if self.grams not in (3, 4):
            raise ConfigError(f"grams must be 3 or 4, got {self.grams}")
        if self.learning not in ("EOL", "FIL"):
            raise ConfigError(f"learning must be EOL or FIL, got {self.learning!r}")
        if self.split.mode not in ("frequency", "constrained", "none"):
            raise ConfigError(f"unknown split mode {self.split.mode!r}")
        if self.production.what not in ("network", "linear", "gold"):
            raise ConfigError(f"unknown what-system {self.production.what!r}")
        if self.production.feedback not in ("EOL", "FIL"):
            raise ConfigError(f"feedback must be EOL or FIL, got {self.production.feedback!r}")
        if self.probe.features not in ("embeddings", "shifts"):
            raise ConfigError(f"unknown probe features {self.probe.features!r}")
        if self.report.kind not in ("evaluation", "production"):
            raise ConfigError(f"unknown report kind {self.report.kind!r}")
        if self.mapping.ridge < 0:
            raise ConfigError("mapping.ridge must be >= 0")
        if self.evaluation.k < 1:
            raise ConfigError("evaluation.k must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


_SECTIONS = {
    "paths": PathsConfig,
    "split": SplitConfig,
    "mapping": MappingConfig,
    "network": NetworkConfig,
    "production": ProductionConfig,
    "probe": ProbeConfig,
    "evaluation": EvaluationConfig,
    "report": ReportConfig,
}


def _build_section(cls, data: dict, name: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a JSON object")
    known = set(_SECTIONS) | {"grams", "learning"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build_section(cls, data[name], name)
    if "grams" in data:
        kwargs["grams"] = data["grams"]
    if "learning" in data:
        kwargs["learning"] = data["learning"]
    config = ExperimentConfig(**kwargs)
    config.validate()
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)
