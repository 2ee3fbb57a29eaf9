"""Pipeline configuration: one YAML file drives all eight commands."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError


@dataclass(frozen=True)
class PathsConfig:
    reports: Path
    output_dir: Path
    lexicon: Path | None = None
    generated: Path | None = None
    annotations: Path | None = None


@dataclass(frozen=True)
class IngestConfig:
    format: str = "csv"
    mesh_delimiter: str = ","
    drop_missing_mesh1: bool = False


@dataclass(frozen=True)
class ClusteringConfig:
    seed: int
    k_range: tuple[int, int] = (2, 8)
    idf: bool = True
    max_iter: int = 300


@dataclass(frozen=True)
class PairsConfig:
    strategy: str = "best_match"
    metric: str = "radcliq"
    decile_fraction: float = 0.10
    decile_scope: str = "cluster"
    radcliq_weight_bleu2: float = 1.0
    radcliq_weight_radgraph: float = -1.0
    radcliq_intercept: float = 0.0


@dataclass(frozen=True)
class SplitConfig:
    seed: int
    test_fraction: float = 0.2
    val_fraction: float = 0.2
    stratify: bool = True
    tolerance_pp: float = 2.0


@dataclass(frozen=True)
class TrainConfig:
    seed: int
    encoder: str = "toy"
    pooling: str = "mean"
    max_epochs: int = 40
    batch_size: int | None = 32
    learning_rate: float = 1e-3
    hidden: tuple[int, ...] | None = None
    optimizer: str = "adam"
    patience: int | None = None


@dataclass(frozen=True)
class AnalysisConfig:
    alpha: float = 0.05
    test_variant: str = "olkin_hendrickson"
    alternative: str = "one_sided_jh_greater"
    noisy_threshold: float = 3.0
    metric_k: str = "radcliq"
    metric_h: str = "radeval"


@dataclass(frozen=True)
class PipelineConfig:
    paths: PathsConfig
    clustering: ClusteringConfig
    split: SplitConfig
    training: TrainConfig
    ingest: IngestConfig = field(default_factory=IngestConfig)
    pairs: PairsConfig = field(default_factory=PairsConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    config_hash: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def seeds(self) -> dict[str, int]:
        return {
            "clustering": self.clustering.seed,
            "split": self.split.seed,
            "training": self.training.seed,
        }


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"config section {where!r} is missing required key {key!r}")
    return section[key]


def _build(cls, section: dict, name: str):
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r} config section: {exc}") from exc


def config_digest(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate the pipeline YAML; seeds are mandatory."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as handle:
        raw = yaml.safe_load(handle)
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")

    base = path.parent

    def resolve(value) -> Path | None:
        if value is None:
            return None
        candidate = Path(value)
        return candidate if candidate.is_absolute() else (base / candidate)

    paths_raw = _require(raw, "paths", "root")
    paths = PathsConfig(
        reports=resolve(_require(paths_raw, "reports", "paths")),
        output_dir=resolve(_require(paths_raw, "output_dir", "paths")),
        lexicon=resolve(paths_raw.get("lexicon")),
        generated=resolve(paths_raw.get("generated")),
        annotations=resolve(paths_raw.get("annotations")),
    )

    ingest = _build(IngestConfig, raw.get("ingest", {}), "ingest")

    clustering_raw = dict(raw.get("clustering", {}))
    if "seed" not in clustering_raw:
        raise ConfigError("clustering.seed is mandatory (no wall-clock default)")
    if "k_range" in clustering_raw:
        lo, hi = clustering_raw["k_range"]
        clustering_raw["k_range"] = (int(lo), int(hi))
    clustering = _build(ClusteringConfig, clustering_raw, "clustering")

    pairs = _build(PairsConfig, raw.get("pairs", {}), "pairs")
    if pairs.strategy not in ("best_match", "top_decile"):
        raise ConfigError(f"pairs.strategy must be best_match or top_decile, got {pairs.strategy!r}")
    if pairs.metric not in ("radcliq", "radgraph_f1"):
        raise ConfigError(f"pairs.metric must be radcliq or radgraph_f1, got {pairs.metric!r}")

    split_raw = dict(raw.get("split", {}))
    if "seed" not in split_raw:
        raise ConfigError("split.seed is mandatory (no wall-clock default)")
    split = _build(SplitConfig, split_raw, "split")

    training_raw = dict(raw.get("training", {}))
    if "seed" not in training_raw:
        raise ConfigError("training.seed is mandatory (no wall-clock default)")
    if training_raw.get("hidden") is not None:
        training_raw["hidden"] = tuple(int(v) for v in training_raw["hidden"])
    training = _build(TrainConfig, training_raw, "training")

    analysis = _build(AnalysisConfig, raw.get("analysis", {}), "analysis")
    if analysis.test_variant not in ("olkin_hendrickson", "hotelling_williams"):
        raise ConfigError(f"unknown analysis.test_variant {analysis.test_variant!r}")

    return PipelineConfig(
        paths=paths,
        ingest=ingest,
        clustering=clustering,
        pairs=pairs,
        split=split,
        training=training,
        analysis=analysis,
        config_hash=config_digest(raw),
        raw=raw,
    )
