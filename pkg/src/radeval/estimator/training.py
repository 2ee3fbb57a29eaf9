"""Estimator training: MSE descent with per-epoch validation Kendall tau,
checkpoint selection and persistence, and referenceless scoring."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import _kernels
from ..pairgen import Orientation, ScoreKind, score_orientation
from . import model
from .encoders import encode, get_encoder


@dataclass(frozen=True)
class TrainingConfig:
    seed: int
    max_epochs: int = 40
    batch_size: int | None = 32  # None trains full-batch
    learning_rate: float = 1e-3
    hidden: tuple[int, ...] | None = None
    optimizer: str = "adam"
    patience: int | None = None  # epochs without a new best tau before stopping

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class PairExample:
    src: str  # ground-truth report
    mt: str  # paired / generated report
    score: float


def load_triplets_jsonl(path: str | Path) -> list[PairExample]:
    examples = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            examples.append(PairExample(src=record["src"], mt=record["mt"], score=float(record["score"])))
    return examples


def featurize(examples: list[PairExample], encoder, pooling: str = "mean") -> np.ndarray:
    """Combined-feature matrix for a batch of (src, mt) pairs."""
    if isinstance(encoder, str):
        encoder = get_encoder(encoder)
    rows = []
    for example in examples:
        h = model.pool(encode(example.mt, encoder), pooling)
        s = model.pool(encode(example.src, encoder), pooling)
        rows.append(model.combine(h, s))
    return np.stack(rows)


def kendall_tau(predictions, targets) -> float | None:
    """Tie-corrected Kendall tau-b; None when either list is fully tied."""
    x = np.asarray(predictions, dtype=float)
    y = np.asarray(targets, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"prediction/target shapes differ: {x.shape} vs {y.shape}")
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")

    concordant, discordant = _kernels.kendall_pair_counts(x, y)
    n0 = n * (n - 1) // 2

    def tie_term(values: np.ndarray) -> int:
        _, counts = np.unique(values, return_counts=True)
        return int((counts * (counts - 1) // 2).sum())

    n1 = tie_term(x)
    n2 = tie_term(y)
    if n0 == n1 or n0 == n2:
        return None
    return (concordant - discordant) / np.sqrt(float(n0 - n1) * float(n0 - n2))


@dataclass(frozen=True)
class EstimatorCheckpoint:
    params: model.RegressorParams
    encoder_id: str
    pooling: str
    score_kind: ScoreKind
    orientation: Orientation
    epoch: int
    validation_tau_history: tuple[float | None, ...]
    loss_history: tuple[float, ...] = ()
    typical_range: tuple[float, float] | None = None
    name: str = ""
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TrainResult:
    selected: EstimatorCheckpoint
    tau_history: tuple[float | None, ...]
    loss_history: tuple[float, ...]
    selected_by: str  # "max_tau" or "min_loss"


def train(
    train_examples: list[PairExample],
    val_examples: list[PairExample],
    config: TrainingConfig,
    score_kind: ScoreKind,
    encoder_id: str = "toy",
    pooling: str = "mean",
) -> TrainResult:
    """Gradient descent on MSE; the selected checkpoint maximizes validation
    tau (earliest epoch on ties), falling back to minimum training loss when
    tau is undefined throughout (constant targets)."""
    if not train_examples:
        raise ValueError("training corpus is empty")
    if not val_examples:
        raise ValueError("validation corpus is empty")

    encoder = get_encoder(encoder_id)
    x_train = featurize(train_examples, encoder, pooling)
    y_train = np.array([e.score for e in train_examples])
    x_val = featurize(val_examples, encoder, pooling)
    y_val = np.array([e.score for e in val_examples])

    params = model.init_regressor(x_train.shape[1], config.hidden, config.seed)
    adam = model.init_adam(params) if config.optimizer == "adam" else None
    rng = np.random.default_rng(config.seed)
    n = x_train.shape[0]
    batch = n if config.batch_size is None else min(config.batch_size, n)

    tau_history: list[float | None] = []
    loss_history: list[float] = []
    snapshots: list[np.ndarray] = []
    best_tau = -np.inf
    epochs_since_best = 0

    for epoch in range(config.max_epochs):
        order = rng.permutation(n) if batch < n else np.arange(n)
        for start in range(0, n, batch):
            rows = order[start:start + batch]
            loss, grads = model.mse_loss_and_grads(params, x_train[rows], y_train[rows])
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss {loss} at epoch {epoch}, lr={config.learning_rate}"
                )
            if adam is not None:
                model.adam_step(params, grads, adam, config.learning_rate)
            else:
                model.sgd_step(params, grads, config.learning_rate)

        epoch_loss = float(((model.forward(params, x_train) - y_train) ** 2).mean())
        if not np.isfinite(epoch_loss):
            raise RuntimeError(f"non-finite training loss at epoch {epoch}")
        loss_history.append(epoch_loss)

        val_pred = model.forward(params, x_val)
        tau = kendall_tau(val_pred, y_val)
        tau_history.append(tau)
        snapshots.append(params.flatten())

        if tau is not None and tau > best_tau:
            best_tau = tau
            epochs_since_best = 0
        else:
            epochs_since_best += 1
        if config.patience is not None and epochs_since_best > config.patience:
            break

    defined = [t for t in tau_history if t is not None]
    if defined:
        selected_by = "max_tau"
        best = max(defined)
        selected_epoch = next(i for i, t in enumerate(tau_history) if t == best)
    else:
        warnings.warn("validation tau undefined every epoch; selecting minimum-loss checkpoint")
        selected_by = "min_loss"
        selected_epoch = int(np.argmin(loss_history))

    layer_sizes = params.layer_sizes
    selected_params = model.unflatten_params(snapshots[selected_epoch], layer_sizes)
    val_pred = model.forward(selected_params, x_val)
    typical = (float(np.quantile(val_pred, 0.01)), float(np.quantile(val_pred, 0.99)))

    checkpoint = EstimatorCheckpoint(
        params=selected_params,
        encoder_id=encoder_id,
        pooling=pooling,
        score_kind=score_kind,
        orientation=score_orientation(score_kind),
        epoch=selected_epoch,
        validation_tau_history=tuple(tau_history),
        loss_history=tuple(loss_history),
        typical_range=typical,
    )
    return TrainResult(
        selected=checkpoint,
        tau_history=tuple(tau_history),
        loss_history=tuple(loss_history),
        selected_by=selected_by,
    )


@dataclass(frozen=True)
class ScoreResult:
    score: float
    orientation: Orientation


def radeval_score(checkpoint: EstimatorCheckpoint, ground_truth: str, generated: str) -> ScoreResult:
    """Score one (ground truth, generated) report pair with a trained head."""
    encoder = get_encoder(checkpoint.encoder_id)
    h = model.pool(encode(generated, encoder), checkpoint.pooling)
    s = model.pool(encode(ground_truth, encoder), checkpoint.pooling)
    value = model.regress(model.combine(h, s), checkpoint.params)
    return ScoreResult(score=value, orientation=checkpoint.orientation)


def radeval_score_batch(
    checkpoint: EstimatorCheckpoint,
    pairs: list[tuple[str, str]],
) -> np.ndarray:
    examples = [PairExample(src=gt, mt=gen, score=0.0) for gt, gen in pairs]
    features = featurize(examples, checkpoint.encoder_id, checkpoint.pooling)
    return model.forward(checkpoint.params, features)


# ---------------------------------------------------------------------------
# checkpoint persistence
# ---------------------------------------------------------------------------

def save_checkpoint(checkpoint: EstimatorCheckpoint, directory: str | Path, config_hash: str = "") -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    flat = checkpoint.params.flatten()
    np.save(directory / "weights.npy", flat)
    manifest = {
        "name": checkpoint.name,
        "encoder_id": checkpoint.encoder_id,
        "pooling": checkpoint.pooling,
        "score_kind": checkpoint.score_kind.value,
        "orientation": checkpoint.orientation.value,
        "selected_epoch": checkpoint.epoch,
        "validation_tau_history": list(checkpoint.validation_tau_history),
        "loss_history": list(checkpoint.loss_history),
        "typical_range": list(checkpoint.typical_range) if checkpoint.typical_range else None,
        "layer_sizes": list(checkpoint.params.layer_sizes),
        "config_hash": config_hash,
        "extra": checkpoint.extra,
    }
    with open(directory / "checkpoint.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_checkpoint(directory: str | Path) -> EstimatorCheckpoint:
    directory = Path(directory)
    manifest_path = directory / "checkpoint.json"
    weights_path = directory / "weights.npy"
    if not manifest_path.exists() or not weights_path.exists():
        raise FileNotFoundError(f"no checkpoint at {directory}")
    with open(manifest_path, encoding="utf-8") as handle:
        manifest = json.load(handle)
    flat = np.load(weights_path)
    params = model.unflatten_params(flat, tuple(manifest["layer_sizes"]))
    return EstimatorCheckpoint(
        params=params,
        encoder_id=manifest["encoder_id"],
        pooling=manifest["pooling"],
        score_kind=ScoreKind(manifest["score_kind"]),
        orientation=Orientation(manifest["orientation"]),
        epoch=int(manifest["selected_epoch"]),
        validation_tau_history=tuple(manifest["validation_tau_history"]),
        loss_history=tuple(manifest["loss_history"]),
        typical_range=tuple(manifest["typical_range"]) if manifest["typical_range"] else None,
        name=manifest.get("name", ""),
        extra=manifest.get("extra", {}),
    )
