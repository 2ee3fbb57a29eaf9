"""Referenceless quality estimator: encoders, combined-feature head, training."""

from .encoders import (
    OrthogonalTestEncoder,
    PretrainedEncoderAdapter,
    ToyHashEncoder,
    encode,
    get_encoder,
    register_encoder,
)
from .model import (
    RegressorParams,
    combine,
    forward,
    init_regressor,
    mse_loss_and_grads,
    pool,
    regress,
)
from .training import (
    EstimatorCheckpoint,
    PairExample,
    ScoreResult,
    TrainingConfig,
    TrainResult,
    featurize,
    kendall_tau,
    load_checkpoint,
    load_triplets_jsonl,
    radeval_score,
    radeval_score_batch,
    save_checkpoint,
    train,
)

__all__ = [
    "OrthogonalTestEncoder",
    "PretrainedEncoderAdapter",
    "ToyHashEncoder",
    "encode",
    "get_encoder",
    "register_encoder",
    "RegressorParams",
    "combine",
    "forward",
    "init_regressor",
    "mse_loss_and_grads",
    "pool",
    "regress",
    "EstimatorCheckpoint",
    "PairExample",
    "ScoreResult",
    "TrainingConfig",
    "TrainResult",
    "featurize",
    "kendall_tau",
    "load_checkpoint",
    "load_triplets_jsonl",
    "radeval_score",
    "radeval_score_batch",
    "save_checkpoint",
    "train",
]
