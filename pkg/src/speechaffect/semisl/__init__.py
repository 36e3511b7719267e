from .classifier import (
    BuiltinClassifier,
    Classifier,
    ClassifierModel,
    TrainConfig,
    loss_and_grad,
    predict,
    predict_proba,
    softmax,
    train_builtin,
)
from .loop import (
    BASELINES,
    BaselineReport,
    IterationHistory,
    IterationRecord,
    LoopConfig,
    LoopResult,
    merged_confident,
    run_baselines,
    run_loop,
)
from .pool import DataPool, PseudoLabelRecord, majority_vote, select_high_confidence
from .synthetic import SyntheticConfig, SyntheticTask, make_blob_task

__all__ = [
    "BASELINES", "BaselineReport", "BuiltinClassifier", "Classifier", "ClassifierModel",
    "DataPool", "IterationHistory", "IterationRecord", "LoopConfig", "LoopResult",
    "PseudoLabelRecord", "SyntheticConfig", "SyntheticTask", "TrainConfig", "loss_and_grad",
    "majority_vote", "make_blob_task", "merged_confident", "predict", "predict_proba",
    "run_baselines", "run_loop", "select_high_confidence", "softmax", "train_builtin",
]
