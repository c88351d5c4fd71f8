from .checkpoint import FORMAT_VERSION, load_checkpoint, save_checkpoint
from .crf import (
    TABLES,
    TreeCrfWeights,
    constraint_masks,
    crf_decode,
    crf_log_partition,
    crf_loss,
    crf_loss_grad,
    crf_marginals,
    tuple_score,
)
from .estimators import (
    DEFAULT_EPOCHS,
    GRID,
    Hyperparameters,
    LstmCrfClassifier,
    MlpCrfClassifier,
    TrainReport,
    make_estimator,
    model_for_kind,
    train,
)
from .evaluation import (
    XVAL_GRID,
    Dataset,
    XvalReport,
    build_dataset,
    cross_validate,
    evaluate,
    precision,
    session_folds,
)
from .gradcheck import GradcheckResult, check_gradients
from .networks import SLOT_SIZES, LstmModel, MlpModel, lstm_forward, mlp_forward

__all__ = [
    "DEFAULT_EPOCHS", "FORMAT_VERSION", "GRID", "SLOT_SIZES", "TABLES", "XVAL_GRID", "Dataset",
    "GradcheckResult", "Hyperparameters", "LstmCrfClassifier", "LstmModel", "MlpCrfClassifier", "MlpModel",
    "TrainReport", "TreeCrfWeights", "XvalReport", "build_dataset", "check_gradients", "constraint_masks",
    "cross_validate", "crf_decode", "crf_log_partition", "crf_loss", "crf_loss_grad", "crf_marginals",
    "evaluate", "load_checkpoint", "lstm_forward", "make_estimator", "mlp_forward", "model_for_kind",
    "precision", "save_checkpoint", "session_folds", "train", "tuple_score",
]
