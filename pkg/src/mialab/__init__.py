"""Membership-inference laboratory.

A controlled toy pipeline for studying how much membership signal
different classifier outputs leak (data generation, generative and
discriminative linear classifiers, threshold and model-based attacks,
AUROC evaluation, experiment sweeps) plus an exact finite-space
divergence oracle that numerically certifies the relevant
total-variation/KL bounds.
"""

from .attacks import AttackScores, Orientation, ScoreKind
from .datagen import Dataset, GenParams, contaminate, generate_dataset
from .divergence import (
    BoundsReport,
    DiscreteJoint,
    DominanceReport,
    ScoreChannel,
    c_coeff,
    certify_bounds,
    decompose,
    dominance_probe,
    dpi_check,
    kl,
    lr_constants,
    pushforward,
    tv,
)
from .errors import (
    DataError,
    DegenerateDataError,
    InsufficientDataError,
    MialabError,
    UnboundedRatioError,
    ValidationError,
)
from .gbm import GbmModel, fit_gbm, gbm_predict
from .harness import CellResult, SweepGrid, SweepTable, run_cell, run_sweep
from .linear_models import (
    LdaModel,
    LogisticModel,
    accuracy,
    fit_lda,
    fit_logistic,
    lda_log_joint,
    lda_posterior,
    logistic_posterior,
    predict,
)
from .metrics import AttackResult, Histogram, advantage, auroc, jsd, mean_sem

__version__ = "0.1.0"

__all__ = [
    "AttackResult",
    "AttackScores",
    "BoundsReport",
    "CellResult",
    "DataError",
    "Dataset",
    "DegenerateDataError",
    "DiscreteJoint",
    "DominanceReport",
    "GbmModel",
    "GenParams",
    "Histogram",
    "InsufficientDataError",
    "LdaModel",
    "LogisticModel",
    "MialabError",
    "Orientation",
    "ScoreChannel",
    "ScoreKind",
    "SweepGrid",
    "SweepTable",
    "UnboundedRatioError",
    "ValidationError",
    "accuracy",
    "advantage",
    "auroc",
    "c_coeff",
    "certify_bounds",
    "contaminate",
    "decompose",
    "dominance_probe",
    "dpi_check",
    "fit_gbm",
    "fit_lda",
    "fit_logistic",
    "gbm_predict",
    "generate_dataset",
    "jsd",
    "kl",
    "lda_log_joint",
    "lda_posterior",
    "logistic_posterior",
    "lr_constants",
    "mean_sem",
    "predict",
    "pushforward",
    "run_cell",
    "run_sweep",
    "tv",
]
