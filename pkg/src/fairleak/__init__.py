"""Attribute-inference auditing of fair binary classifiers."""

from .attacks import (
    AttackResult,
    HardAttackFunction,
    adapt_aia_h,
    adapt_aia_s,
    baseline_aia,
    membership_inference,
    membership_scores,
)
from .data import (
    PredictionSet,
    SplitPlan,
    SynthSpec,
    TabularDataset,
    load_csv,
    load_predictions_csv,
    make_split,
    synth_biased,
    write_csv,
)
from .fairness import (
    AdvDebiasConfig,
    EgdConfig,
    RandomizedClassifier,
    advdebias_train,
    egd_train,
    sample_prediction,
)
from .metrics import (
    FairnessSummary,
    RocCurve,
    balanced_accuracy,
    dempar_level,
    dependency_ys,
    eqodds_gap,
    fairness_summary,
    optimal_threshold,
    roc_curve,
)
from .models import LinearModel, MlpModel, TrainConfig, fit_logreg, fit_mlp, predict_hard, predict_soft
from .report import AuditReport

__version__ = "0.1.0"
