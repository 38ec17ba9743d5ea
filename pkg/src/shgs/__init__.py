"""Single-hyperparameter grid search for dense feed-forward binary classifiers."""
from .data import (
    EncodedDataset,
    OneHotCategoricalEncoder,
    RawDataset,
    SplitPlan,
    StratifiedFoldSplitter,
    encode_one_hot,
    load_dataset,
    make_split_plan,
    stratified_holdout,
    stratified_kfold,
)
from .engine import (
    HyperparameterSpace,
    NumericRange,
    SingleHyperparameterSearch,
    SweepReport,
    expand_values,
    recommend_range,
    run_shgs,
    sample_background,
)
from .metrics import roc_auc
from .training import DFNNClassifier, HyperparameterSetting, evaluate_setting, train

__all__ = [
    "DFNNClassifier",
    "EncodedDataset",
    "HyperparameterSetting",
    "HyperparameterSpace",
    "NumericRange",
    "OneHotCategoricalEncoder",
    "RawDataset",
    "SingleHyperparameterSearch",
    "SplitPlan",
    "StratifiedFoldSplitter",
    "SweepReport",
    "encode_one_hot",
    "evaluate_setting",
    "expand_values",
    "load_dataset",
    "make_split_plan",
    "recommend_range",
    "roc_auc",
    "run_shgs",
    "sample_background",
    "stratified_holdout",
    "stratified_kfold",
    "train",
]

__version__ = "0.1.0"
