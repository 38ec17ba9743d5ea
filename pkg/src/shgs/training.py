"""Mini-batch training, cross-validated evaluation and the estimator wrapper."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import EncodedDataset, SplitPlan
from .metrics import roc_auc
from .network import (
    ACTIVATIONS,
    INITIALIZERS,
    NetworkArchitecture,
    NetworkParameters,
    backward,
    forward,
    initialize,
    predict,
    sample_masks,
)
from .optimizers import OPTIMIZERS, OptimizerState, apply_update

HYPERPARAMETERS = (
    "epochs",
    "batch_size",
    "learning_rate",
    "dropout",
    "momentum",
    "decay",
    "l1",
    "l2",
    "hidden_layers",
    "hidden_nodes",
    "optimizer",
    "initializer",
    "input_activation",
    "hidden_activation",
)
INTEGER_HYPERPARAMETERS = ("epochs", "batch_size", "hidden_layers", "hidden_nodes")
CATEGORICAL_HYPERPARAMETERS = ("optimizer", "initializer", "input_activation", "hidden_activation")


class TrainingDiverged(ArithmeticError):
    pass


@dataclass(frozen=True)
class HyperparameterSetting:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 0.01
    dropout: float = 0.0
    momentum: Optional[float] = None
    decay: float = 0.0
    l1: float = 0.0
    l2: float = 0.0
    hidden_layers: int = 1
    hidden_nodes: int = 8
    optimizer: str = "sgd"
    initializer: str = "glorot_uniform"
    input_activation: str = "relu"
    hidden_activation: str = "relu"

    def __post_init__(self):
        problems = []
        if self.epochs < 1:
            problems.append("epochs must be >= 1")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if not self.learning_rate > 0:
            problems.append("learning_rate must be > 0")
        if not 0.0 <= self.dropout <= 0.9:
            problems.append("dropout must lie in [0, 0.9]")
        if self.momentum is not None and not 0.1 <= self.momentum <= 0.9:
            problems.append("momentum must lie in [0.1, 0.9]")
        for name in ("decay", "l1", "l2"):
            if not 0.0 <= getattr(self, name) <= 0.3:
                problems.append(f"{name} must lie in [0, 0.3]")
        if self.hidden_layers not in (1, 2, 3, 4):
            problems.append("hidden_layers must be 1..4")
        if self.hidden_nodes < 1:
            problems.append("hidden_nodes must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            problems.append(f"unknown optimizer {self.optimizer!r}")
        if self.initializer not in INITIALIZERS:
            problems.append(f"unknown initializer {self.initializer!r}")
        for name in ("input_activation", "hidden_activation"):
            if getattr(self, name) not in ACTIVATIONS:
                problems.append(f"unknown {name} {getattr(self, name)!r}")
        if problems:
            raise ValueError("; ".join(problems))

    def architecture(self, input_dim: int) -> NetworkArchitecture:
        return NetworkArchitecture(
            input_dim=input_dim,
            hidden_layer_count=self.hidden_layers,
            hidden_nodes=self.hidden_nodes,
            input_activation=self.input_activation,
            hidden_activation=self.hidden_activation,
        )

    def as_dict(self) -> dict:
        return asdict(self)

    def with_value(self, name: str, value) -> "HyperparameterSetting":
        return replace(self, **{name: value})


@dataclass
class CvResult:
    mean_train_auc: float
    mean_test_auc: float
    test_auc: float
    runtime_seconds: float
    fold_aucs: List[Tuple[float, float]] = field(default_factory=list)
    status: str = "ok"

    @classmethod
    def diverged(cls, n_folds: int, runtime_seconds: float) -> "CvResult":
        return cls(0.5, 0.5, 0.5, runtime_seconds, [(0.5, 0.5)] * n_folds, "diverged")


def _child_seeds(seed, n: int) -> List[int]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(n)]


def n_batches(n_rows: int, batch_size: int) -> int:
    return math.ceil(n_rows / batch_size)


def train(
    features,
    labels,
    setting: HyperparameterSetting,
    seed=0,
    on_update: Optional[Callable[[int], None]] = None,
) -> Tuple[NetworkArchitecture, NetworkParameters]:
    """Fit a network with shuffled mini-batches; raises TrainingDiverged on NaN/Inf.

    ``on_update`` is called with the running update count after every
    optimizer step.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = x.shape[0]
    arch = setting.architecture(x.shape[1])
    init_seed, loop_seed = _child_seeds(seed, 2)
    params = initialize(arch, setting.initializer, init_seed)
    rng = np.random.default_rng(loop_seed)
    state = OptimizerState(
        kind=setting.optimizer,
        base_lr=setting.learning_rate,
        decay=setting.decay,
        momentum=setting.momentum if setting.optimizer == "sgd" else None,
    )
    arrays = params.arrays()
    updates = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for epoch in range(setting.epochs):
            order = rng.permutation(n)
            for start in range(0, n, setting.batch_size):
                rows = order[start:start + setting.batch_size]
                xb, yb = x[rows], y[rows]
                masks = sample_masks(arch, setting.dropout, rng, n_rows=rows.size)
                current = NetworkParameters.from_arrays(arrays)
                cache = forward(arch, current, xb, masks)
                grads = backward(arch, current, cache, yb, setting.l1, setting.l2).arrays()
                if not all(np.isfinite(g).all() for g in grads):
                    raise TrainingDiverged(f"non-finite gradient at epoch {epoch}")
                arrays = apply_update(state, arrays, grads, epoch)
                if not all(np.isfinite(a).all() for a in arrays):
                    raise TrainingDiverged(f"non-finite parameters at epoch {epoch}")
                updates += 1
                if on_update is not None:
                    on_update(updates)
    return arch, NetworkParameters.from_arrays(arrays)


def _fit_and_score(train_fn, x, y, fit_rows, score_rows, setting, seed):
    arch, params = train_fn(x[fit_rows], y[fit_rows], setting, seed)
    fit_auc = roc_auc(predict(arch, params, x[fit_rows]), y[fit_rows])
    score_auc = roc_auc(predict(arch, params, x[score_rows]), y[score_rows])
    if not (np.isfinite(fit_auc) and np.isfinite(score_auc)):
        raise TrainingDiverged("non-finite scores")
    return fit_auc, score_auc


def evaluate_setting(
    data: EncodedDataset,
    plan: SplitPlan,
    setting: HyperparameterSetting,
    seed=0,
    train_fn=train,
    n_jobs: Optional[int] = None,
) -> CvResult:
    """k-fold CV on the training rows, then refit on all of them and score the holdout."""
    if plan.folds is None:
        raise ValueError("split plan has no folds")
    k = plan.n_folds
    seeds = _child_seeds(seed, k + 1)
    x, y = data.features, data.labels
    jobs = [(*plan.fold_split(f), seeds[f]) for f in range(k)]
    jobs.append((plan.train_indices, plan.test_indices, seeds[k]))
    start = time.perf_counter()
    try:
        if n_jobs in (None, 1):
            results = [_fit_and_score(train_fn, x, y, a, b, setting, s) for a, b, s in jobs]
        else:
            results = Parallel(n_jobs=n_jobs)(
                delayed(_fit_and_score)(train_fn, x, y, a, b, setting, s) for a, b, s in jobs
            )
    except TrainingDiverged:
        return CvResult.diverged(k, time.perf_counter() - start)
    runtime = time.perf_counter() - start
    fold_aucs = [(float(a), float(b)) for a, b in results[:k]]
    return CvResult(
        mean_train_auc=float(np.mean([a for a, _ in fold_aucs])),
        mean_test_auc=float(np.mean([b for _, b in fold_aucs])),
        test_auc=float(results[k][1]),
        runtime_seconds=runtime,
        fold_aucs=fold_aucs,
    )


class DFNNClassifier(ClassifierMixin, BaseEstimator):
    """Binary dense feed-forward classifier trained with the optimizers in this package.

    Hyperparameters mirror :class:`HyperparameterSetting`; ``random_state``
    seeds initialization, shuffling and dropout. A diverged fit leaves a
    constant 0.5 predictor and sets ``diverged_``.
    """

    def __init__(
        self,
        epochs=10,
        batch_size=32,
        learning_rate=0.01,
        dropout=0.0,
        momentum=None,
        decay=0.0,
        l1=0.0,
        l2=0.0,
        hidden_layers=1,
        hidden_nodes=8,
        optimizer="sgd",
        initializer="glorot_uniform",
        input_activation="relu",
        hidden_activation="relu",
        random_state=0,
    ):
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.dropout = dropout
        self.momentum = momentum
        self.decay = decay
        self.l1 = l1
        self.l2 = l2
        self.hidden_layers = hidden_layers
        self.hidden_nodes = hidden_nodes
        self.optimizer = optimizer
        self.initializer = initializer
        self.input_activation = input_activation
        self.hidden_activation = hidden_activation
        self.random_state = random_state

    @classmethod
    def from_setting(cls, setting: HyperparameterSetting, random_state=0) -> "DFNNClassifier":
        return cls(**setting.as_dict(), random_state=random_state)

    def to_setting(self) -> HyperparameterSetting:
        return HyperparameterSetting(**{k: getattr(self, k) for k in HYPERPARAMETERS})

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        if self.classes_.size != 2:
            raise ValueError(f"DFNNClassifier is binary; got {self.classes_.size} classes")
        self.n_features_in_ = X.shape[1]
        target = (y == self.classes_[1]).astype(np.float64)
        setting = self.to_setting()
        self.diverged_ = False
        try:
            self.architecture_, self.params_ = train(X, target, setting, self.random_state)
        except TrainingDiverged as exc:
            warnings.warn(f"training diverged ({exc}); falling back to a constant predictor")
            self.diverged_ = True
            self.architecture_ = setting.architecture(X.shape[1])
            self.params_ = None
        return self

    def decision_function(self, X):
        check_is_fitted(self, "architecture_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        if self.params_ is None:
            return np.full(X.shape[0], 0.5)
        return predict(self.architecture_, self.params_, X)

    def predict_proba(self, X):
        score = self.decision_function(X)
        return np.column_stack([1.0 - score, score])

    def predict(self, X):
        return self.classes_[(self.decision_function(X) >= 0.5).astype(int)]
