"""Single-hyperparameter grid search.

One hyperparameter (the target) runs through its whole value list while every
other hyperparameter is pinned to a background value drawn uniformly from its
pool. Repeating this with fresh backgrounds shows how sensitive the target's
best region is to the rest of the configuration.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from .data import EncodedDataset, SplitPlan, make_split_plan
from .network import ACTIVATIONS, INITIALIZERS
from .optimizers import OPTIMIZERS
from .training import (
    CATEGORICAL_HYPERPARAMETERS,
    HYPERPARAMETERS,
    CvResult,
    HyperparameterSetting,
    evaluate_setting,
)

TARGETS = ("epochs", "batch_size", "learning_rate", "dropout", "momentum", "decay", "l1", "l2")
MAX_BACKGROUND_REDRAWS = 1000


def _decimals(x: float) -> int:
    return max(0, -Decimal(str(x)).normalize().as_tuple().exponent)


@dataclass(frozen=True)
class NumericRange:
    """Arithmetic pool ``lo, lo+step, ... <= hi``.

    ``hi=None`` means "the training-set size", resolved at sweep time.
    """

    lo: float
    hi: Optional[float]
    step: float
    integer: bool = False

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.hi is not None and self.lo > self.hi:
            raise ValueError(f"empty range: lo={self.lo} > hi={self.hi}")

    def upper(self, n_train: Optional[int]) -> float:
        if self.hi is not None:
            return self.hi
        if n_train is None:
            raise ValueError("range bound depends on the training-set size")
        return n_train

    def count(self, n_train: Optional[int] = None) -> int:
        hi = self.upper(n_train)
        if hi < self.lo:
            raise ValueError(f"empty range: lo={self.lo} > hi={hi}")
        return int(math.floor((hi - self.lo) / self.step + 1e-9)) + 1

    def value_at(self, i: int):
        if self.integer:
            return int(round(self.lo + i * self.step))
        digits = max(_decimals(self.lo), _decimals(self.step))
        return round(self.lo + i * self.step, digits)

    def values(self, n_train: Optional[int] = None) -> list:
        return [self.value_at(i) for i in range(self.count(n_train))]

    def contains(self, value, n_train: Optional[int] = None) -> bool:
        hi = self.upper(n_train)
        if not self.lo - 1e-12 <= value <= hi + 1e-12:
            return False
        k = (value - self.lo) / self.step
        return abs(k - round(k)) < 1e-6


Pool = Union[NumericRange, Tuple[str, ...]]


def default_pools() -> Dict[str, Pool]:
    return {
        "epochs": NumericRange(5, 1001, 3, integer=True),
        "batch_size": NumericRange(1, None, 1, integer=True),
        "learning_rate": NumericRange(0.001, 0.3, 0.001),
        "dropout": NumericRange(0.0, 0.9, 0.01),
        "momentum": NumericRange(0.1, 0.9, 0.01),
        "decay": NumericRange(0.0, 0.3, 0.001),
        "l1": NumericRange(0.0, 0.3, 0.001),
        "l2": NumericRange(0.0, 0.3, 0.001),
        "hidden_layers": NumericRange(1, 4, 1, integer=True),
        "hidden_nodes": NumericRange(1, None, 1, integer=True),
        "optimizer": OPTIMIZERS,
        "initializer": INITIALIZERS,
        "input_activation": ACTIVATIONS,
        "hidden_activation": ACTIVATIONS,
    }


DEFAULT_POOLS = default_pools()


@dataclass
class HyperparameterSpace:
    pools: Dict[str, Pool] = field(default_factory=default_pools)

    def __post_init__(self):
        unknown = set(self.pools) - set(HYPERPARAMETERS)
        if unknown:
            raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
        merged = default_pools()
        merged.update(self.pools)
        for name, pool in merged.items():
            if name in CATEGORICAL_HYPERPARAMETERS:
                pool = tuple(pool)
                if not pool:
                    raise ValueError(f"catalog for {name} is empty")
                merged[name] = pool
        self.pools = merged

    def with_overrides(self, overrides: Dict[str, Pool]) -> "HyperparameterSpace":
        pools = dict(self.pools)
        pools.update(overrides)
        return HyperparameterSpace(pools)

    def contains(self, name: str, value, n_train: Optional[int] = None) -> bool:
        pool = self.pools[name]
        if isinstance(pool, NumericRange):
            return pool.contains(value, n_train)
        return value in pool


@dataclass(frozen=True)
class TargetSweepSpec:
    target: str
    values: Tuple


@dataclass(frozen=True)
class BackgroundSetting:
    target: str
    items: Tuple[Tuple[str, object], ...]

    def as_dict(self) -> Dict[str, object]:
        return dict(self.items)

    def setting_with(self, value) -> HyperparameterSetting:
        values = self.as_dict()
        values[self.target] = value
        return HyperparameterSetting(**values)


@dataclass
class TrialRecord:
    iteration_id: int
    background: BackgroundSetting
    target_value: object
    result: CvResult


@dataclass
class SweepReport:
    dataset_name: str
    target: str
    values: List
    iterations: int
    master_seed: int
    records: List[TrialRecord]
    total_runtime: float = 0.0

    def for_iteration(self, iteration_id: int) -> List[TrialRecord]:
        return [r for r in self.records if r.iteration_id == iteration_id]

    @property
    def iteration_ids(self) -> List[int]:
        return sorted({r.iteration_id for r in self.records})


def expand_values(space: HyperparameterSpace, target: str, n_train: Optional[int] = None) -> TargetSweepSpec:
    if target not in space.pools or target in CATEGORICAL_HYPERPARAMETERS:
        raise ValueError(f"unknown target hyperparameter {target!r}")
    pool = space.pools[target]
    if target == "batch_size" and pool == DEFAULT_POOLS["batch_size"]:
        if n_train is None:
            raise ValueError("batch_size sweep needs the training-set size")
        values = tuple(range(2, 2 * (n_train // 2) + 1, 2))
    else:
        values = tuple(pool.values(n_train))
    return TargetSweepSpec(target, values)


def _draw(pool: Pool, rng: np.random.Generator, n_train: Optional[int]):
    if isinstance(pool, NumericRange):
        return pool.value_at(int(rng.integers(pool.count(n_train))))
    return pool[int(rng.integers(len(pool)))]


def sample_background(
    space: HyperparameterSpace, target: str, rng: np.random.Generator, n_train: Optional[int] = None
) -> BackgroundSetting:
    """Draw every non-target hyperparameter uniformly from its pool.

    Momentum only matters to SGD: a momentum sweep forces ``optimizer='sgd'``,
    and any other sweep leaves momentum unset unless SGD was drawn.
    """
    values: Dict[str, object] = {}
    for name in HYPERPARAMETERS:
        if name in (target, "momentum"):
            continue
        if name == "optimizer" and target == "momentum":
            values[name] = "sgd"
            continue
        values[name] = _draw(space.pools[name], rng, n_train)
    if target != "momentum":
        values["momentum"] = (
            _draw(space.pools["momentum"], rng, n_train) if values["optimizer"] == "sgd" else None
        )
    items = tuple((name, values[name]) for name in HYPERPARAMETERS if name != target)
    return BackgroundSetting(target, items)


def _trial_seed(master_seed: int, iteration: int, index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(1, iteration, index))
    return int(ss.generate_state(1)[0])


def _background_rng(master_seed: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(0, iteration)))


def draw_backgrounds(
    space: HyperparameterSpace, target: str, iterations: int, master_seed: int, n_train: Optional[int]
) -> List[BackgroundSetting]:
    backgrounds: List[BackgroundSetting] = []
    for i in range(1, iterations + 1):
        rng = _background_rng(master_seed, i)
        for _ in range(MAX_BACKGROUND_REDRAWS):
            bg = sample_background(space, target, rng, n_train)
            if bg not in backgrounds:
                break
        else:
            raise RuntimeError(
                f"could not draw {iterations} distinct backgrounds for target {target!r}"
            )
        backgrounds.append(bg)
    return backgrounds


Evaluator = Callable[[EncodedDataset, SplitPlan, HyperparameterSetting, int], CvResult]


def run_shgs(
    data: EncodedDataset,
    plan: SplitPlan,
    space: Optional[HyperparameterSpace] = None,
    target: str = "epochs",
    iterations: int = 10,
    master_seed: int = 0,
    evaluate: Evaluator = evaluate_setting,
    n_jobs: Optional[int] = None,
    dataset_name: Optional[str] = None,
) -> SweepReport:
    """Run ``iterations`` sweeps of ``target``, each over a fresh background.

    Trial seeds depend only on (master_seed, iteration, value index), so the
    report is identical whatever ``n_jobs`` is.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    space = space or HyperparameterSpace()
    n_train = int(np.asarray(plan.train_indices).size)
    spec = expand_values(space, target, n_train)
    backgrounds = draw_backgrounds(space, target, iterations, master_seed, n_train)

    tasks = [
        (i, bg, j, v)
        for i, bg in enumerate(backgrounds, start=1)
        for j, v in enumerate(spec.values)
    ]
    start = time.perf_counter()
    if n_jobs in (None, 1):
        results = [
            evaluate(data, plan, bg.setting_with(v), _trial_seed(master_seed, i, j))
            for i, bg, j, v in tasks
        ]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(evaluate)(data, plan, bg.setting_with(v), _trial_seed(master_seed, i, j))
            for i, bg, j, v in tasks
        )
    total = time.perf_counter() - start
    records = [
        TrialRecord(i, bg, v, res) for (i, bg, _, v), res in zip(tasks, results)
    ]
    records.sort(key=lambda r: (r.iteration_id, r.target_value))
    return SweepReport(
        dataset_name=dataset_name if dataset_name is not None else data.name,
        target=target,
        values=list(spec.values),
        iterations=iterations,
        master_seed=master_seed,
        records=records,
        total_runtime=total,
    )


@dataclass(frozen=True)
class RangeRecommendation:
    target: str
    lo: float
    hi: float
    empirical: Optional[Tuple[float, float]] = None


_RULES = {
    "epochs": (5, 100),
    "dropout": (0.0, 0.5),
    "momentum": (0.7, 0.9),
    "decay": (0.0, 0.003),
    "learning_rate": (0.001, 0.03),
    "l1": (0.0, 0.03),
    "l2": (0.0, 0.03),
}


def recommend_range(
    target: str, n_train: Optional[int] = None, report: Optional[SweepReport] = None, tolerance: float = 0.01
) -> RangeRecommendation:
    """Reduced range for a follow-up low-budget grid search.

    With a report, also return the tightest prefix of the swept values (a
    suffix for momentum, whose good region sits at the top) that still holds
    every trial within ``tolerance`` of the best test AUC.
    """
    if target not in TARGETS:
        raise ValueError(f"no range rule for {target!r}")
    if target == "batch_size":
        if n_train is None:
            raise ValueError("batch_size rule needs n_train")
        lo, hi = 1, n_train // 5
    else:
        lo, hi = _RULES[target]
    empirical = None
    if report is not None:
        if report.target != target:
            raise ValueError(f"report swept {report.target!r}, not {target!r}")
        if not report.records:
            raise ValueError("report has no trials")
        best = max(r.result.test_auc for r in report.records)
        good = [r.target_value for r in report.records if r.result.test_auc >= best - tolerance]
        values = sorted(report.values)
        if target == "momentum":
            empirical = (min(good), values[-1])
        else:
            empirical = (values[0], max(good))
    return RangeRecommendation(target, lo, hi, empirical)


class SingleHyperparameterSearch(BaseEstimator):
    """Estimator front-end for :func:`run_shgs` on an encoded feature matrix.

    ``fit`` holds out ``test_fraction`` of the rows, builds ``n_folds``
    stratified folds on the rest and sweeps ``target``.
    """

    def __init__(
        self,
        target="epochs",
        space=None,
        iterations=10,
        test_fraction=0.2,
        n_folds=5,
        random_state=0,
        n_jobs=None,
    ):
        self.target = target
        self.space = space
        self.iterations = iterations
        self.test_fraction = test_fraction
        self.n_folds = n_folds
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y, dataset_name: str = ""):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes = np.unique(y)
        if classes.size != 2:
            raise ValueError("target must be binary")
        labels = (y == classes[1]).astype(np.int64)
        data = EncodedDataset(X, labels, {}, name=dataset_name)
        self.split_plan_ = make_split_plan(labels, self.test_fraction, self.n_folds, self.random_state)
        space = self.space if self.space is not None else HyperparameterSpace()
        self.report_ = run_shgs(
            data,
            self.split_plan_,
            space,
            self.target,
            self.iterations,
            self.random_state,
            n_jobs=self.n_jobs,
        )
        best = max(self.report_.records, key=lambda r: r.result.test_auc)
        self.best_setting_ = best.background.setting_with(best.target_value)
        self.best_score_ = best.result.test_auc
        self.recommendation_ = recommend_range(
            self.target, self.split_plan_.train_indices.size, self.report_
        ) if self.target in TARGETS else None
        return self

    def scores(self) -> np.ndarray:
        """Test AUC as an (iterations, n_values) array."""
        check_is_fitted(self, "report_")
        return np.array(
            [[r.result.test_auc for r in self.report_.for_iteration(i)] for i in self.report_.iteration_ids]
        )
