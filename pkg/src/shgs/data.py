"""Categorical CSV loading, one-hot encoding and stratified splitting."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

MISSING = "<missing>"
_MISSING_TOKENS = {"", "?", "NA", "NaN", "nan", "null"}


class DataError(ValueError):
    """Raised for malformed or unusable datasets."""


@dataclass(frozen=True)
class RawDataset:
    predictor_names: List[str]
    rows: List[List[str]]
    target_name: str
    target_values: List[str]
    name: str = ""

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def class_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for value in self.target_values:
            counts[value] = counts.get(value, 0) + 1
        return counts


@dataclass(frozen=True)
class EncodedDataset:
    features: np.ndarray
    labels: np.ndarray
    column_map: Dict[str, Tuple[int, List[str]]]
    name: str = ""

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def decode(self, row: int) -> List[str]:
        """Recover the original category of every predictor for one row."""
        out = []
        for offset, levels in self.column_map.values():
            block = self.features[row, offset:offset + len(levels)]
            out.append(levels[int(np.argmax(block))])
        return out


@dataclass(frozen=True)
class SplitPlan:
    """Holdout indices plus (optionally) a fold id for every training index.

    ``folds[i]`` is the fold of ``train_indices[i]``; it is ``None`` until
    :func:`stratified_kfold` has been applied.
    """

    train_indices: np.ndarray
    test_indices: np.ndarray
    folds: Optional[np.ndarray] = None
    n_folds: int = 0

    @property
    def fold_of(self) -> Dict[int, int]:
        if self.folds is None:
            return {}
        return {int(i): int(f) for i, f in zip(self.train_indices, self.folds)}

    def fold_split(self, fold: int) -> Tuple[np.ndarray, np.ndarray]:
        """Return (fit rows, validation rows) for one fold, as dataset indices."""
        if self.folds is None:
            raise ValueError("split plan has no folds")
        in_fold = self.folds == fold
        return self.train_indices[~in_fold], self.train_indices[in_fold]


def _clean(value: str) -> str:
    value = value.strip()
    return MISSING if value in _MISSING_TOKENS else value


def load_dataset(path, target_name: str = "metastasis") -> RawDataset:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or all(not h.strip() for h in header):
            raise DataError("no header")
        header = [h.strip() for h in header]
        if target_name not in header:
            raise DataError(f"header lacks target column {target_name!r}")
        t_idx = header.index(target_name)
        predictors = [h for i, h in enumerate(header) if i != t_idx]
        rows: List[List[str]] = []
        targets: List[str] = []
        for lineno, record in enumerate(reader, start=2):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if len(record) != len(header):
                raise DataError(
                    f"line {lineno}: expected {len(header)} fields, got {len(record)}"
                )
            targets.append(record[t_idx].strip())
            rows.append([_clean(v) for i, v in enumerate(record) if i != t_idx])
    distinct = set(targets)
    if len(distinct) != 2:
        raise DataError(
            f"target {target_name!r} must take exactly 2 values, found {len(distinct)}"
        )
    return RawDataset(predictors, rows, target_name, targets, name=path.stem)


def _default_positive(values: Sequence[str]) -> str:
    distinct = sorted(set(values))
    for candidate in ("1", "yes", "Yes", "YES", "true", "True", "positive"):
        if candidate in distinct:
            return candidate
    return distinct[-1]


def encode_one_hot(raw: RawDataset, positive_label: Optional[str] = None) -> EncodedDataset:
    if positive_label is None:
        positive_label = _default_positive(raw.target_values)
    if positive_label not in set(raw.target_values):
        raise DataError(f"positive label {positive_label!r} not among target values")
    encoder = OneHotCategoricalEncoder(feature_names=raw.predictor_names).fit(raw.rows)
    features = encoder.transform(raw.rows)
    labels = np.array([int(v == positive_label) for v in raw.target_values], dtype=np.int64)
    return EncodedDataset(features, labels, encoder.column_map_, name=raw.name)


class OneHotCategoricalEncoder(TransformerMixin, BaseEstimator):
    """Full one-hot encoding with levels ordered by first appearance.

    Unseen levels at transform time encode as an all-zero block.
    """

    def __init__(self, feature_names=None):
        self.feature_names = feature_names

    def fit(self, X, y=None):
        rows = [list(r) for r in X]
        if not rows:
            raise DataError("cannot fit encoder on zero rows")
        width = len(rows[0])
        names = list(self.feature_names) if self.feature_names is not None else [
            f"x{i}" for i in range(width)
        ]
        if len(names) != width:
            raise DataError("feature_names length does not match row width")
        categories: List[List[str]] = [[] for _ in range(width)]
        seen: List[Dict[str, int]] = [{} for _ in range(width)]
        for r in rows:
            if len(r) != width:
                raise DataError("ragged rows")
            for j, v in enumerate(r):
                v = _clean(str(v))
                if v not in seen[j]:
                    seen[j][v] = len(categories[j])
                    categories[j].append(v)
        self.categories_ = categories
        self.feature_names_in_ = np.array(names, dtype=object)
        self._index = seen
        offsets = np.concatenate([[0], np.cumsum([len(c) for c in categories])])
        self.column_map_ = {
            name: (int(offsets[j]), list(categories[j])) for j, name in enumerate(names)
        }
        self.n_output_features_ = int(offsets[-1])
        return self

    def transform(self, X):
        check_is_fitted(self, "categories_")
        rows = [list(r) for r in X]
        out = np.zeros((len(rows), self.n_output_features_), dtype=np.float64)
        offsets = [self.column_map_[n][0] for n in self.feature_names_in_]
        for i, r in enumerate(rows):
            if len(r) != len(offsets):
                raise DataError("row width does not match fitted encoder")
            for j, v in enumerate(r):
                k = self._index[j].get(_clean(str(v)))
                if k is not None:
                    out[i, offsets[j] + k] = 1.0
        return out

    def inverse_transform(self, X):
        check_is_fitted(self, "categories_")
        X = np.asarray(X)
        out = []
        for row in X:
            decoded = []
            for name, cats in zip(self.feature_names_in_, self.categories_):
                offset = self.column_map_[name][0]
                decoded.append(cats[int(np.argmax(row[offset:offset + len(cats)]))])
            out.append(decoded)
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "categories_")
        return np.array(
            [f"{n}={lvl}" for n, cats in zip(self.feature_names_in_, self.categories_) for lvl in cats],
            dtype=object,
        )


def _round_half_up(x: float) -> int:
    # tolerate float noise such as 0.2 * 1255 = 251.00000000000003
    return int(np.floor(x + 0.5 + 1e-9))


def stratified_holdout(labels, test_fraction: float, seed: int) -> SplitPlan:
    """Split indices into train/test with per-class round-half-up sizing."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for cls in (1, 0):
        idx = np.flatnonzero(labels == cls)
        n_test = _round_half_up(test_fraction * idx.size)
        if n_test < 1 or idx.size - n_test < 1:
            raise DataError(
                f"class {cls} has {idx.size} rows; cannot place at least one on each side"
            )
        shuffled = rng.permutation(idx)
        test_parts.append(shuffled[:n_test])
        train_parts.append(shuffled[n_test:])
    return SplitPlan(
        train_indices=np.sort(np.concatenate(train_parts)),
        test_indices=np.sort(np.concatenate(test_parts)),
    )


def stratified_kfold(labels, plan: SplitPlan, k: int = 5, seed: int = 0) -> SplitPlan:
    """Assign every training index of ``plan`` to one of ``k`` folds.

    Each class is shuffled and dealt round-robin; the negative class picks up
    the cycle where the positives stopped so fold sizes differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    labels = np.asarray(labels)
    train = np.asarray(plan.train_indices)
    rng = np.random.default_rng(seed)
    position = {int(i): p for p, i in enumerate(train)}
    folds = np.empty(train.size, dtype=np.int64)
    start = 0
    for cls in (1, 0):
        members = train[labels[train] == cls]
        if members.size < k:
            raise DataError(f"class {cls} has {members.size} training rows, fewer than k={k}")
        for j, i in enumerate(rng.permutation(members)):
            folds[position[int(i)]] = (start + j) % k
        start = (start + members.size) % k
    return SplitPlan(plan.train_indices, plan.test_indices, folds=folds, n_folds=k)


def make_split_plan(labels, test_fraction: float = 0.2, k: int = 5, seed: int = 0) -> SplitPlan:
    ss = np.random.SeedSequence(seed)
    holdout_seed, fold_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    plan = stratified_holdout(labels, test_fraction, holdout_seed)
    return stratified_kfold(labels, plan, k, fold_seed)


class StratifiedFoldSplitter:
    """Cross-validation splitter with the scikit-learn ``split`` protocol."""

    def __init__(self, n_splits: int = 5, random_state: int = 0):
        self.n_splits = n_splits
        self.random_state = random_state

    def get_n_splits(self, X=None, y=None, groups=None) -> int:
        return self.n_splits

    def split(self, X, y, groups=None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        y = np.asarray(y)
        plan = SplitPlan(np.arange(y.size), np.array([], dtype=np.int64))
        plan = stratified_kfold(y, plan, self.n_splits, self.random_state)
        for f in range(self.n_splits):
            yield plan.fold_split(f)


def make_separable_dataset(n: int = 400, n_levels: int = 4, seed: int = 0) -> RawDataset:
    """Two categorical predictors whose level indices sum past a threshold.

    The label is ``1`` iff ``level(a) + level(b) >= n_levels``, which is a
    linear rule in the one-hot space.
    """
    rng = np.random.default_rng(seed)
    a = rng.integers(0, n_levels, size=n)
    b = rng.integers(0, n_levels, size=n)
    y = (a + b >= n_levels).astype(int)
    rows = [[f"a{i}", f"b{j}"] for i, j in zip(a, b)]
    targets = ["yes" if v else "no" for v in y]
    return RawDataset(["a", "b"], rows, "metastasis", targets, name="separable")


def write_dataset(raw: RawDataset, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(raw.predictor_names + [raw.target_name])
        for row, t in zip(raw.rows, raw.target_values):
            writer.writerow(list(row) + [t])
    return path


def bundled_dataset_path(name: str = "separable") -> Path:
    return Path(__file__).with_name("datasets") / f"{name}.csv"
