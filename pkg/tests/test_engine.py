import numpy as np
import pytest
from sklearn.base import clone

from shgs.data import encode_one_hot, load_dataset, make_split_plan
from shgs.engine import (
    TARGETS,
    HyperparameterSpace,
    NumericRange,
    SingleHyperparameterSearch,
    expand_values,
    recommend_range,
    run_shgs,
    sample_background,
)
from shgs.optimizers import OPTIMIZERS
from shgs.training import HYPERPARAMETERS, CvResult, HyperparameterSetting


def stub_evaluate(data, plan, setting, seed):
    """Deterministic fake evaluation: AUC depends on the setting and seed only."""
    auc = 0.5 + 0.4 * ((seed % 1000) / 1000.0)
    return CvResult(auc, auc, auc, 0.001 * (seed % 7), [(auc, auc)] * plan.n_folds)


@pytest.mark.parametrize(
    "target, count",
    [("epochs", 333), ("learning_rate", 300), ("dropout", 91), ("momentum", 81),
     ("decay", 301), ("l1", 301), ("l2", 301)],
)
def test_value_counts(target, count):
    spec = expand_values(HyperparameterSpace(), target)
    assert len(spec.values) == count
    assert list(spec.values) == sorted(set(spec.values))


def test_value_endpoints():
    space = HyperparameterSpace()
    assert expand_values(space, "epochs").values[-1] == 1001
    assert expand_values(space, "learning_rate").values[:3] == (0.001, 0.002, 0.003)
    assert expand_values(space, "learning_rate").values[-1] == 0.3
    assert expand_values(space, "momentum").values[-1] == 0.9
    assert expand_values(space, "dropout").values[57] == 0.57


@pytest.mark.parametrize("n_total, count", [(1827, 730), (1115, 446), (751, 300)])
def test_batch_size_counts_from_training_size(n_total, count):
    n_train = int(0.8 * n_total)
    values = expand_values(HyperparameterSpace(), "batch_size", n_train).values
    assert len(values) == count
    assert values[0] == 2 and values[-1] == 2 * (n_train // 2)


def test_unknown_target():
    with pytest.raises(ValueError):
        expand_values(HyperparameterSpace(), "optimizer")
    with pytest.raises(ValueError):
        expand_values(HyperparameterSpace(), "width")


def test_override_pool():
    space = HyperparameterSpace().with_overrides({"learning_rate": NumericRange(0.001, 0.05, 0.001)})
    assert len(expand_values(space, "learning_rate").values) == 50


def test_background_deterministic():
    space = HyperparameterSpace()
    a = sample_background(space, "epochs", np.random.default_rng(9), 1460)
    b = sample_background(space, "epochs", np.random.default_rng(9), 1460)
    assert a == b
    assert "epochs" not in a.as_dict()


def test_background_uniform_and_in_pool():
    space = HyperparameterSpace()
    rng = np.random.default_rng(0)
    counts = dict.fromkeys(OPTIMIZERS, 0)
    n = 10_000
    for _ in range(n):
        bg = sample_background(space, "l2", rng, 1460)
        values = bg.as_dict()
        counts[values["optimizer"]] += 1
        for name, value in values.items():
            if name == "momentum" and value is None:
                assert values["optimizer"] != "sgd"
                continue
            assert space.contains(name, value, 1460), (name, value)
        if values["optimizer"] != "sgd":
            assert values["momentum"] is None
    for kind in OPTIMIZERS:
        assert abs(counts[kind] / n - 0.2) <= 0.03


def test_momentum_target_forces_sgd():
    rng = np.random.default_rng(1)
    for _ in range(200):
        bg = sample_background(HyperparameterSpace(), "momentum", rng, 100)
        assert bg.as_dict()["optimizer"] == "sgd"
        assert "momentum" not in bg.as_dict()


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    from conftest import write_lsm_shaped

    path = write_lsm_shaped(tmp_path_factory.mktemp("s") / "small.csv", n_rows=60, n_pos=20, n_predictors=3)
    data = encode_one_hot(load_dataset(path), "yes")
    return data, make_split_plan(data.labels, 0.2, 5, 0)


def test_cardinality_and_background_constancy(small_data):
    data, plan = small_data
    report = run_shgs(data, plan, HyperparameterSpace(), "dropout", 3, 7, evaluate=stub_evaluate)
    assert len(report.records) == 3 * 91
    keys = [(r.iteration_id, r.target_value) for r in report.records]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    for it in (1, 2, 3):
        backgrounds = {r.background for r in report.for_iteration(it)}
        assert len(backgrounds) == 1
    assert len({r.background for r in report.records}) == 3


def test_single_value_sweep(small_data):
    data, plan = small_data
    space = HyperparameterSpace().with_overrides({"epochs": NumericRange(5, 5, 3, integer=True)})
    report = run_shgs(data, plan, space, "epochs", 1, 0, evaluate=stub_evaluate)
    assert len(report.records) == 1


def test_settings_stay_in_pool(small_data):
    data, plan = small_data
    space = HyperparameterSpace()
    seen = []

    def recording(d, p, setting, seed):
        seen.append(setting)
        return stub_evaluate(d, p, setting, seed)

    run_shgs(data, plan, space, "decay", 2, 3, evaluate=recording)
    n_train = plan.train_indices.size
    for s in seen:
        for name, value in s.as_dict().items():
            if value is not None:
                assert space.contains(name, value, n_train)


def test_real_sweep_is_schedule_independent(small_data):
    data, plan = small_data
    space = HyperparameterSpace().with_overrides({
        "epochs": NumericRange(5, 11, 3, integer=True),
        "hidden_nodes": NumericRange(1, 4, 1, integer=True),
        "batch_size": NumericRange(8, 48, 1, integer=True),
        "dropout": NumericRange(0.0, 0.1, 0.05),
    })
    serial = run_shgs(data, plan, space, "dropout", 2, 11)
    parallel = run_shgs(data, plan, space, "dropout", 2, 11, n_jobs=2)
    strip = lambda rep: [
        (r.iteration_id, r.target_value, r.background, r.result.test_auc, r.result.fold_aucs)
        for r in rep.records
    ]
    assert strip(serial) == strip(parallel)


def test_iterations_must_be_positive(small_data):
    data, plan = small_data
    with pytest.raises(ValueError):
        run_shgs(data, plan, HyperparameterSpace(), "epochs", 0, 0, evaluate=stub_evaluate)


def test_recommend_rules():
    assert (recommend_range("epochs").lo, recommend_range("epochs").hi) == (5, 100)
    rec = recommend_range("batch_size", n_train=1460)
    assert (rec.lo, rec.hi) == (1, 292)
    assert (recommend_range("momentum").lo, recommend_range("momentum").hi) == (0.7, 0.9)
    assert recommend_range("dropout").hi == 0.5
    assert recommend_range("decay").hi == 0.003
    for name in ("learning_rate", "l1", "l2"):
        assert recommend_range(name).hi == 0.03
    with pytest.raises(ValueError):
        recommend_range("hidden_nodes")


def test_recommend_empirical(small_data):
    data, plan = small_data
    space = HyperparameterSpace().with_overrides({"momentum": NumericRange(0.1, 0.9, 0.1)})
    aucs = {0.1: 0.6, 0.2: 0.6, 0.3: 0.6, 0.4: 0.6, 0.5: 0.6, 0.6: 0.6, 0.7: 0.795, 0.8: 0.8, 0.9: 0.7}

    def by_value(d, p, setting, seed):
        a = aucs[setting.momentum]
        return CvResult(a, a, a, 0.0)

    report = run_shgs(data, plan, space, "momentum", 1, 0, evaluate=by_value)
    rec = recommend_range("momentum", report=report)
    assert rec.empirical == (0.7, 0.9)
    with pytest.raises(ValueError, match="swept"):
        recommend_range("epochs", report=report)


def test_search_estimator(separable):
    space = HyperparameterSpace().with_overrides({
        "epochs": NumericRange(20, 41, 3, integer=True),
        "learning_rate": NumericRange(0.05, 0.15, 0.05),
        "hidden_nodes": NumericRange(2, 6, 1, integer=True),
        "batch_size": NumericRange(16, 64, 1, integer=True),
        "l1": NumericRange(0.0, 0.002, 0.001),
        "l2": NumericRange(0.0, 0.002, 0.001),
        "dropout": NumericRange(0.0, 0.2, 0.01),
    })
    search = SingleHyperparameterSearch(target="learning_rate", space=space, iterations=2, random_state=4)
    assert clone(search).get_params()["iterations"] == 2
    search.fit(separable.features, separable.labels)
    assert search.scores().shape == (2, 3)
    assert isinstance(search.best_setting_, HyperparameterSetting)
    assert search.best_score_ == search.scores().max()
    assert search.recommendation_.hi == 0.03
