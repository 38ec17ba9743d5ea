import csv

import pytest

from shgs.cli import EXIT_DATA, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from shgs.config import ConfigError, parse_config, parse_override
from shgs.data import bundled_dataset_path
from shgs.engine import NumericRange, expand_values

SMALL_SPACE = [
    "--space", "epochs=5,11,3",
    "--space", "hidden_nodes=1,4,1",
    "--space", "batch_size=16,64,1",
    "--space", "dropout=0,0.1,0.05",
]


def test_minimal_config_defaults(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\ndataset = d.csv\ntarget = epochs\n")
    cfg = parse_config(ini)
    assert (cfg.iterations, cfg.test_fraction, cfg.folds) == (10, 0.2, 5)
    assert cfg.target_column == "metastasis"


def test_flags_override_file(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\ndataset = d.csv\ntarget = epochs\niterations = 4\n")
    assert parse_config(ini, iterations=2).iterations == 2
    assert parse_config(ini, iterations=None).iterations == 4


@pytest.mark.parametrize(
    "text",
    [
        "[run]\ndataset = d.csv\ntarget = epochs\niterations = 0\n",
        "[run]\ndataset = d.csv\ntarget = epochs\ncolour = red\n",
        "[run]\ndataset = d.csv\n",
        "[run]\ndataset = d.csv\ntarget = epochs\n[space]\nlearning_rate = 0.001, 0.5, 0.001\n",
        "[run]\ndataset = d.csv\ntarget = epochs\n[space]\noptimizer = sgd, rmsprop\n",
        "[run]\ndataset = d.csv\ntarget = epochs\n[space]\nwidth = 1, 2, 1\n",
        "[run]\ndataset = d.csv\ntarget = epochs\n[extra]\na = 1\n",
    ],
)
def test_config_errors(tmp_path, text):
    ini = tmp_path / "c.ini"
    ini.write_text(text)
    with pytest.raises(ConfigError):
        parse_config(ini)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.ini")


def test_learning_rate_override_count(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\ndataset = d.csv\ntarget = learning_rate\n[space]\nlearning_rate = 0.001, 0.05, 0.001\n")
    cfg = parse_config(ini)
    assert cfg.space_overrides["learning_rate"] == NumericRange(0.001, 0.05, 0.001)
    assert len(expand_values(cfg.space(), "learning_rate").values) == 50


def test_override_step_must_stay_on_grid():
    with pytest.raises(ConfigError):
        parse_override("learning_rate", "0.001, 0.05, 0.0015")
    with pytest.raises(ConfigError):
        parse_override("epochs", "6, 20, 3")


def _run(tmp_path, *extra):
    return main([
        "run", "--dataset", str(bundled_dataset_path()), "--target", "dropout",
        "--iterations", "2", "--seed", "5", "--output", str(tmp_path), *SMALL_SPACE, *extra,
    ])


def test_run_plot_timing_recommend(tmp_path, capsys):
    assert _run(tmp_path / "out") == EXIT_OK
    results = tmp_path / "out" / "results_dropout.csv"
    rows = list(csv.DictReader(open(results)))
    assert len(rows) == 2 * 3
    assert (tmp_path / "out" / "results_dropout.json").is_file()
    svgs = sorted((tmp_path / "out" / "plots").glob("*.svg"))
    assert len(svgs) == 2 * 3

    assert main(["plot", "--results", str(results), "--output", str(tmp_path / "replot")]) == EXIT_OK
    assert len(list((tmp_path / "replot").glob("*.svg"))) == 3

    timing = tmp_path / "timing.csv"
    assert main(["timing", str(results), "--output", str(timing)]) == EXIT_OK
    assert "separable" in timing.read_text()

    capsys.readouterr()
    assert main(["recommend", "--target", "dropout", "--results", str(results)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "dropout: [0, 0.5]" in out and "from sweep" in out
    assert main(["recommend", "--target", "batch_size", "--n-train", "1460"]) == EXIT_OK
    assert "batch_size: [1, 292]" in capsys.readouterr().out


def test_exit_codes(tmp_path):
    assert main([]) == EXIT_USAGE
    assert main(["run", "--target", "epochs"]) == EXIT_USAGE
    assert main(["run", "--dataset", "x.csv", "--target", "epochs", "--iterations", "0"]) == EXIT_USAGE
    assert main(["run", "--dataset", str(tmp_path / "nope.csv"), "--target", "epochs"]) == EXIT_DATA
    bad = tmp_path / "bad.csv"
    bad.write_text("a,metastasis\nx,yes\n")
    assert main(["run", "--dataset", str(bad), "--target", "epochs"]) == EXIT_DATA
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert _run(blocker / "sub") == EXIT_IO
    assert main(["recommend", "--target", "batch_size"]) == EXIT_USAGE
