import json

import pandas as pd
import pytest

from fl_emph.cli import EXIT_INPUT, EXIT_OK, build_config, make_argparser, run

TINY = [
    "--synth-per-class", "10",
    "--synth-noise", "0.3",
    "--epochs", "2",
    "--resolution", "4",
    "--bandwidth", "0.2",
    "--hidden-widths", "6",
    "--learning-rate", "0.01",
]  # fmt: skip


def test_flags_override_presets():
    argv = ["train", "--example", "three-class", "--epochs", "3", "--no-learn-filtration"]
    args = make_argparser().parse_args(argv)
    config = build_config(args)
    assert config.epochs == 3
    assert config.modes == [1, 2]
    assert config.segments == 3
    assert config.learn_filtration is False


def test_config_file_sits_between_preset_and_flags(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("epochs: 5\nseed: 9\n")
    argv = ["train", "--example", "two-class", "--config", str(path), "--seed", "2"]
    args = make_argparser().parse_args(argv)
    config = build_config(args)
    assert config.epochs == 5
    assert config.seed == 2
    assert config.modes == [1, 5]


def test_synth_and_barcode(tmp_path):
    data = tmp_path / "data.tsv"
    assert run(["synth", "--output", str(data), *TINY]) == EXIT_OK
    assert len(data.read_text().splitlines()) == 20

    bars = tmp_path / "bars.csv"
    assert run(["barcode", "--input", str(data), "--output", str(bars)]) == EXIT_OK
    frame = pd.read_csv(bars, header=None, names=["dimension", "birth", "death", "composition", "series"])
    assert set(frame["series"]) == set(range(20))
    assert (frame["dimension"] == 1).all()
    assert (frame["birth"] < frame["death"]).all()
    assert set(frame["composition"]) == {"1 0", "0 1"}


def test_image(tmp_path):
    out = tmp_path / "image.csv"
    assert run(["image", "--row", "3", "--output", str(out), *TINY]) == EXIT_OK
    assert pd.read_csv(out, header=None).shape == (4, 4)
    assert run(["image", "--row", "99", *TINY]) == EXIT_INPUT


def test_train_then_eval_reproduces_the_test_score(tmp_path):
    out = tmp_path / "run"
    assert run(["train", "--output-dir", str(out), *TINY]) == EXIT_OK
    for name in ("config.yml", "checkpoint.json", "metrics.json", "timings.json", "trajectory.csv", "test.tsv"):
        assert (out / name).exists()
    metrics = json.loads((out / "metrics.json").read_text())
    assert len(metrics["losses"]) == 2
    assert len(pd.read_csv(out / "trajectory.csv")) == 3

    assert run(["eval", "--output-dir", str(out)]) == EXIT_OK
    scores = json.loads((out / "eval_metrics.json").read_text())
    assert scores["accuracy"] == metrics["test_accuracy"]
    assert scores["balanced_accuracy"] == metrics["test_balanced_accuracy"]


def test_metrics_are_deterministic(tmp_path):
    for name in ("a", "b"):
        assert run(["train", "--output-dir", str(tmp_path / name), *TINY]) == EXIT_OK
    assert (tmp_path / "a" / "metrics.json").read_bytes() == (tmp_path / "b" / "metrics.json").read_bytes()


def test_crossval(tmp_path):
    out = tmp_path / "cv"
    argv = ["crossval", "--output-dir", str(out), "--folds", "2", "--grid-bandwidth", "0.2", "0.5", *TINY]
    assert run(argv) == EXIT_OK
    table = pd.read_csv(out / "crossval.csv")
    assert len(table) == 2
    assert (out / "best_config.yml").exists()


def test_multipers_demo(fixture_path, capsys):
    assert run(["multipers-demo", "--fixture", str(fixture_path)]) == EXIT_OK
    output = capsys.readouterr().out.splitlines()
    lines = dict(line.split(": ", 1) for line in output if line.startswith(("image:", "landscape:")))
    image = [float(v) for v in lines["image"].split()]
    assert image == pytest.approx([0.0664, 0.3145, 0.3145, 0.3928], abs=5e-4)
    assert lines["landscape"] == "0.0000 0.0000 0.0000 1.0000"


@pytest.mark.parametrize(
    "argv",
    [
        ["train", "--input", "does/not/exist.tsv"],
        ["train", "--modes", "1", "40", *TINY],
        ["eval", "--checkpoint", "does/not/exist.json"],
        ["multipers-demo", "--fixture", "does/not/exist.json"],
    ],
)
def test_input_errors_exit_with_one(argv, tmp_path):
    if argv[0] != "multipers-demo":
        argv = [*argv, "--output-dir", str(tmp_path)]
    assert run(argv) == EXIT_INPUT


def test_unknown_config_key_exits_with_one(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("epochz: 3\n")
    assert run(["train", "--config", str(path), "--output-dir", str(tmp_path)]) == EXIT_INPUT
