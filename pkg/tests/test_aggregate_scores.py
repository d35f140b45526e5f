import json

import pytest

from aggregate_scores import get_aggregate_scores


def _write_metrics(path, test_accuracy):
    path.parent.mkdir(parents=True)
    metrics = {
        "test_accuracy": test_accuracy,
        "test_balanced_accuracy": test_accuracy,
        "train_accuracy": 1.0,
        "final_loss": 0.1,
    }
    path.write_text(json.dumps(metrics))
    return str(path)


def test_runs_are_grouped_by_parent_directory(tmp_path):
    files = [
        _write_metrics(tmp_path / "learned" / "seed0" / "metrics.json", 0.9),
        _write_metrics(tmp_path / "learned" / "seed1" / "metrics.json", 1.0),
        _write_metrics(tmp_path / "fixed" / "seed0" / "metrics.json", 0.5),
    ]
    scores = get_aggregate_scores(files).set_index("group")
    learned = scores.loc[str(tmp_path / "learned")]
    assert learned["runs"] == 2
    assert learned["test_accuracy_mean"] == pytest.approx(0.95)
    assert learned["test_accuracy_median"] == pytest.approx(0.95)
    assert scores.loc[str(tmp_path / "fixed"), "test_accuracy_mean"] == pytest.approx(0.5)
