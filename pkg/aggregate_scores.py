import argparse
import json

import pandas as pd

from fl_emph.utils import path_or_cloudpath

SCORE_COLUMNS = ["test_accuracy", "test_balanced_accuracy", "train_accuracy", "final_loss"]


def load_metrics(metrics_files):
    """One row per run; the group is the directory holding the run directories."""
    rows = []
    for metrics_file in metrics_files:
        path = path_or_cloudpath(metrics_file)
        with path.open("r") as f:
            metrics = json.load(f)
        rows.append(
            {
                "group": str(path.parent.parent),
                "run": path.parent.name,
                **{k: metrics.get(k) for k in SCORE_COLUMNS},
            }
        )
    return pd.DataFrame(rows)


def get_aggregate_scores(metrics_files):
    """Returns mean / median / count of each score per run group."""
    df = load_metrics(metrics_files)
    df[SCORE_COLUMNS] = df[SCORE_COLUMNS].apply(pd.to_numeric)
    aggregate = df.groupby("group")[SCORE_COLUMNS].agg(["mean", "median"])
    aggregate.columns = [f"{score}_{stat}" for score, stat in aggregate.columns]
    aggregate.insert(0, "runs", df.groupby("group").size())
    return aggregate.reset_index()


if __name__ == "__main__":
    parser = argparse.ArgumentParser()

    parser.add_argument(
        "--input",
        type=str,
        nargs="+",
        required=True,
        help="metrics.json files written by `emph.py train`, e.g. runs/two-class/seed*/metrics.json",
    )
    parser.add_argument("--output", type=str, help="optional CSV destination")

    args = parser.parse_args()

    scores = get_aggregate_scores(args.input)

    for _, row in scores.iterrows():
        print(
            f"{row['group']} ({row['runs']} runs): "
            f"test accuracy mean {row['test_accuracy_mean']:.3f}, median {row['test_accuracy_median']:.3f}"
        )
    if args.output:
        with path_or_cloudpath(args.output).open("w") as f:
            scores.to_csv(f, index=False)
