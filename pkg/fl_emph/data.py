"""Datasets: UCR-format files and the synthetic sinusoid experiments.

A row of samples s_0..s_{n-1} is always read as s_i = f(2 pi i / n), so files
of any length are resampled by index onto [0, 2 pi).
"""
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from fl_emph.errors import InputError
from fl_emph.logging_utils import get_logger
from fl_emph.utils import Pathy, path_or_cloudpath, random_seed

logger = get_logger(__name__)


@dataclass
class Dataset:
    samples: np.ndarray
    labels: np.ndarray
    n_classes: int
    provenance: str = ""
    label_mapping: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.samples.ndim != 2 or self.samples.shape[0] == 0:
            raise InputError(f"a dataset needs an (m, n) sample matrix with m >= 1, got {self.samples.shape}")
        if self.labels.shape != (self.samples.shape[0],):
            raise InputError(f"{self.labels.size} labels for {self.samples.shape[0]} series")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise InputError(f"labels must lie in 0..{self.n_classes - 1}")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            self.samples[indices],
            self.labels[indices],
            self.n_classes,
            self.provenance,
            dict(self.label_mapping),
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


def _label_key(value) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def _detect_separator(first_line: str) -> str:
    if "\t" in first_line:
        return "\t"
    if "," in first_line:
        return ","
    return r"\s+"


def load_ucr(path: Pathy, label_mapping: Optional[Dict[str, int]] = None) -> Dataset:
    """load a UCR archive file: one series per row, class label first

    Args:
        path (Pathy): local or cloud path to a tab-, comma- or space-separated file
        label_mapping (Optional[Dict[str, int]], optional): mapping from a previously
            loaded split, so test labels share the training indices. Defaults to None.

    Raises:
        InputError: unreadable file, parse failure, ragged or non-numeric rows,
            fewer than two samples per series, or a label missing from label_mapping

    Returns:
        Dataset: samples with labels remapped densely onto 0..C-1
    """
    path = path_or_cloudpath(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise InputError(f"{path} contains no rows")

    sep = _detect_separator(lines[0])
    try:
        df = pd.read_csv(
            io.StringIO("\n".join(lines)), sep=sep, header=None, engine="c", float_precision="round_trip"
        )
    except pd.errors.ParserError as e:
        raise InputError(f"cannot parse {path}: {e}") from e

    values = df.apply(pd.to_numeric, errors="coerce")
    bad_rows = np.flatnonzero(values.isna().any(axis=1).to_numpy())
    if bad_rows.size:
        row = int(bad_rows[0]) + 1
        raise InputError(
            f"{path}: row {row} is ragged or non-numeric (expected {df.shape[1] - 1} samples after the label)"
        )
    values = values.to_numpy(dtype=float)
    if values.shape[1] < 3:
        raise InputError(f"{path}: every row needs a label and at least 2 samples")

    raw_labels = [_label_key(v) for v in values[:, 0]]
    if label_mapping is None:
        originals = sorted(set(raw_labels), key=float)
        label_mapping = {label: i for i, label in enumerate(originals)}
        if any(label != str(i) for label, i in label_mapping.items()):
            logger.info(f"remapped labels of {path.name}: {label_mapping}")
    unknown = sorted(set(raw_labels) - set(label_mapping))
    if unknown:
        raise InputError(f"{path}: labels {unknown} are not in the training label mapping")

    labels = np.array([label_mapping[label] for label in raw_labels])
    logger.info(f"loaded {len(labels)} series of length {values.shape[1] - 1} from {path}")
    return Dataset(
        samples=values[:, 1:],
        labels=labels,
        n_classes=max(label_mapping.values()) + 1,
        provenance=f"ucr:{path}",
        label_mapping=dict(label_mapping),
    )


def synth_example(
    kind: str = "two-class",
    per_class: int = 100,
    noise: float = 1.0,
    seed: int = 0,
    length: int = 36,
) -> Dataset:
    """Noisy sinusoids on [0, 2 pi).

    two-class: cos t (label 0) vs cos 5t (label 1).
    three-class: cos t and cos 2t (label 0), 2 cos t (label 1), 2 cos 2t (label 2);
    per_class series are drawn for each of the four signals.
    """
    t = 2.0 * np.pi * np.arange(length) / length
    if kind == "two-class":
        signals = [(np.cos(t), 0), (np.cos(5 * t), 1)]
    elif kind == "three-class":
        signals = [
            (np.cos(t), 0),
            (np.cos(2 * t), 0),
            (2 * np.cos(t), 1),
            (2 * np.cos(2 * t), 2),
        ]
    else:
        raise InputError(f"unknown synthetic example {kind!r}, use two-class or three-class")
    if per_class < 1:
        raise InputError(f"per_class must be >= 1, got {per_class}")

    rng = random_seed(seed)
    samples, labels = [], []
    for signal, label in signals:
        samples.append(signal[None, :] + noise * rng.standard_normal((per_class, length)))
        labels.extend([label] * per_class)
    n_classes = max(label for _, label in signals) + 1
    return Dataset(
        samples=np.vstack(samples),
        labels=np.array(labels),
        n_classes=n_classes,
        provenance=f"synth:{kind}:per_class={per_class}:noise={noise}:seed={seed}:length={length}",
        label_mapping={str(i): i for i in range(n_classes)},
    )


def stratified_split(dataset: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    counts = dataset.class_counts()
    if np.count_nonzero(counts) < 2:
        raise InputError("training needs at least two classes")
    train_idx, test_idx = train_test_split(
        np.arange(len(dataset)),
        test_size=test_fraction,
        random_state=seed,
        stratify=dataset.labels,
    )
    return dataset.subset(np.sort(train_idx)), dataset.subset(np.sort(test_idx))


def write_ucr(dataset: Dataset, path: Pathy) -> None:
    """Write samples in the tab-separated UCR layout, original labels first."""
    path = path_or_cloudpath(path)
    df = pd.DataFrame(dataset.samples, columns=range(1, dataset.length + 1))
    names = label_names(dataset)
    df.insert(0, 0, [names[label] for label in dataset.labels])
    with path.open("w") as f:
        df.to_csv(f, sep="\t", header=False, index=False)


def label_names(dataset: Dataset) -> List[str]:
    inverse = {i: label for label, i in dataset.label_mapping.items()}
    return [inverse.get(i, str(i)) for i in range(dataset.n_classes)]
