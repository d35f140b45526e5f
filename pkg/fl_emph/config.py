"""Training and run configuration, read from and written to flat YAML files."""
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from fl_emph.errors import InputError
from fl_emph.utils import Pathy, path_or_cloudpath

LR_SCHEDULES = ("constant", "harmonic")
SYNTH_KINDS = ("two-class", "three-class")


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.001
    network_learning_rate: Optional[float] = None
    direction_learning_rate: Optional[float] = None
    lr_schedule: str = "constant"
    learn_filtration: bool = True
    modes: List[int] = field(default_factory=lambda: [1, 5])
    dimension: int = 1
    segments: int = 1
    horizon: Optional[float] = None
    resolution: int = 10
    bandwidth: float = 0.05
    hidden_widths: List[int] = field(default_factory=lambda: [50])
    seed: int = 0
    c1: float = 0.5
    c2: float = 2.0
    folds: int = 5
    batch_size: Optional[int] = None
    test_fraction: float = 0.2
    initial_directions: Optional[List[List[float]]] = None
    num_workers: int = 1
    log_every_n_epochs: int = 100

    @property
    def N(self) -> int:
        return len(self.modes)

    def step_size(self, epoch: int, base: float) -> float:
        """alpha_k for epoch k (0-based): constant, or base / (1 + k)."""
        if self.lr_schedule == "harmonic":
            return base / (1.0 + epoch)
        return base

    def network_step(self, epoch: int) -> float:
        base = self.learning_rate if self.network_learning_rate is None else self.network_learning_rate
        return self.step_size(epoch, base)

    def direction_step(self, epoch: int) -> float:
        base = (
            self.learning_rate if self.direction_learning_rate is None else self.direction_learning_rate
        )
        return self.step_size(epoch, base)

    def validate(self) -> "TrainConfig":
        def require(condition: bool, message: str):
            if not condition:
                raise InputError(message)

        require(int(self.epochs) == self.epochs and self.epochs >= 0, f"epochs must be >= 0, got {self.epochs}")
        require(self.learning_rate > 0, f"learning_rate must be positive, got {self.learning_rate}")
        for name in ("network_learning_rate", "direction_learning_rate"):
            value = getattr(self, name)
            require(value is None or value >= 0, f"{name} must be >= 0, got {value}")
        require(
            self.lr_schedule in LR_SCHEDULES,
            f"lr_schedule must be one of {list(LR_SCHEDULES)}, got {self.lr_schedule!r}",
        )
        require(len(self.modes) > 0, "at least one Fourier mode is required")
        require(
            all(int(m) == m and m >= 1 for m in self.modes) and list(self.modes) == sorted(set(self.modes)),
            f"modes must be strictly increasing positive integers, got {self.modes}",
        )
        require(self.dimension >= 0, f"dimension must be >= 0, got {self.dimension}")
        require(self.segments >= 1, f"segments must be >= 1, got {self.segments}")
        require(self.horizon is None or self.horizon > 0, f"horizon must be positive, got {self.horizon}")
        require(self.resolution >= 1, f"resolution must be >= 1, got {self.resolution}")
        require(self.bandwidth > 0, f"bandwidth must be positive, got {self.bandwidth}")
        require(
            len(self.hidden_widths) > 0 and min(self.hidden_widths) >= 1,
            f"hidden_widths must be positive, got {self.hidden_widths}",
        )
        require(self.c1 > 0 and self.c2 > 0, f"c1 and c2 must be positive, got {self.c1}, {self.c2}")
        require(self.folds >= 2, f"folds must be >= 2, got {self.folds}")
        require(self.batch_size is None or self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}")
        require(0 < self.test_fraction < 1, f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.initial_directions is not None:
            directions = np.asarray(self.initial_directions, dtype=float)
            require(
                directions.shape == (self.segments, self.N),
                f"initial_directions must have shape ({self.segments}, {self.N}), got {directions.shape}",
            )
            require(bool(np.all(directions > 0)), "initial_directions must be strictly positive")
        require(self.num_workers >= 1, f"num_workers must be >= 1, got {self.num_workers}")
        require(self.log_every_n_epochs >= 1, f"log_every_n_epochs must be >= 1, got {self.log_every_n_epochs}")
        return self


@dataclass
class RunConfig(TrainConfig):
    input: Optional[str] = None
    test_input: Optional[str] = None
    output_dir: str = "runs/default"
    checkpoint: Optional[str] = None
    synth_kind: str = "two-class"
    synth_per_class: int = 100
    synth_noise: float = 1.0
    synth_length: int = 36
    grid_learning_rate: Optional[List[float]] = None
    grid_bandwidth: Optional[List[float]] = None
    grid_segments: Optional[List[int]] = None

    def validate(self) -> "RunConfig":
        super().validate()
        for name in ("input", "test_input", "checkpoint"):
            value = getattr(self, name)
            if value is not None and not path_or_cloudpath(value).exists():
                raise InputError(f"{name} path does not exist: {value}")
        if self.synth_kind not in SYNTH_KINDS:
            raise InputError(f"synth_kind must be one of {list(SYNTH_KINDS)}, got {self.synth_kind!r}")
        if self.synth_per_class < 1 or self.synth_length < 2 or self.synth_noise < 0:
            raise InputError(
                "synthetic data needs per_class >= 1, length >= 2 and noise >= 0, got "
                f"{self.synth_per_class}, {self.synth_length}, {self.synth_noise}"
            )
        return self

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in asdict(self).items() if k in names})

    def hyperparameter_grid(self) -> Dict[str, List[Any]]:
        grid = {
            "learning_rate": self.grid_learning_rate,
            "bandwidth": self.grid_bandwidth,
            "segments": self.grid_segments,
        }
        return {k: list(v) for k, v in grid.items() if v}


def config_keys(cls=RunConfig) -> List[str]:
    return [f.name for f in fields(cls)]


def merge_config(config: TrainConfig, overrides: Dict[str, Any]) -> TrainConfig:
    """Replace fields by the non-None entries of overrides; unknown keys are errors."""
    known = set(config_keys(type(config)))
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise InputError(f"unknown config key(s): {', '.join(unknown)}")
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})


def read_config(path: Pathy, base: Optional[RunConfig] = None) -> RunConfig:
    path = path_or_cloudpath(path)
    try:
        with path.open("r") as f:
            content = yaml.safe_load(f)
    except OSError as e:
        raise InputError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise InputError(f"malformed config {path}: {e}") from e
    if content is None:
        content = {}
    if not isinstance(content, dict):
        raise InputError(f"config {path} must be a flat mapping of key: value lines")
    return merge_config(base or RunConfig(), content)


def write_config(config: TrainConfig, path: Pathy) -> None:
    path = path_or_cloudpath(path)
    with path.open("w") as f:
        yaml.safe_dump(asdict(config), f, sort_keys=False, default_flow_style=None)
