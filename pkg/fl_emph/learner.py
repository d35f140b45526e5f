"""Filtration learning: exact direction gradients, projected updates, training drivers.

One epoch runs the whole pipeline on the training set,

    radii -> barcodes along the curve -> persistence images -> min-max scaling
          -> dense network -> cross-entropy,

then takes one gradient step on the network and one projected step on the
curve's direction vectors:

    a_half = a - alpha * dL/da,      a <- proj_[m, M](a_half / |a_half|).

The direction gradient is assembled by the chain rule

    dL/da^s = J(a^s) sum_i [ (delta^1 W^1)_i / (I_max - I_min)_i
                             (dI/db db/drho^s + dI/dd dd/drho^s)_i ],

with J(a) = I/|a| - a a^T/|a|^3 and the scale of each image held constant.
"""
import json
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from sklearn.metrics import accuracy_score, balanced_accuracy_score
from sklearn.model_selection import ParameterGrid, StratifiedKFold
from tqdm import tqdm

from fl_emph.barcode import (
    Barcode,
    BarcodeBatch,
    BarOrigin,
    FiltrationCurve,
    as_radii,
    batch_curve_barcode,
    circle_interval,
    ray_barcode,
)
from fl_emph.config import TrainConfig
from fl_emph.data import Dataset, stratified_split
from fl_emph.errors import DomainError, InputError, InternalError
from fl_emph.logging_utils import get_logger
from fl_emph.network import (
    DenseNet,
    apply_gradients,
    backward,
    forward,
    init_dense_net,
    loss,
)
from fl_emph.spectral import batch_fourier_amplitudes
from fl_emph.utils import Pathy, path_or_cloudpath, random_seed, worker_pool
from fl_emph.vectorize import (
    ImageGrid,
    ScaleRecord,
    batch_apply_scale,
    batch_image_endpoint_gradients,
    batch_minmax_scale,
    batch_persistence_images,
    make_grid,
)

logger = get_logger(__name__)

PHASES = ("barcode", "image", "network", "update")


@dataclass(frozen=True)
class ConstraintBox:
    m: float
    M: float
    c1: float = 0.5
    c2: float = 2.0

    def __post_init__(self):
        if not 0 < self.m <= self.M:
            raise InputError(f"constraint box needs 0 < m <= M, got m={self.m}, M={self.M}")

    def contains(self, x: np.ndarray, atol: float = 0.0) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.m - atol) and np.all(x <= self.M + atol))


@dataclass
class Model:
    net: DenseNet
    curve: FiltrationCurve
    grid: ImageGrid
    config: TrainConfig
    n_classes: int
    label_mapping: Dict[str, int] = field(default_factory=dict)

    def inputs(self, samples: np.ndarray) -> np.ndarray:
        radii = batch_fourier_amplitudes(samples, self.config.modes)
        batch = batch_curve_barcode(radii, self.curve, self.config.dimension)
        images = batch_persistence_images(batch.births, batch.deaths, batch.valid, self.grid)
        return batch_minmax_scale(images)[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": asdict(self.config),
            "network": self.net.to_dict(),
            "curve": {"directions": self.curve.directions.tolist(), "horizon": self.curve.horizon},
            "grid": self.grid.to_dict(),
            "n_classes": self.n_classes,
            "label_mapping": self.label_mapping,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "Model":
        try:
            return cls(
                net=DenseNet.from_dict(d["network"]),
                curve=FiltrationCurve(np.asarray(d["curve"]["directions"]), d["curve"]["horizon"]),
                grid=ImageGrid.from_dict(d["grid"]),
                config=TrainConfig(**d["config"]),
                n_classes=int(d["n_classes"]),
                label_mapping=dict(d.get("label_mapping", {})),
            )
        except (KeyError, TypeError) as e:
            raise InputError(f"malformed checkpoint: {e!r}") from e


@dataclass
class TrainReport:
    losses: List[float]
    trajectory: List[np.ndarray]
    box: ConstraintBox
    timings: Dict[str, float] = field(default_factory=lambda: {phase: 0.0 for phase in PHASES})
    train_accuracy: Optional[float] = None
    test_accuracy: Optional[float] = None
    test_balanced_accuracy: Optional[float] = None

    def metrics(self) -> Dict[str, Any]:
        """Deterministic summary (no wall-clock entries)."""
        return {
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "test_balanced_accuracy": self.test_balanced_accuracy,
            "final_loss": self.losses[-1] if self.losses else None,
            "losses": self.losses,
            "constraint_box": {"m": self.box.m, "M": self.box.M},
            "final_directions": self.trajectory[-1].tolist(),
        }

    def trajectory_frame(self) -> pd.DataFrame:
        R, N = self.trajectory[0].shape
        rows = np.stack([a.ravel() for a in self.trajectory])
        df = pd.DataFrame(rows, columns=[f"a{s + 1}_{L + 1}" for s in range(R) for L in range(N)])
        df.insert(0, "loss", self.losses + [np.nan])
        df.insert(0, "epoch", np.arange(len(self.trajectory)))
        return df


@dataclass
class CrossValResult:
    best_params: Dict[str, Any]
    best_config: TrainConfig
    table: pd.DataFrame
    folds: pd.DataFrame


@dataclass
class BenchReport:
    epochs: int
    exact_seconds: float
    numeric_seconds: float
    first_step_relative_error: float

    @property
    def speedup(self) -> float:
        return self.numeric_seconds / self.exact_seconds if self.exact_seconds > 0 else np.inf


def rho(a: Sequence[float]) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a)
    if norm == 0 or not np.isfinite(norm):
        raise DomainError(f"cannot normalize direction {a.tolist()}")
    return a / norm


def rho_jacobian(a: Sequence[float]) -> np.ndarray:
    """d rho / d a = I/|a| - a a^T/|a|^3 (symmetric, a in its null space)."""
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a)
    if norm == 0 or not np.isfinite(norm):
        raise DomainError(f"cannot differentiate the normalization at {a.tolist()}")
    return np.eye(a.size) / norm - np.outer(a, a) / norm**3


def _threshold(radii: np.ndarray, origin: BarOrigin, L: int, endpoint: int) -> float:
    """Unscaled circle threshold behind a bar endpoint (0 when the mode has n_L = 0)."""
    n_L = origin.composition[L]
    if n_L == 0:
        return 0.0
    interval = circle_interval(radii[L], n_L)
    if interval is None:
        raise InternalError(f"bar origin {origin.composition} uses a degenerate circle at mode {L}")
    return interval[endpoint]


def _check_origins(origins: Sequence[BarOrigin], N: int, n: int) -> None:
    for origin in origins:
        if len(origin.composition) != N or sum(origin.composition) != n:
            raise InternalError(
                f"bar origin {origin.composition} does not belong to a dimension-{n} barcode on {N} modes"
            )


def ray_sensitivities(
    radii, rho_: Sequence[float], n: int, origins: Sequence[BarOrigin]
) -> Tuple[np.ndarray, np.ndarray]:
    """(db/drho, dd/drho), each (p, N), along the ray with unit direction rho_.

    An endpoint t = x / (sqrt(N) rho_L) of the extreme mode L gives
    -x / (sqrt(N) rho_L^2) in column L; every other entry is 0. For n = 1
    births are identically 0 and dd_j/drho_L = -sqrt(3/N) r_L / rho_L^2.
    """
    radii = as_radii(radii)
    rho_ = np.asarray(rho_, dtype=float)
    N = radii.size
    _check_origins(origins, N, n)
    db = np.zeros((len(origins), N))
    dd = np.zeros((len(origins), N))
    for j, origin in enumerate(origins):
        L = origin.birth_argmax
        db[j, L] = -_threshold(radii, origin, L, 0) / (np.sqrt(N) * rho_[L] ** 2)
        L = origin.death_argmin
        if origin.composition[L]:
            dd[j, L] = -_threshold(radii, origin, L, 1) / (np.sqrt(N) * rho_[L] ** 2)
    return db, dd


def curve_sensitivities(
    radii, curve: FiltrationCurve, n: int, origins: Sequence[BarOrigin]
) -> Tuple[np.ndarray, np.ndarray]:
    """(db/drho^s, dd/drho^s), each (R, p, N).

    An endpoint reached on segment s* of the extreme mode L depends on
    rho^i_L through -(Q/R)/rho^{s*}_L for i < s*, through
    -(x - c~_L((s*-1)Q/R)) / (sqrt(N) (rho^{s*}_L)^2) for i = s*, and not at
    all for i > s*.
    """
    radii = as_radii(radii)
    N, R = radii.size, curve.R
    _check_origins(origins, N, n)
    rho_, C = curve.rho, curve.breakpoints()
    step = curve.horizon / R
    sensitivities = np.zeros((2, R, len(origins), N))
    for j, origin in enumerate(origins):
        for which, (L, segments) in enumerate(
            [
                (origin.birth_argmax, origin.birth_segments),
                (origin.death_argmin, origin.death_segments),
            ]
        ):
            if origin.composition[L] == 0:
                continue
            s = segments[L]
            if not 1 <= s <= R:
                raise InternalError(f"bar origin segment {s} outside 1..{R}")
            x = _threshold(radii, origin, L, which)
            sensitivities[which, : s - 1, j, L] = -step / rho_[s - 1, L]
            sensitivities[which, s - 1, j, L] = -(x - C[s - 1, L]) / (np.sqrt(N) * rho_[s - 1, L] ** 2)
    return sensitivities[0], sensitivities[1]


def direction_gradient(
    input_gradient: np.ndarray,
    scales: Sequence[ScaleRecord],
    image_gradients: Sequence[Tuple[np.ndarray, np.ndarray]],
    sensitivities: Sequence[Tuple[np.ndarray, np.ndarray]],
    directions: np.ndarray,
) -> np.ndarray:
    """dL/da^s for every segment, shape (R, N), summed over the batch in order."""
    input_gradient = np.atleast_2d(input_gradient)
    directions = np.atleast_2d(directions)
    S = input_gradient.shape[0]
    if not len(scales) == len(image_gradients) == len(sensitivities) == S:
        raise InternalError(
            f"direction gradient needs one scale, image gradient and sensitivity per sample; got "
            f"{len(scales)}, {len(image_gradients)}, {len(sensitivities)} for {S} samples"
        )
    d_rho = np.zeros_like(directions, dtype=float)
    for delta, scale, (dI_db, dI_dd), (db, dd) in zip(input_gradient, scales, image_gradients, sensitivities):
        if dI_db.shape != (delta.size, db.shape[1]) or db.shape[0] != directions.shape[0]:
            raise InternalError(
                f"shape mismatch: input gradient {delta.shape}, image gradient {dI_db.shape}, "
                f"sensitivity {db.shape}"
            )
        u = delta / scale.divisor
        d_rho += (u @ dI_db) @ db + (u @ dI_dd) @ dd
    return np.stack([rho_jacobian(a) @ g for a, g in zip(directions, d_rho)])


def batch_curve_sensitivities(curve: FiltrationCurve, batch: BarcodeBatch) -> Tuple[np.ndarray, np.ndarray]:
    """curve_sensitivities for every column of a BarcodeBatch, each (S, R, p, N).

    Invalid columns and endpoints of modes with n_L = 0 are zero.
    """
    if batch.birth_segments.shape[-1] != curve.N:
        raise InternalError(f"batch has {batch.birth_segments.shape[-1]} modes, curve has {curve.N}")
    P = batch.births.shape[1]
    R, N = curve.R, curve.N
    rho_, C = curve.rho, curve.breakpoints()
    step = curve.horizon / R
    compositions = np.array(batch.compositions, dtype=int).reshape(P, N)
    columns = np.arange(P)[None, :]
    ranks = np.arange(R)[None, :, None]
    out = []
    for mode, segments, x in [
        (batch.birth_mode, batch.birth_segments, batch.birth_threshold),
        (batch.death_mode, batch.death_segments, batch.death_threshold),
    ]:
        active = batch.valid & (compositions[columns, mode] > 0)
        s = np.take_along_axis(segments, mode[..., None], axis=-1)[..., 0]
        if np.any((s[active] < 1) | (s[active] > R)):
            raise InternalError(f"bar origin segment outside 1..{R}")
        s = np.where(active, s, 1)
        r = rho_[s - 1, mode]
        earlier = -step / r
        own = -(x - C[s - 1, mode]) / (np.sqrt(N) * r**2)
        coef = np.where(ranks < (s - 1)[:, None, :], earlier[:, None, :], 0.0)
        coef = np.where(ranks == (s - 1)[:, None, :], own[:, None, :], coef)
        coef = np.where(active[:, None, :], coef, 0.0)
        onehot = mode[..., None] == np.arange(N)
        out.append(coef[..., None] * onehot[:, None, :, :])
    return out[0], out[1]


def batch_direction_gradient(
    input_gradient: np.ndarray,
    scales: Sequence[ScaleRecord],
    image_gradients: Tuple[np.ndarray, np.ndarray],
    sensitivities: Tuple[np.ndarray, np.ndarray],
    directions: np.ndarray,
) -> np.ndarray:
    """direction_gradient for batched image gradients (S, r^2, p) and sensitivities (S, R, p, N)."""
    input_gradient = np.atleast_2d(input_gradient)
    directions = np.atleast_2d(directions)
    dI_db, dI_dd = image_gradients
    db, dd = sensitivities
    S, G = input_gradient.shape
    if len(scales) != S or dI_db.shape[:2] != (S, G) or db.shape[:2] != (S, directions.shape[0]):
        raise InternalError(
            f"shape mismatch: input gradient {input_gradient.shape}, {len(scales)} scales, "
            f"image gradient {dI_db.shape}, sensitivity {db.shape}"
        )
    u = input_gradient / np.array([scale.divisor for scale in scales])[:, None]
    d_rho = np.einsum("sp,srpn->rn", np.einsum("sg,sgp->sp", u, dI_db), db)
    d_rho += np.einsum("sp,srpn->rn", np.einsum("sg,sgp->sp", u, dI_dd), dd)
    return np.stack([rho_jacobian(a) @ g for a, g in zip(directions, d_rho)])


def constraint_bounds(
    barcodes: Sequence[Barcode],
    N: int,
    c1: float = 0.5,
    c2: float = 2.0,
    eps_floor: Optional[float] = None,
) -> ConstraintBox:
    """box for the normalized direction components

    An endpoint at threshold x is reached at time x / (sqrt(N) rho_L), so at
    the diagonal rho_0 = 1/sqrt(N) it sits at x itself (for n = 1 a death is
    sqrt(3/N) r_L / rho_L). Along any ray or curve whose unit directions stay
    in [m, M]^N every death is at most rho_0/m times its diagonal value and
    every birth at least rho_0/M times its diagonal value. Hence

        m = max(eps_floor, rho_0 / c2)   deaths stay below c2 * max diagonal death
        M = min(1, rho_0 / c1)           births stay above c1 * min positive birth

    which keeps every bar inside the image grid sized from the diagonal
    barcodes. M is 1 when every diagonal birth is 0 (dimension 1).

    Args:
        barcodes (Sequence[Barcode]): training barcodes at the diagonal ray
        N (int): number of modes
        c1 (float, optional): birth factor. Defaults to 0.5.
        c2 (float, optional): death factor. Defaults to 2.0.
        eps_floor (Optional[float], optional): smallest allowed m. Defaults to 0.01/sqrt(N).

    Raises:
        InputError: no finite bars to derive the box from

    Returns:
        ConstraintBox: [m, M] for every component
    """
    if not c1 > 0 or not c2 > 0:
        raise InputError(f"constraint factors must be positive, got c1={c1}, c2={c2}")
    finite = [barcode.finite_part() for barcode in barcodes]
    births = np.concatenate([b.births for b in finite]) if finite else np.empty(0)
    deaths = np.concatenate([b.deaths for b in finite]) if finite else np.empty(0)
    if deaths.size == 0 or deaths.max() <= 0:
        raise InputError("constraint box needs at least one finite bar in the initial barcodes")
    eps_floor = 0.01 / np.sqrt(N) if eps_floor is None else eps_floor
    rho0 = 1.0 / np.sqrt(N)
    m = max(eps_floor, rho0 / c2)
    M = min(1.0, rho0 / c1) if np.any(births > 0) else 1.0
    return ConstraintBox(m=float(m), M=float(M), c1=c1, c2=c2)


def _project_row(a: np.ndarray, box: ConstraintBox) -> np.ndarray:
    v = rho(a)
    if box.contains(v):
        return v
    positive = v > 0
    if not positive.any():
        return np.full(v.size, box.m)

    def excess(scale):
        return np.linalg.norm(np.clip(scale * v, box.m, box.M)) - 1.0

    lo, hi = box.m / v[positive].max(), box.M / v[positive].min()
    if excess(lo) >= 0:
        scale = lo
    elif excess(hi) <= 0:
        scale = hi
    else:
        scale = brentq(excess, lo, hi, xtol=1e-15)
    return np.clip(scale * v, box.m, box.M)


def project(a_half: np.ndarray, box: ConstraintBox) -> np.ndarray:
    """clip(rho(a_half), m, M), row-wise for an (R, N) array.

    When the clip is active the clipped vector is rescaled along rho(a_half)
    until it has unit norm again, clip(lambda rho(a_half), m, M) with
    |.| = 1, so the result is a unit vector in [m, M]^N and
    project(project(x)) == project(x). Boxes that cannot hold a unit vector
    give the all-m (or all-M) corner nearest to the sphere.
    """
    a_half = np.asarray(a_half, dtype=float)
    if a_half.ndim == 1:
        return _project_row(a_half, box)
    return np.stack([_project_row(row, box) for row in a_half])


def diagonal_barcodes(radii: np.ndarray, n: int) -> List[Barcode]:
    ones = np.ones(radii.shape[1])
    return [ray_barcode(r, ones, n)[0] for r in radii]


def default_horizon(barcodes: Sequence[Barcode]) -> float:
    deaths = np.concatenate([b.finite_part().deaths for b in barcodes])
    if deaths.size == 0 or deaths.max() <= 0:
        raise InputError("cannot choose a curve horizon: no finite bars along the diagonal")
    return float(deaths.max())


@dataclass
class PipelineResult:
    loss: float
    probabilities: np.ndarray
    scales: List[ScaleRecord]
    net_gradients: Any = None
    direction_gradient: Optional[np.ndarray] = None


def run_pipeline(
    radii: np.ndarray,
    labels: np.ndarray,
    curve: FiltrationCurve,
    grid: ImageGrid,
    net: DenseNet,
    n: int,
    with_gradients: bool = True,
    with_direction_gradient: bool = True,
    scales: Optional[Sequence[ScaleRecord]] = None,
    timings: Optional[Dict[str, float]] = None,
) -> PipelineResult:
    """Forward (and optionally backward) pass for a batch of radii.

    Barcodes, images and sensitivities are computed for the whole batch at
    once. Passing scales reuses those Min-Max records instead of recomputing
    them.
    """
    timings = timings if timings is not None else {phase: 0.0 for phase in PHASES}

    tick = time.perf_counter()
    batch = batch_curve_barcode(radii, curve, n)
    if with_direction_gradient:
        sens = batch_curve_sensitivities(curve, batch)
    timings["barcode"] += time.perf_counter() - tick

    tick = time.perf_counter()
    images = batch_persistence_images(batch.births, batch.deaths, batch.valid, grid)
    if scales is None:
        X, records = batch_minmax_scale(images)
    else:
        records = list(scales)
        X = batch_apply_scale(images, records)
    if with_direction_gradient:
        image_grads = batch_image_endpoint_gradients(batch.births, batch.deaths, batch.valid, grid)
    timings["image"] += time.perf_counter() - tick

    tick = time.perf_counter()
    probabilities, cache = forward(net, X)
    result = PipelineResult(loss(probabilities, labels), probabilities, records)
    if with_gradients:
        result.net_gradients = backward(net, cache, labels)
    timings["network"] += time.perf_counter() - tick

    if with_gradients and with_direction_gradient:
        tick = time.perf_counter()
        result.direction_gradient = batch_direction_gradient(
            result.net_gradients.input_gradient, records, image_grads, sens, curve.directions
        )
        timings["update"] += time.perf_counter() - tick
    return result


def pipeline_loss(
    radii: np.ndarray,
    labels: np.ndarray,
    curve: FiltrationCurve,
    grid: ImageGrid,
    net: DenseNet,
    n: int,
    scales: Optional[Sequence[ScaleRecord]] = None,
) -> float:
    return run_pipeline(
        radii, labels, curve, grid, net, n, with_gradients=False, with_direction_gradient=False, scales=scales
    ).loss


def numeric_direction_gradient(
    radii: np.ndarray,
    labels: np.ndarray,
    curve: FiltrationCurve,
    grid: ImageGrid,
    net: DenseNet,
    n: int,
    step: float = 1e-6,
    central: bool = True,
    freeze_scales: bool = True,
) -> np.ndarray:
    """Finite-difference dL/da^s, shape (R, N).

    With freeze_scales the Min-Max records of the base point are reused for
    every perturbed evaluation, which is what the exact gradient assumes.
    Forward differences cost R*N + 1 pipeline evaluations, central ones 2*R*N.
    """
    base = run_pipeline(radii, labels, curve, grid, net, n, with_gradients=False, with_direction_gradient=False)
    scales = base.scales if freeze_scales else None
    directions = curve.directions
    grad = np.zeros_like(directions)
    for s in range(curve.R):
        for L in range(curve.N):
            shifted = directions.copy()
            shifted[s, L] += step
            plus = pipeline_loss(radii, labels, FiltrationCurve(shifted, curve.horizon), grid, net, n, scales)
            if central:
                shifted[s, L] -= 2 * step
                minus = pipeline_loss(
                    radii, labels, FiltrationCurve(shifted, curve.horizon), grid, net, n, scales
                )
                grad[s, L] = (plus - minus) / (2 * step)
            else:
                grad[s, L] = (plus - base.loss) / step
    return grad


def _batches(S: int, batch_size: Optional[int], rng: np.random.Generator) -> List[np.ndarray]:
    if batch_size is None or batch_size >= S:
        return [np.arange(S)]
    order = rng.permutation(S)
    return [np.sort(order[k : k + batch_size]) for k in range(0, S, batch_size)]


def fit(
    train_set: Dataset,
    config: TrainConfig,
    gradient: str = "exact",
    progress: bool = True,
) -> Tuple[Model, TrainReport]:
    """Run filtration learning on a training set.

    gradient selects how dL/da is obtained: "exact" (chain rule) or
    "numeric" (forward differences with frozen scales).
    """
    config.validate()
    if gradient not in ("exact", "numeric"):
        raise InputError(f"gradient must be 'exact' or 'numeric', got {gradient!r}")
    if np.count_nonzero(train_set.class_counts()) < 2:
        raise InputError("training needs at least two classes")

    n = config.dimension
    radii = batch_fourier_amplitudes(train_set.samples, config.modes)
    labels = train_set.labels

    initial = diagonal_barcodes(radii, n)
    grid = make_grid(initial, config.resolution, config.bandwidth, config.c2)
    box = constraint_bounds(initial, config.N, config.c1, config.c2)
    horizon = config.horizon if config.horizon is not None else default_horizon(initial)
    logger.info(f"constraint box [{box.m:.4g}, {box.M:.4g}], horizon Q={horizon:.4g}, R={config.segments}")

    if config.initial_directions is not None:
        directions = np.asarray(config.initial_directions, dtype=float)
    else:
        directions = np.ones((config.segments, config.N))
    directions = project(directions, box)
    curve = FiltrationCurve(directions, horizon)
    net = init_dense_net([grid.size, *config.hidden_widths, train_set.n_classes], config.seed)

    report = TrainReport(losses=[], trajectory=[directions.copy()], box=box)
    rng = random_seed(config.seed)
    learn = config.learn_filtration
    for epoch in tqdm(range(config.epochs), disable=None if progress else True, desc="epochs"):
        epoch_loss = 0.0
        for batch in _batches(len(train_set), config.batch_size, rng):
            result = run_pipeline(
                radii[batch],
                labels[batch],
                curve,
                grid,
                net,
                n,
                with_direction_gradient=learn and gradient == "exact",
                timings=report.timings,
            )
            epoch_loss += result.loss
            if learn and gradient == "numeric":
                tick = time.perf_counter()
                result.direction_gradient = numeric_direction_gradient(
                    radii[batch], labels[batch], curve, grid, net, n, central=False
                )
                report.timings["update"] += time.perf_counter() - tick

            tick = time.perf_counter()
            apply_gradients(net, result.net_gradients, config.network_step(epoch))
            if learn:
                a_half = curve.directions - config.direction_step(epoch) * result.direction_gradient
                curve = FiltrationCurve(project(a_half, box), horizon)
            report.timings["update"] += time.perf_counter() - tick

        report.losses.append(epoch_loss / len(train_set))
        report.trajectory.append(curve.directions.copy())
        message = f"epoch {epoch + 1}/{config.epochs} loss {report.losses[-1]:.6f}"
        if (epoch + 1) % config.log_every_n_epochs == 0:
            logger.info(message)
        else:
            logger.debug(message)

    logger.info(
        "phase seconds: " + ", ".join(f"{phase} {report.timings[phase]:.2f}" for phase in PHASES)
    )
    model = Model(net, curve, grid, config, train_set.n_classes, dict(train_set.label_mapping))
    report.train_accuracy = evaluate(model, train_set)["accuracy"]
    return model, report


def predict(model: Model, dataset: Dataset) -> np.ndarray:
    probabilities, _ = forward(model.net, model.inputs(dataset.samples))
    return probabilities.argmax(axis=1)


def evaluate(model: Model, dataset: Dataset) -> Dict[str, float]:
    X = model.inputs(dataset.samples)
    probabilities, _ = forward(model.net, X)
    predictions = probabilities.argmax(axis=1)
    return {
        "accuracy": float(accuracy_score(dataset.labels, predictions)),
        "balanced_accuracy": float(balanced_accuracy_score(dataset.labels, predictions)),
        "loss": loss(probabilities, dataset.labels) / len(dataset),
    }


def train(dataset: Dataset, config: TrainConfig, test_set: Optional[Dataset] = None) -> Tuple[Model, TrainReport]:
    """Stratified split (unless a test set is given), fit, and score on the held-out part."""
    config.validate()
    if test_set is None:
        train_set, test_set = stratified_split(dataset, config.test_fraction, config.seed)
    else:
        train_set = dataset
    model, report = fit(train_set, config)
    metrics = evaluate(model, test_set)
    report.test_accuracy = metrics["accuracy"]
    report.test_balanced_accuracy = metrics["balanced_accuracy"]
    logger.info(
        f"train accuracy {report.train_accuracy:.4f}, test accuracy {report.test_accuracy:.4f} "
        f"({len(train_set)} train / {len(test_set)} test)"
    )
    return model, report


def _crossval_task(task) -> Dict[str, Any]:
    cell_index, fold, params, config, dataset, train_idx, test_idx = task
    model, _ = fit(dataset.subset(train_idx), config, progress=False)
    metrics = evaluate(model, dataset.subset(test_idx))
    return {"cell": cell_index, "fold": fold, **params, "accuracy": metrics["accuracy"]}


def crossval(
    dataset: Dataset, config: TrainConfig, grid: Optional[Dict[str, Sequence[Any]]] = None
) -> CrossValResult:
    """k-fold stratified cross-validation over a hyperparameter grid.

    Cells are evaluated independently (in worker processes when
    config.num_workers > 1); the best mean accuracy wins, earliest cell on ties.
    """
    config.validate()
    counts = dataset.class_counts()
    if np.any(counts[counts > 0] < config.folds):
        raise InputError(
            f"every class needs at least {config.folds} samples for {config.folds}-fold cross-validation, "
            f"got class counts {counts.tolist()}"
        )
    cells = list(ParameterGrid(dict(grid or {})))
    splitter = StratifiedKFold(n_splits=config.folds, shuffle=True, random_state=config.seed)
    splits = list(splitter.split(np.zeros(len(dataset)), dataset.labels))

    tasks = []
    for cell_index, params in enumerate(cells):
        cell_config = replace(config, **params).validate()
        for fold, (train_idx, test_idx) in enumerate(splits):
            tasks.append((cell_index, fold, params, cell_config, dataset, train_idx, test_idx))
    logger.info(f"cross-validating {len(cells)} cells x {config.folds} folds")

    folds = pd.DataFrame(worker_pool(_crossval_task, tasks, config.num_workers))
    table = folds.groupby("cell", sort=True)["accuracy"].agg(["mean", "std"]).reset_index()
    table.insert(1, "params", [json.dumps(cells[i], sort_keys=True) for i in table["cell"]])
    best = int(table["mean"].to_numpy().argmax())
    best_params = cells[int(table["cell"].iloc[best])]
    logger.info(f"best cell {best_params} with mean accuracy {table['mean'].iloc[best]:.4f}")
    return CrossValResult(best_params, replace(config, **best_params), table, folds)


def benchmark(dataset: Dataset, config: TrainConfig) -> BenchReport:
    """Time config.epochs epochs with the exact and the finite-difference direction gradient.

    Training with gradient="numeric" uses forward differences; the reported
    first-step error compares the exact gradient against central differences.
    """
    config = replace(config, learn_filtration=True).validate()
    radii = batch_fourier_amplitudes(dataset.samples, config.modes)
    initial = diagonal_barcodes(radii, config.dimension)
    grid = make_grid(initial, config.resolution, config.bandwidth, config.c2)
    box = constraint_bounds(initial, config.N, config.c1, config.c2)
    horizon = config.horizon if config.horizon is not None else default_horizon(initial)
    curve = FiltrationCurve(project(np.ones((config.segments, config.N)), box), horizon)
    net = init_dense_net([grid.size, *config.hidden_widths, dataset.n_classes], config.seed)

    exact = run_pipeline(radii, dataset.labels, curve, grid, net, config.dimension).direction_gradient
    numeric = numeric_direction_gradient(
        radii, dataset.labels, curve, grid, net, config.dimension, step=1e-7, central=True
    )
    relative_error = float(np.linalg.norm(exact - numeric) / max(np.linalg.norm(exact), 1e-300))

    seconds = {}
    for gradient in ("exact", "numeric"):
        tick = time.perf_counter()
        fit(dataset, config, gradient=gradient, progress=False)
        seconds[gradient] = time.perf_counter() - tick
        logger.info(f"{gradient} gradient: {config.epochs} epochs in {seconds[gradient]:.2f}s")
    return BenchReport(config.epochs, seconds["exact"], seconds["numeric"], relative_error)


def save_checkpoint(model: Model, path: Pathy) -> None:
    path = path_or_cloudpath(path)
    with path.open("w") as f:
        json.dump(model.to_dict(), f)


def load_checkpoint(path: Pathy) -> Model:
    path = path_or_cloudpath(path)
    try:
        with path.open("r") as f:
            content = json.load(f)
    except OSError as e:
        raise InputError(f"cannot read checkpoint {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"checkpoint {path} is not valid JSON: {e}") from e
    return Model.from_dict(content)
