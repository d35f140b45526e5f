"""Persistence images on a fixed birth-persistence grid and their endpoint gradients.

The image uses the pointwise Gaussian form with persistence weight:

    I_v = sum_j (d_j - b_j) g_j(x_v, y_v),
    g_j(x, y) = exp(-((x - b_j)^2 + (y - (d_j - b_j))^2) / (2 sigma^2)) / (2 pi sigma^2).

Grid point v enumerates births in the outer index and persistences in the
inner one, so reshaping the image to (r, r) gives rows of constant birth.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from fl_emph.barcode import Barcode
from fl_emph.errors import InputError
from fl_emph.logging_utils import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ImageGrid:
    resolution: int
    birth_range: Tuple[float, float]
    persistence_range: Tuple[float, float]
    bandwidth: float

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 1:
            raise InputError(f"image resolution must be a positive integer, got {self.resolution}")
        x_lo, x_hi = self.birth_range
        y_lo, y_hi = self.persistence_range
        if not x_lo < x_hi:
            raise InputError(f"empty birth range [{x_lo}, {x_hi}]")
        if not y_lo < y_hi:
            raise InputError(f"empty persistence range [{y_lo}, {y_hi}]")
        if not self.bandwidth > 0:
            raise InputError(f"bandwidth sigma must be positive, got {self.bandwidth}")
        object.__setattr__(self, "resolution", int(self.resolution))
        object.__setattr__(self, "birth_range", (float(x_lo), float(x_hi)))
        object.__setattr__(self, "persistence_range", (float(y_lo), float(y_hi)))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def size(self) -> int:
        return self.resolution**2

    @cached_property
    def points(self) -> np.ndarray:
        """(r^2, 2) array of (birth, persistence) grid points."""
        xs = np.linspace(*self.birth_range, self.resolution)
        ys = np.linspace(*self.persistence_range, self.resolution)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "resolution": self.resolution,
            "birth_range": list(self.birth_range),
            "persistence_range": list(self.persistence_range),
            "bandwidth": self.bandwidth,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ImageGrid":
        return cls(
            resolution=d["resolution"],
            birth_range=tuple(d["birth_range"]),
            persistence_range=tuple(d["persistence_range"]),
            bandwidth=d["bandwidth"],
        )


@dataclass(frozen=True)
class PersistenceImage:
    values: np.ndarray
    grid: ImageGrid

    def as_matrix(self) -> np.ndarray:
        return self.values.reshape(self.grid.resolution, self.grid.resolution)


@dataclass(frozen=True)
class ScaleRecord:
    i_max: float
    i_min: float
    divisor: float

    @property
    def degenerate(self) -> bool:
        return self.i_max == self.i_min


def make_grid(
    barcodes: Iterable[Barcode], resolution: int, bandwidth: float, c2: float = 2.0
) -> ImageGrid:
    """build the frozen image grid from the initial training barcodes

    Args:
        barcodes (Iterable[Barcode]): barcodes at the initial filtration
        resolution (int): side length r of the image
        bandwidth (float): Gaussian sigma
        c2 (float, optional): headroom factor on the largest birth / persistence. Defaults to 2.0.

    Raises:
        InputError: no finite bar with positive persistence

    Returns:
        ImageGrid: grid with ranges [0, c2 * max birth] x [0, c2 * max persistence]
    """
    births, persistences = [], []
    for barcode in barcodes:
        finite = barcode.finite_part()
        births.extend(finite.births)
        persistences.extend(finite.deaths - finite.births)
    if not persistences or max(persistences) <= 0:
        raise InputError("cannot size the image grid: no bar with finite positive persistence")

    persistence_span = c2 * max(persistences)
    birth_span = c2 * max(births)
    if birth_span <= 0:
        # dimension-1 bars are all born at 0
        birth_span = persistence_span
    grid = ImageGrid(resolution, (0.0, birth_span), (0.0, persistence_span), bandwidth)
    logger.info(
        f"image grid {resolution}x{resolution}, birth [0, {birth_span:.4g}], "
        f"persistence [0, {persistence_span:.4g}], sigma {bandwidth}"
    )
    return grid


def _endpoints(barcode: Barcode) -> Tuple[np.ndarray, np.ndarray]:
    births, deaths = barcode.births, barcode.deaths
    if not np.all(np.isfinite(deaths)):
        raise InputError(
            "persistence images need finite bars; drop infinite (dimension-0) bars "
            "with Barcode.finite_part() first"
        )
    return births, deaths


def _gaussians(births: np.ndarray, deaths: np.ndarray, grid: ImageGrid) -> np.ndarray:
    """g_j at every grid point, shape (..., r^2, p) for endpoints of shape (..., p)."""
    points = grid.points
    sigma2 = grid.bandwidth**2
    u = points[:, :1] - births[..., None, :]
    w = points[:, 1:] - (deaths - births)[..., None, :]
    return np.exp(-(u**2 + w**2) / (2.0 * sigma2)) / (2.0 * np.pi * sigma2)


def _gaussian_gradients(
    births: np.ndarray, deaths: np.ndarray, grid: ImageGrid
) -> Tuple[np.ndarray, np.ndarray]:
    g = _gaussians(births, deaths, grid)
    sigma2 = grid.bandwidth**2
    points = grid.points
    x, y = points[:, :1], points[:, 1:]
    persistence = (deaths - births)[..., None, :]
    d_birth = g * (-1.0 + persistence * ((deaths - 2.0 * births)[..., None, :] + (x - y)) / sigma2)
    d_death = g * (1.0 + persistence * (y - persistence) / sigma2)
    return d_birth, d_death


def persistence_image(barcode: Barcode, grid: ImageGrid) -> PersistenceImage:
    births, deaths = _endpoints(barcode)
    if births.size == 0:
        return PersistenceImage(np.zeros(grid.size), grid)
    g = _gaussians(births, deaths, grid)
    return PersistenceImage(g @ (deaths - births), grid)


def _batch_endpoints(births, deaths, valid) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    births, deaths = np.asarray(births, dtype=float), np.asarray(deaths, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    if births.ndim != 2 or births.shape != deaths.shape or births.shape != valid.shape:
        raise InputError(
            f"batched endpoints must be matching (S, p) arrays, got {births.shape}, {deaths.shape}, {valid.shape}"
        )
    if not np.all(np.isfinite(deaths[valid])):
        raise InputError("persistence images need finite bars")
    return np.where(valid, births, 0.0), np.where(valid, deaths, 0.0), valid


def batch_persistence_images(
    births: np.ndarray, deaths: np.ndarray, valid: np.ndarray, grid: ImageGrid
) -> np.ndarray:
    """Images of S barcodes stored as (S, p) endpoint arrays, shape (S, r^2).

    Columns with valid False are ignored.
    """
    births, deaths, valid = _batch_endpoints(births, deaths, valid)
    g = _gaussians(births, deaths, grid)
    return np.einsum("sgp,sp->sg", g, np.where(valid, deaths - births, 0.0))


def minmax_scale(values: np.ndarray) -> Tuple[np.ndarray, ScaleRecord]:
    """Rescale to [0, 1]; a constant input maps to zeros with divisor 1."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InputError("cannot min-max scale an empty vector")
    i_max, i_min = float(values.max()), float(values.min())
    divisor = i_max - i_min if i_max > i_min else 1.0
    record = ScaleRecord(i_max=i_max, i_min=i_min, divisor=divisor)
    return apply_scale(values, record), record


def apply_scale(values: np.ndarray, record: ScaleRecord) -> np.ndarray:
    return (np.asarray(values, dtype=float) - record.i_min) / record.divisor


def batch_minmax_scale(images: np.ndarray) -> Tuple[np.ndarray, List[ScaleRecord]]:
    """minmax_scale applied to every row of an (S, r^2) array."""
    images = np.asarray(images, dtype=float)
    if images.ndim != 2 or images.shape[1] == 0:
        raise InputError(f"cannot min-max scale images of shape {images.shape}")
    i_max, i_min = images.max(axis=1), images.min(axis=1)
    divisor = np.where(i_max > i_min, i_max - i_min, 1.0)
    records = [ScaleRecord(float(hi), float(lo), float(d)) for hi, lo, d in zip(i_max, i_min, divisor)]
    return (images - i_min[:, None]) / divisor[:, None], records


def batch_apply_scale(images: np.ndarray, records: Sequence[ScaleRecord]) -> np.ndarray:
    images = np.asarray(images, dtype=float)
    if len(records) != images.shape[0]:
        raise InputError(f"{len(records)} scale records for {images.shape[0]} images")
    i_min = np.array([record.i_min for record in records])
    divisor = np.array([record.divisor for record in records])
    return (images - i_min[:, None]) / divisor[:, None]


def image_endpoint_gradients(barcode: Barcode, grid: ImageGrid) -> Tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of every pixel with respect to every bar endpoint.

    Returns (dI/db, dI/dd), both (r^2, p). Each column only involves the
    Gaussian of its own bar.
    """
    births, deaths = _endpoints(barcode)
    if births.size == 0:
        return np.zeros((grid.size, 0)), np.zeros((grid.size, 0))
    return _gaussian_gradients(births, deaths, grid)


def batch_image_endpoint_gradients(
    births: np.ndarray, deaths: np.ndarray, valid: np.ndarray, grid: ImageGrid
) -> Tuple[np.ndarray, np.ndarray]:
    """image_endpoint_gradients for (S, p) endpoint arrays, each (S, r^2, p).

    Columns with valid False are zero.
    """
    births, deaths, valid = _batch_endpoints(births, deaths, valid)
    d_birth, d_death = _gaussian_gradients(births, deaths, grid)
    mask = valid[:, None, :]
    return np.where(mask, d_birth, 0.0), np.where(mask, d_death, 0.0)
