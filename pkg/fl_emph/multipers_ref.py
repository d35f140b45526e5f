"""Two-parameter persistence image and landscape from supplied fibered barcodes.

Both vectorizations evaluate on the n x n grid
g_{i,j} = (a + i (b-a)/(n-1), c + j (d-c)/(n-1)), flattened with i as the outer
index. Vineyard summands and per-ray barcodes are inputs, read from a JSON
fixture; nothing here computes two-parameter persistence itself.

Fixture layout::

    {
      "grid": {"bounds": [a, b, c, d], "resolution": n, "ray_count": k,
               "bandwidth": sigma, "q": q},
      "rays": [{"id": 0, "origin": [x, y], "direction": [u, v]}, ...],
      "summands": [[[ray_id, birth, death], ...], ...],
      "fibered_barcodes": {"-1": [[birth, death, multiplicity], ...], ...}
    }

Deaths may be null for infinite bars. Births and deaths are Euclidean
distances from the ray origin.
"""
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull

from fl_emph.errors import InputError
from fl_emph.utils import Pathy, path_or_cloudpath


@dataclass(frozen=True)
class TwoParamGrid:
    a: float
    b: float
    c: float
    d: float
    resolution: int
    ray_count: int = 3
    bandwidth: float = 1.0
    q: float = 1.0

    def __post_init__(self):
        if not (self.a < self.b and self.c < self.d):
            raise InputError(f"grid rectangle needs a < b and c < d, got {(self.a, self.b, self.c, self.d)}")
        if self.resolution < 2:
            raise InputError(f"grid resolution must be >= 2, got {self.resolution}")
        if self.bandwidth <= 0:
            raise InputError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.ray_count < 1:
            raise InputError(f"ray_count must be >= 1, got {self.ray_count}")

    @property
    def area(self) -> float:
        return (self.b - self.a) * (self.d - self.c)

    @property
    def points(self) -> np.ndarray:
        xs = np.linspace(self.a, self.b, self.resolution)
        ys = np.linspace(self.c, self.d, self.resolution)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def clip_ray(self, origin: np.ndarray, direction: np.ndarray) -> float:
        """Parameter at which origin + t * direction leaves the rectangle."""
        exits = [
            (upper - o) / v for o, v, upper in zip(origin, direction, (self.b, self.d)) if v > 0
        ]
        return max(min(exits), 0.0) if exits else 0.0


@dataclass(frozen=True)
class Ray:
    id: int
    origin: np.ndarray
    direction: np.ndarray

    def point(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class VineyardSummand:
    bars: Tuple[Tuple[int, float, float], ...]


@dataclass(frozen=True)
class FiberedBarcodeFixture:
    grid: TwoParamGrid
    rays: Dict[int, Ray]
    summands: Tuple[VineyardSummand, ...]
    barcodes: Dict[int, Tuple[Tuple[float, float, int], ...]]


def image_rays(grid: TwoParamGrid) -> List[Ray]:
    """Diagonal rays from the bottom and left edges, spaced delta = (width + height) / ray_count."""
    delta = ((grid.b - grid.a) + (grid.d - grid.c)) / grid.ray_count
    unit = np.full(2, np.sqrt(2.0) / 2.0)
    half = grid.ray_count // 2
    origins = [(grid.a + i * delta, grid.c) for i in range(half + 1)]
    origins += [(grid.a, grid.c + j * delta) for j in range(1, half + 1)]
    return [Ray(k, np.array(o, dtype=float), unit) for k, o in enumerate(origins)]


def landscape_ray(grid: TwoParamGrid, i: int) -> Ray:
    """Ray l_i with direction (1, 1); i ranges over -(n-1)..(n-1)."""
    n = grid.resolution
    if abs(i) > n - 1:
        raise InputError(f"landscape ray index {i} outside -{n - 1}..{n - 1}")
    if i <= 0:
        origin = (grid.a - i * (grid.b - grid.a) / (n - 1), grid.c)
    else:
        origin = (grid.a, grid.c + i * (grid.d - grid.c) / (n - 1))
    return Ray(i, np.array(origin, dtype=float), np.ones(2))


def convex_hull_area(points: Sequence[Sequence[float]]) -> float:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if points.shape[0] < 3:
        return 0.0
    if np.linalg.matrix_rank(points - points.mean(axis=0), tol=1e-12) < 2:
        return 0.0
    # for 2-d input, volume is the enclosed area
    return float(ConvexHull(points).volume)


def _segment_distance(p: np.ndarray, start: np.ndarray, end: np.ndarray) -> float:
    span = end - start
    length2 = float(span @ span)
    if length2 == 0:
        return float(np.linalg.norm(p - start))
    t = np.clip((p - start) @ span / length2, 0.0, 1.0)
    return float(np.linalg.norm(p - (start + t * span)))


def _bar_segment(
    bar: Tuple[int, float, float], rays: Dict[int, Ray], grid: TwoParamGrid
) -> Tuple[Ray, np.ndarray, np.ndarray]:
    ray_id, birth, death = bar
    if ray_id not in rays:
        raise InputError(f"summand bar references unknown ray {ray_id}")
    ray = rays[ray_id]
    speed = np.linalg.norm(ray.direction)
    if death is None or not np.isfinite(death):
        death = grid.clip_ray(ray.origin, ray.direction) * speed
    if death < birth:
        raise InputError(f"summand bar on ray {ray_id} has death {death} before birth {birth}")
    return ray, ray.point(birth / speed), ray.point(death / speed)


def two_param_persistence_image(
    summands: Sequence[VineyardSummand], rays: Dict[int, Ray], grid: TwoParamGrid
) -> np.ndarray:
    """n^2 vector: sum over summands of w1 * w2(l*) * exp(-dist^2 / sigma^2).

    dist is the distance from the grid point to the nearest bar of the summand
    (infinite bars clipped to the rectangle), l* that bar's ray,
    w1 = (hull area / rectangle area)^q and w2 the smaller direction component.
    """
    values = np.zeros(grid.resolution**2)
    for summand in summands:
        if not summand.bars:
            raise InputError("vineyard summand without bars")
        segments = [_bar_segment(bar, rays, grid) for bar in summand.bars]
        endpoints = np.array([p for _, start, end in segments for p in (start, end)])
        w1 = (convex_hull_area(endpoints) / grid.area) ** grid.q
        if w1 == 0:
            continue
        for v, g in enumerate(grid.points):
            distances = [_segment_distance(g, start, end) for _, start, end in segments]
            nearest = int(np.argmin(distances))
            w2 = float(segments[nearest][0].direction.min())
            values[v] += w1 * w2 * np.exp(-distances[nearest] ** 2 / grid.bandwidth**2)
    return values


def two_param_persistence_landscape(fixture: FiberedBarcodeFixture, k: int) -> np.ndarray:
    """n^2 vector of k-th largest tent values over the bars of ray l_{j-i}."""
    if k < 1:
        raise InputError(f"landscape depth k must be >= 1, got {k}")
    grid = fixture.grid
    n = grid.resolution
    values = np.zeros(n * n)
    for v, g in enumerate(grid.points):
        i, j = divmod(v, n)
        index = j - i
        if index not in fixture.barcodes:
            raise InputError(f"fixture has no barcode for landscape ray {index}")
        t = float(np.linalg.norm(g - landscape_ray(grid, index).origin))
        tents = []
        for birth, death, multiplicity in fixture.barcodes[index]:
            tent = max(0.0, min((t - birth) / np.sqrt(2.0), (death - t) / np.sqrt(2.0)))
            tents.extend([tent] * multiplicity)
        tents.sort(reverse=True)
        values[v] = tents[k - 1] if len(tents) >= k else 0.0
    return values


def _death(value: Optional[float]) -> float:
    return np.inf if value is None else float(value)


def load_fixture(path: Pathy) -> FiberedBarcodeFixture:
    path = path_or_cloudpath(path)
    try:
        with path.open("r") as f:
            content = json.load(f)
        g = content["grid"]
        grid = TwoParamGrid(
            *g["bounds"],
            resolution=g["resolution"],
            ray_count=g.get("ray_count", 3),
            bandwidth=g.get("bandwidth", 1.0),
            q=g.get("q", 1.0),
        )
        if "rays" in content:
            rays = {
                int(r["id"]): Ray(int(r["id"]), np.asarray(r["origin"], float), np.asarray(r["direction"], float))
                for r in content["rays"]
            }
        else:
            rays = {ray.id: ray for ray in image_rays(grid)}
        summands = tuple(
            VineyardSummand(tuple((int(r), float(b), _death(d)) for r, b, d in bars))
            for bars in content.get("summands", [])
        )
        barcodes = {
            int(key): tuple((float(b), _death(d), int(m)) for b, d, m in bars)
            for key, bars in content.get("fibered_barcodes", {}).items()
        }
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed multiparameter fixture {path}: {e!r}") from e
    for key in barcodes:
        if abs(key) > grid.resolution - 1:
            raise InputError(f"fixture barcode for ray {key} outside -{grid.resolution - 1}..{grid.resolution - 1}")
    return FiberedBarcodeFixture(grid, rays, summands, barcodes)
