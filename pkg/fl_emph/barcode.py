"""Exact barcodes of the Liouville torus along a filtration ray or curve.

For the product of circles r_1 S^1 x ... x r_N S^1 with the max metric, the
barcode in dimension n along a monotone path through the N-parameter space is
the set of intersections J_1 ^ ... ^ J_N over compositions (n_1, ..., n_N) of
n into zero-or-odd parts, where the mode-L interval is

    n_L = 0        (0, inf)
    n_L = 2k + 1   (c_L^-1(2 r_L sin(pi k/(2k+1))), c_L^-1(2 r_L sin(pi (k+1)/(2k+3)))]

and c_L is the L-th component of the path. A ray with direction a has
c_L(t) = sqrt(N) t a_L/|a|; a piecewise-linear curve of R segments over
[0, Q] moves with speed sqrt(N) along rho^s = a^s/|a^s| on [(s-1)Q/R, sQ/R]
and keeps the last direction past Q.

Mode positions L in this module are 0-based indices into the radii vector,
not Fourier mode numbers.
"""
import functools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from fl_emph.errors import DomainError, InputError
from fl_emph.spectral import LiouvilleRadii

Composition = Tuple[int, ...]
RadiiLike = Union[LiouvilleRadii, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Bar:
    birth: float
    death: float
    dimension: int


@dataclass(frozen=True)
class BarOrigin:
    """Where a bar's endpoints come from.

    birth_argmax / death_argmin are the mode positions attaining the max of
    the births and the min of the deaths (smallest position on ties). The
    segment tuples hold s_{b,L} and s_{d,L} per mode (1-based; 0 for modes
    with n_L = 0, 1 everywhere for a ray).
    """

    composition: Composition
    birth_argmax: int
    death_argmin: int
    birth_segments: Tuple[int, ...]
    death_segments: Tuple[int, ...]


@dataclass(frozen=True)
class Barcode:
    bars: Tuple[Bar, ...]
    dimension: int

    def __len__(self):
        return len(self.bars)

    def __iter__(self):
        return iter(self.bars)

    def __getitem__(self, j):
        return self.bars[j]

    @property
    def births(self) -> np.ndarray:
        return np.array([bar.birth for bar in self.bars], dtype=float)

    @property
    def deaths(self) -> np.ndarray:
        return np.array([bar.death for bar in self.bars], dtype=float)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.deaths)))

    def finite_part(self) -> "Barcode":
        return Barcode(
            bars=tuple(bar for bar in self.bars if np.isfinite(bar.death)),
            dimension=self.dimension,
        )

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[float, float]], dimension: int = 1) -> "Barcode":
        return cls(
            bars=tuple(Bar(float(b), float(d), dimension) for b, d in pairs),
            dimension=dimension,
        )


@dataclass(frozen=True, eq=False)
class FiltrationCurve:
    """Piecewise-linear monotone curve given by R positive direction vectors.

    R = 1 is the ray through the origin with direction directions[0]; the
    horizon Q then only fixes the (unused) breakpoint.
    """

    directions: np.ndarray
    horizon: float = 1.0
    _rho: np.ndarray = field(init=False, repr=False)
    _breakpoints: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        directions = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if directions.ndim != 2 or directions.size == 0:
            raise InputError(f"directions must be an (R, N) array, got shape {directions.shape}")
        check_direction(directions)
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise DomainError(f"curve horizon Q must be positive, got {self.horizon}")
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "horizon", float(self.horizon))
        rho = directions / np.linalg.norm(directions, axis=1, keepdims=True)
        step = np.sqrt(directions.shape[1]) * self.horizon / directions.shape[0]
        object.__setattr__(self, "_rho", rho)
        object.__setattr__(
            self, "_breakpoints", np.vstack([np.zeros(rho.shape[1]), step * np.cumsum(rho, axis=0)])
        )

    @classmethod
    def ray(cls, direction: Sequence[float], horizon: float = 1.0) -> "FiltrationCurve":
        return cls(np.asarray(direction, dtype=float)[None, :], horizon)

    @classmethod
    def diagonal(cls, N: int, R: int = 1, horizon: float = 1.0) -> "FiltrationCurve":
        return cls(np.ones((R, N)), horizon)

    @property
    def R(self) -> int:
        return self.directions.shape[0]

    @property
    def N(self) -> int:
        return self.directions.shape[1]

    @property
    def rho(self) -> np.ndarray:
        return self._rho

    def breakpoints(self) -> np.ndarray:
        """Curve values c~(sQ/R) for s = 0..R, shape (R + 1, N)."""
        return self._breakpoints

    def inverse(self, L: int, value: float) -> Tuple[float, int]:
        """Time t with c~_L(t) = value, and the 1-based segment it falls in.

        The segment is the smallest s with c~_L((s-1)Q/R) <= value <= c~_L(sQ/R);
        values beyond c~_L(Q) use the last segment extended.
        """
        times, segments = self.inverse_array(L, np.array([value], dtype=float))
        return float(times[0]), int(segments[0])

    def inverse_array(self, L: int, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """inverse() for an array of values of component L."""
        values = np.asarray(values, dtype=float)
        C = self._breakpoints
        s = np.minimum(np.searchsorted(C[1:, L], values, side="left") + 1, self.R)
        times = (s - 1) * self.horizon / self.R + (values - C[s - 1, L]) / (
            np.sqrt(self.N) * self._rho[s - 1, L]
        )
        return times, s

    def __call__(self, t: float) -> np.ndarray:
        C = self.breakpoints()
        step = self.horizon / self.R
        s = min(max(int(np.ceil(t / step)), 1), self.R)
        return C[s - 1] + np.sqrt(self.N) * (t - (s - 1) * step) * self.rho[s - 1]


def check_direction(a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise DomainError(f"direction components must be strictly positive, got {np.asarray(a).tolist()}")


def as_radii(radii: RadiiLike) -> np.ndarray:
    if isinstance(radii, LiouvilleRadii):
        values = radii.radii
    else:
        values = np.asarray(radii, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise InputError(f"radii must be a nonempty vector, got shape {values.shape}")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InputError(f"radii must be finite and nonnegative, got {values.tolist()}")
    return values


def check_dimension(n: int) -> int:
    if int(n) != n or n < 0:
        raise InputError(f"homology dimension must be a nonnegative integer, got {n}")
    return int(n)


def _composition_order(composition: Composition) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    parts = sorted((c for c in composition if c), reverse=True)
    return tuple(-p for p in parts), tuple(-c for c in composition)


def enumerate_compositions(N: int, n: int) -> List[Composition]:
    """All (n_1, ..., n_N) with zero-or-odd parts summing to n.

    Ordered by the odd partition of n they realize (largest parts first) and
    then by placement in decreasing lexicographic order, e.g. N=3, n=3 gives
    (3,0,0), (0,3,0), (0,0,3), (1,1,1).
    """
    if N < 1:
        raise InputError(f"number of modes must be positive, got {N}")
    return list(_compositions(int(N), check_dimension(n)))


@functools.lru_cache(maxsize=None)
def _compositions(N: int, n: int) -> Tuple[Composition, ...]:
    def extend(prefix: Tuple[int, ...], remaining: int):
        if len(prefix) == N:
            if remaining == 0:
                yield prefix
            return
        for part in range(remaining + 1):
            if part == 0 or part % 2 == 1:
                yield from extend(prefix + (part,), remaining - part)

    return tuple(sorted(set(extend((), n)), key=_composition_order))


def circle_interval(r: float, n_L: int) -> Optional[Tuple[float, float]]:
    """Bar of r*S^1 in dimension n_L, in unscaled filtration units.

    Returns (0, inf) for n_L = 0, None for the empty interval of a degenerate
    circle (r = 0, n_L odd).
    """
    if int(n_L) != n_L or n_L < 0 or (n_L > 0 and n_L % 2 == 0):
        raise DomainError(f"circle dimension must be 0 or odd, got {n_L}")
    if r < 0:
        raise DomainError(f"circle radius must be nonnegative, got {r}")
    if n_L == 0:
        return 0.0, np.inf
    if r == 0:
        return None
    k = (n_L - 1) // 2
    return (
        2.0 * r * np.sin(np.pi * k / (2 * k + 1)),
        2.0 * r * np.sin(np.pi * (k + 1) / (2 * k + 3)),
    )


@dataclass
class _RawBar:
    composition: Composition
    index: int
    birth: float
    death: float
    origin: BarOrigin


def _raw_bars(
    radii: np.ndarray,
    n: int,
    inverse: Callable[[int, float], Tuple[float, int]],
) -> List[_RawBar]:
    """Intersections for every composition, empty ones included."""
    N = radii.size
    raw = []
    for index, composition in enumerate(enumerate_compositions(N, n)):
        births = np.zeros(N)
        deaths = np.full(N, np.inf)
        birth_segments = [0] * N
        death_segments = [0] * N
        degenerate = False
        for L, n_L in enumerate(composition):
            interval = circle_interval(radii[L], n_L)
            if interval is None:
                degenerate = True
                break
            if n_L == 0:
                continue
            births[L], birth_segments[L] = inverse(L, interval[0])
            deaths[L], death_segments[L] = inverse(L, interval[1])
        if degenerate:
            continue
        birth_argmax = int(np.argmax(births))
        death_argmin = int(np.argmin(deaths))
        raw.append(
            _RawBar(
                composition=composition,
                index=index,
                birth=float(births[birth_argmax]),
                death=float(deaths[death_argmin]),
                origin=BarOrigin(
                    composition=composition,
                    birth_argmax=birth_argmax,
                    death_argmin=death_argmin,
                    birth_segments=tuple(birth_segments),
                    death_segments=tuple(death_segments),
                ),
            )
        )
    return raw


def _assemble(raw: List[_RawBar], n: int) -> Tuple[Barcode, List[BarOrigin]]:
    kept = sorted(
        (bar for bar in raw if bar.birth < bar.death),
        key=lambda bar: (bar.birth, bar.death, bar.index),
    )
    barcode = Barcode(bars=tuple(Bar(bar.birth, bar.death, n) for bar in kept), dimension=n)
    return barcode, [bar.origin for bar in kept]


def ray_barcode(
    radii: RadiiLike, a: Sequence[float], n: int
) -> Tuple[Barcode, List[BarOrigin]]:
    """Barcode along the ray with direction a, plus each bar's origin."""
    radii = as_radii(radii)
    n = check_dimension(n)
    a = np.asarray(a, dtype=float)
    if a.shape != radii.shape:
        raise InputError(f"direction has {a.size} components but there are {radii.size} modes")
    check_direction(a)
    scale = np.sqrt(radii.size) * (a / np.linalg.norm(a))

    def inverse(L, value):
        return float(value / scale[L]), 1

    return _assemble(_raw_bars(radii, n, inverse), n)


def curve_barcode(
    radii: RadiiLike, curve: FiltrationCurve, n: int
) -> Tuple[Barcode, List[BarOrigin]]:
    """Barcode along a piecewise-linear filtration curve, plus bar origins."""
    radii = as_radii(radii)
    n = check_dimension(n)
    if curve.N != radii.size:
        raise InputError(f"curve has {curve.N} components but there are {radii.size} modes")
    return _assemble(_raw_bars(radii, n, curve.inverse), n)


@dataclass(frozen=True, eq=False)
class BarcodeBatch:
    """Barcodes of S series side by side, one column per composition.

    Columns follow enumerate_compositions(N, n). valid marks the columns that
    hold a bar; the others carry birth = death = 0. birth_mode / death_mode
    are the extreme mode positions, the thresholds the unscaled circle values
    behind each endpoint (0 for a mode with n_L = 0), and the segment arrays
    hold s_{b,L} / s_{d,L} per mode, shape (S, P, N).
    """

    compositions: Tuple[Composition, ...]
    dimension: int
    births: np.ndarray
    deaths: np.ndarray
    valid: np.ndarray
    birth_mode: np.ndarray
    death_mode: np.ndarray
    birth_threshold: np.ndarray
    death_threshold: np.ndarray
    birth_segments: np.ndarray
    death_segments: np.ndarray

    def __len__(self):
        return self.births.shape[0]

    def barcode(self, i: int) -> Tuple[Barcode, List[BarOrigin]]:
        """Series i as curve_barcode returns it."""
        raw = [
            _RawBar(
                composition=composition,
                index=p,
                birth=float(self.births[i, p]),
                death=float(self.deaths[i, p]),
                origin=BarOrigin(
                    composition=composition,
                    birth_argmax=int(self.birth_mode[i, p]),
                    death_argmin=int(self.death_mode[i, p]),
                    birth_segments=tuple(int(s) for s in self.birth_segments[i, p]),
                    death_segments=tuple(int(s) for s in self.death_segments[i, p]),
                ),
            )
            for p, composition in enumerate(self.compositions)
            if self.valid[i, p]
        ]
        return _assemble(raw, self.dimension)


def _take(values: np.ndarray, index: np.ndarray) -> np.ndarray:
    return np.take_along_axis(values, index[..., None], axis=-1)[..., 0]


def batch_curve_barcode(radii: np.ndarray, curve: FiltrationCurve, n: int) -> BarcodeBatch:
    """curve_barcode for every row of an (S, N) radii array at once."""
    radii = np.asarray(radii, dtype=float)
    n = check_dimension(n)
    if radii.ndim != 2 or radii.shape[1] != curve.N:
        raise InputError(f"radii must have shape (S, {curve.N}), got {radii.shape}")
    if np.any(radii < 0) or not np.all(np.isfinite(radii)):
        raise InputError("radii must be finite and nonnegative")

    compositions = _compositions(curve.N, n)
    shape = (radii.shape[0], len(compositions), curve.N)
    births, deaths = np.zeros(shape), np.full(shape, np.inf)
    lower, upper = np.zeros(shape), np.zeros(shape)
    birth_segments, death_segments = np.zeros(shape, dtype=int), np.zeros(shape, dtype=int)
    degenerate = np.zeros(shape[:2], dtype=bool)
    for p, composition in enumerate(compositions):
        for L, n_L in enumerate(composition):
            if n_L == 0:
                continue
            k = (n_L - 1) // 2
            r = radii[:, L]
            degenerate[:, p] |= r == 0
            lower[:, p, L] = 2.0 * r * np.sin(np.pi * k / (2 * k + 1))
            upper[:, p, L] = 2.0 * r * np.sin(np.pi * (k + 1) / (2 * k + 3))
            births[:, p, L], birth_segments[:, p, L] = curve.inverse_array(L, lower[:, p, L])
            deaths[:, p, L], death_segments[:, p, L] = curve.inverse_array(L, upper[:, p, L])

    birth_mode = births.argmax(axis=-1)
    death_mode = deaths.argmin(axis=-1)
    birth, death = _take(births, birth_mode), _take(deaths, death_mode)
    valid = ~degenerate & (birth < death)
    return BarcodeBatch(
        compositions=compositions,
        dimension=n,
        births=np.where(valid, birth, 0.0),
        deaths=np.where(valid, death, 0.0),
        valid=valid,
        birth_mode=birth_mode,
        death_mode=death_mode,
        birth_threshold=_take(lower, birth_mode),
        death_threshold=_take(upper, death_mode),
        birth_segments=birth_segments,
        death_segments=death_segments,
    )


@dataclass
class RefinementReport:
    segment_counts: List[int]
    errors: List[float]
    limit: Dict[Composition, Tuple[float, float]] = field(repr=False)

    @property
    def non_increasing(self) -> bool:
        return all(b <= a for a, b in zip(self.errors, self.errors[1:]))


class _SampledCurve:
    """Dense curve table parameterized by arc length (linear between samples)."""

    def __init__(self, values: np.ndarray):
        self.values = values
        self.arclength = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(values, axis=0), axis=1))])

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    def point(self, s: float) -> np.ndarray:
        return np.array([np.interp(s, self.arclength, column) for column in self.values.T])

    def inverse(self, L: int, value: float) -> float:
        """Arc length at which component L reaches value, extended linearly past the end."""
        column = self.values[:, L]
        if value <= column[-1]:
            return float(np.interp(value, column, self.arclength))
        slope = (column[-1] - column[-2]) / (self.arclength[-1] - self.arclength[-2])
        return float(self.arclength[-1] + (value - column[-1]) / slope)

    def _chord_end(self, start: float, chord: float) -> Optional[float]:
        """Arc length of the point at distance chord from point(start), None past the end."""
        origin = self.point(start)
        if np.linalg.norm(self.values[-1] - origin) < chord:
            return None
        return brentq(lambda s: np.linalg.norm(self.point(s) - origin) - chord, start, self.length)

    def _shortfall(self, chord: float, R: int) -> float:
        # < 0 while R chords stop short of the end, > 0 once they run past it
        s = 0.0
        for k in range(R):
            end = self._chord_end(s, chord)
            if end is None:
                return (R - k) * chord - np.linalg.norm(self.values[-1] - self.point(s))
            s = end
        return -float(np.linalg.norm(self.values[-1] - self.point(s)))

    def equal_chord_knots(self, R: int) -> np.ndarray:
        """R + 1 points on the curve, first and last at its ends, with equal consecutive distances."""
        lo = np.linalg.norm(self.values[-1] - self.values[0]) / R
        hi = self.length / R
        if self._shortfall(lo, R) >= 0:
            chord = lo
        elif self._shortfall(hi, R) <= 0:
            chord = hi
        else:
            chord = brentq(self._shortfall, lo, hi, args=(R,), xtol=1e-14)
        knots, s = [self.values[0]], 0.0
        for _ in range(R - 1):
            end = self._chord_end(s, chord)
            s = self.length if end is None else end
            knots.append(self.point(s))
        knots.append(self.values[-1])
        return np.array(knots)


def interpolating_curve(curve_values: np.ndarray, R: int) -> FiltrationCurve:
    """R-segment FiltrationCurve whose breakpoints lie on the sampled curve.

    The knots are equally spaced in chord length l, so every segment of the
    result has Euclidean length sqrt(N) Q/R = l and c~(sQ/R) is the s-th knot.
    """
    if R < 1:
        raise InputError(f"segment counts must be positive, got {R}")
    values = np.asarray(curve_values, dtype=float)
    knots = _SampledCurve(values).equal_chord_knots(R)
    chords = np.diff(knots, axis=0)
    chord = float(np.linalg.norm(chords, axis=1).mean())
    return FiltrationCurve(chords, R * chord / np.sqrt(values.shape[1]))


def refine_check(
    radii: RadiiLike,
    times: Sequence[float],
    curve_values: np.ndarray,
    segment_counts: Sequence[int],
    n: int = 1,
) -> RefinementReport:
    """Distance between piecewise-linear interpolants and a smooth curve's barcode.

    The smooth curve is a dense table (times, curve_values) starting at the
    origin with strictly increasing components. Its limit barcode uses the arc
    length parameterization divided by sqrt(N), the limit of the equal-chord
    interpolants built by interpolating_curve; for each R the largest absolute
    difference between interpolant and limit bar endpoints is reported.
    """
    radii = as_radii(radii)
    n = check_dimension(n)
    times = np.asarray(times, dtype=float)
    values = np.asarray(curve_values, dtype=float)
    if values.ndim != 2 or values.shape != (times.size, radii.size):
        raise InputError(
            f"curve table must have shape ({times.size}, {radii.size}), got {values.shape}"
        )
    if times.size < 3 or np.any(np.diff(times) <= 0):
        raise InputError("curve sample times must be strictly increasing (at least 3 samples)")
    if not np.allclose(values[0], 0.0):
        raise InputError(f"sampled curve must start at the origin, got {values[0].tolist()}")
    if np.any(np.diff(values, axis=0) <= 0):
        raise InputError("sampled curve is not strictly increasing in every component")

    N = radii.size
    sampled = _SampledCurve(values)

    def limit_inverse(L, value):
        return sampled.inverse(L, value) / np.sqrt(N), 0

    limit = {
        bar.composition: (bar.birth, bar.death)
        for bar in _raw_bars(radii, n, limit_inverse)
    }

    errors = []
    for R in segment_counts:
        curve = interpolating_curve(values, R)
        error = 0.0
        for bar in _raw_bars(radii, n, curve.inverse):
            birth, death = limit[bar.composition]
            error = max(error, abs(bar.birth - birth))
            if np.isfinite(death):
                error = max(error, abs(bar.death - death))
        errors.append(error)
    return RefinementReport(segment_counts=list(segment_counts), errors=errors, limit=limit)
