import itertools

import numpy as np
import pytest

from fl_emph.barcode import (
    Barcode,
    FiltrationCurve,
    batch_curve_barcode,
    circle_interval,
    curve_barcode,
    enumerate_compositions,
    interpolating_curve,
    ray_barcode,
    refine_check,
)
from fl_emph.errors import DomainError, InputError

SQRT3 = np.sqrt(3.0)


def _pairs(barcode):
    return [(bar.birth, bar.death) for bar in barcode]


def assert_pairs(actual, expected, rtol=1e-7):
    np.testing.assert_allclose(
        np.asarray(actual, dtype=float).reshape(-1, 2),
        np.asarray(expected, dtype=float).reshape(-1, 2),
        rtol=rtol,
        atol=1e-12,
    )


def _brute_force_pairs(radii, a, n):
    """Every zero-or-odd composition, intervals intersected directly."""
    N = len(radii)
    speed = np.sqrt(N) * np.asarray(a) / np.linalg.norm(a)
    pairs = []
    for composition in itertools.product(range(n + 1), repeat=N):
        if sum(composition) != n or any(c and c % 2 == 0 for c in composition):
            continue
        birth, death = 0.0, np.inf
        for L, c in enumerate(composition):
            if c == 0:
                continue
            k = (c - 1) // 2
            lo = 2 * radii[L] * np.sin(np.pi * k / (2 * k + 1)) / speed[L]
            hi = 2 * radii[L] * np.sin(np.pi * (k + 1) / (2 * k + 3)) / speed[L]
            birth, death = max(birth, lo), min(death, hi)
        if birth < death:
            pairs.append((birth, death))
    return sorted(pairs)


def test_compositions_in_documented_order():
    assert enumerate_compositions(2, 1) == [(1, 0), (0, 1)]
    assert enumerate_compositions(2, 2) == [(1, 1)]
    assert enumerate_compositions(3, 3) == [(3, 0, 0), (0, 3, 0), (0, 0, 3), (1, 1, 1)]
    assert enumerate_compositions(3, 0) == [(0, 0, 0)]
    assert enumerate_compositions(1, 2) == []


def test_compositions_reject_bad_arguments():
    with pytest.raises(InputError):
        enumerate_compositions(0, 1)
    with pytest.raises(InputError):
        enumerate_compositions(2, -1)


def test_circle_interval_values():
    assert circle_interval(1.0, 0) == (0.0, np.inf)
    lo, hi = circle_interval(1.0, 1)
    assert lo == 0.0
    assert hi == pytest.approx(SQRT3)
    lo, hi = circle_interval(1.0, 3)
    assert lo == pytest.approx(SQRT3)
    assert hi == pytest.approx(1.9021, abs=1e-4)
    assert circle_interval(0.0, 1) is None
    with pytest.raises(DomainError):
        circle_interval(1.0, 2)


def test_diagonal_ray_dimension_one():
    barcode, origins = ray_barcode([1.0, 0.5], [1.0, 1.0], 1)
    assert_pairs(_pairs(barcode), [(0.0, SQRT3 / 2), (0.0, SQRT3)])
    assert [origin.composition for origin in origins] == [(0, 1), (1, 0)]
    assert origins[0].death_argmin == 1
    assert origins[1].death_argmin == 0


def test_dimension_two_single_bar():
    barcode, _ = ray_barcode([1.0, 0.5], [1.0, 1.0], 2)
    assert_pairs(_pairs(barcode), [(0.0, SQRT3 / 2)])


def test_tilted_ray():
    barcode, _ = ray_barcode([1.0, 1.0], [2.0, 1.0], 1)
    assert barcode.deaths == pytest.approx([1.3693, 2.7386], abs=1e-4)


def test_dimension_zero_is_one_infinite_bar():
    barcode, _ = ray_barcode([1.0, 2.0, 0.5], [1.0, 2.0, 3.0], 0)
    assert _pairs(barcode) == [(0.0, np.inf)]
    assert not barcode.is_finite()
    assert len(barcode.finite_part()) == 0


def test_zero_radius_contributes_no_bar():
    barcode, origins = ray_barcode([0.0, 1.0], [1.0, 1.0], 1)
    assert len(barcode) == 1
    assert origins[0].composition == (0, 1)


def test_scaling_the_direction_changes_nothing():
    radii = [1.3, 0.4, 0.9]
    a = np.array([1.0, 2.0, 0.5])
    assert_pairs(_pairs(ray_barcode(radii, a, 3)[0]), _pairs(ray_barcode(radii, 3 * a, 3)[0]))


def test_dimension_one_death_formula(rng):
    radii = rng.uniform(0.1, 2.0, 4)
    a = rng.uniform(0.2, 1.0, 4)
    barcode, origins = ray_barcode(radii, a, 1)
    rho = a / np.linalg.norm(a)
    assert len(barcode) == 4
    for bar, origin in zip(barcode, origins):
        L = origin.composition.index(1)
        assert bar.birth == 0.0
        assert bar.death == pytest.approx(np.sqrt(3.0 / 4) * radii[L] / rho[L])


@pytest.mark.parametrize("N,n", [(1, 1), (1, 3), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)])
def test_matches_brute_force(N, n):
    rng = np.random.default_rng(100 * N + n)
    for _ in range(5):
        radii = rng.uniform(0.1, 2.0, N)
        a = rng.uniform(0.1, 1.0, N)
        barcode, _ = ray_barcode(radii, a, n)
        expected = _brute_force_pairs(radii, a, n)
        assert len(barcode) == len(expected)
        assert_pairs(sorted(_pairs(barcode)), expected, rtol=1e-12)


def test_bars_are_sorted(rng):
    barcode, _ = ray_barcode(rng.uniform(0.1, 2.0, 3), rng.uniform(0.1, 1.0, 3), 3)
    keys = _pairs(barcode)
    assert keys == sorted(keys)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        ray_barcode([1.0, 1.0], [1.0, 0.0], 1)
    with pytest.raises(InputError):
        ray_barcode([1.0, 1.0], [1.0, 1.0], -1)
    with pytest.raises(InputError):
        ray_barcode([1.0, -1.0], [1.0, 1.0], 1)
    with pytest.raises(InputError):
        ray_barcode([1.0, 1.0], [1.0, 1.0, 1.0], 1)


def test_single_segment_curve_is_the_ray(rng):
    radii = rng.uniform(0.1, 2.0, 3)
    a = rng.uniform(0.1, 1.0, 3)
    for n in (1, 2, 3):
        ray, ray_origins = ray_barcode(radii, a, n)
        curve, curve_origins = curve_barcode(radii, FiltrationCurve.ray(a, horizon=2.5), n)
        assert_pairs(_pairs(curve), _pairs(ray), rtol=1e-12)
        assert [o.composition for o in curve_origins] == [o.composition for o in ray_origins]


def test_two_segment_curve():
    curve = FiltrationCurve(np.array([[1.0, 1.0], [3.0, 1.0]]), horizon=2.0)
    np.testing.assert_allclose(curve.breakpoints()[1], [1.0, 1.0])
    barcode, origins = curve_barcode([1.0, 0.5], curve, 1)
    assert_pairs(_pairs(barcode), [(0.0, SQRT3 / 2), (0.0, 1 + (SQRT3 - 1) * np.sqrt(5) / 3)])
    assert origins[0].death_segments == (0, 1)
    assert origins[1].death_segments == (2, 0)


def test_curve_extends_last_segment_past_horizon():
    curve = FiltrationCurve(np.array([[1.0, 1.0], [3.0, 1.0]]), horizon=0.2)
    barcode, origins = curve_barcode([1.0, 0.5], curve, 1)
    C = curve.breakpoints()
    expected = 0.1 + (SQRT3 - C[1, 0]) / (np.sqrt(2) * 3 / np.sqrt(10))
    assert barcode.deaths[0] == pytest.approx(expected)
    assert origins[0].death_segments == (2, 0)


def test_curve_evaluation_hits_breakpoints():
    curve = FiltrationCurve(np.array([[1.0, 2.0], [2.0, 1.0], [1.0, 1.0]]), horizon=3.0)
    C = curve.breakpoints()
    for s in range(4):
        np.testing.assert_allclose(curve(float(s)), C[s], atol=1e-12)
    for L in range(2):
        time, _ = curve.inverse(L, float(curve(1.7)[L]))
        assert time == pytest.approx(1.7)


def test_curve_validation():
    with pytest.raises(DomainError):
        FiltrationCurve(np.array([[1.0, -1.0]]))
    with pytest.raises(DomainError):
        FiltrationCurve(np.ones((2, 2)), horizon=0.0)


def _quarter_circle(samples=2001):
    t = np.linspace(0.0, np.pi / 2, samples)
    return t, np.column_stack([np.sin(t), 1.0 - np.cos(t)])


def test_interpolating_curve_passes_through_its_knots():
    t = np.linspace(0.0, 2.0, 2001)
    values = np.column_stack([t, t**2 + t])
    for R in (1, 2, 3, 8):
        curve = interpolating_curve(values, R)
        knots = curve.breakpoints()
        np.testing.assert_allclose(knots[0], [0.0, 0.0])
        np.testing.assert_allclose(knots[-1], values[-1], atol=1e-9)
        np.testing.assert_allclose(knots[:, 1], knots[:, 0] ** 2 + knots[:, 0], atol=1e-6)
        chords = np.linalg.norm(np.diff(knots, axis=0), axis=1)
        np.testing.assert_allclose(chords, chords[0], rtol=1e-9)
        np.testing.assert_allclose(curve(curve.horizon), values[-1], atol=1e-9)


def test_refinement_converges_on_a_circle_arc():
    t, values = _quarter_circle()
    # death threshold at the end of the arc, a knot for every R
    radii = [1.0 / (2 * np.sin(np.pi / 3)), 0.0]
    counts = [2, 4, 8, 16]
    report = refine_check(radii, t, values, counts)
    errors = report.errors
    assert set(report.limit) == {(1, 0)}
    assert report.limit[(1, 0)][1] == pytest.approx(np.pi / 2 / np.sqrt(2), rel=1e-6)
    assert errors[0] > 1e-6
    assert report.non_increasing
    for coarse, fine in zip(errors, errors[1:]):
        assert fine <= 0.6 * coarse
    # R equal chords of the unit arc fall short of its length by pi/2 - 2R sin(pi/(4R))
    expected = [(np.pi / 2 - 2 * R * np.sin(np.pi / (4 * R))) / np.sqrt(2) for R in counts]
    np.testing.assert_allclose(errors, expected, rtol=1e-2)


def test_refinement_converges_on_a_smooth_curve():
    t = np.linspace(0.0, 2.0, 2001)
    values = np.column_stack([t, t**2 + t])
    radii = [2.0 / (2 * np.sin(np.pi / 3)), 0.0]

    report = refine_check(radii, t, values, [2, 4, 8, 16])
    errors = report.errors
    assert errors[0] > 1e-6
    assert report.non_increasing
    assert errors[-1] <= 0.2 * errors[0]
    assert set(report.limit) == {(1, 0)}


def test_refinement_of_a_linear_curve_is_exact():
    t = np.linspace(0.0, 1.0, 11)
    values = np.column_stack([t, 2 * t])
    report = refine_check([0.3, 0.4], t, values, [1, 2, 5])
    assert max(report.errors) < 1e-9


def test_refinement_rejects_bad_tables():
    t = np.linspace(0.0, 1.0, 5)
    with pytest.raises(InputError):
        refine_check([1.0, 1.0], t, np.column_stack([t + 1, t]), [1])
    with pytest.raises(InputError):
        refine_check([1.0, 1.0], t, np.column_stack([t, np.zeros(5)]), [1])
    with pytest.raises(InputError):
        refine_check([1.0, 1.0], t[::-1], np.column_stack([t, t]), [1])


def test_from_pairs():
    barcode = Barcode.from_pairs([(0.0, 1.0), (0.5, np.inf)])
    assert len(barcode) == 2
    assert barcode[1].death == np.inf
    assert _pairs(barcode.finite_part()) == [(0.0, 1.0)]


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("segments", [1, 3])
def test_batch_barcodes_match_single_barcodes(rng, n, segments):
    radii = rng.uniform(0.0, 2.0, (6, 3))
    radii[1, 0] = 0.0
    radii[2] = 0.0
    curve = FiltrationCurve(rng.uniform(0.2, 1.5, (segments, 3)), horizon=1.5)
    batch = batch_curve_barcode(radii, curve, n)
    assert len(batch) == 6
    assert batch.births.shape == (6, len(enumerate_compositions(3, n)))
    for i, r in enumerate(radii):
        barcode, origins = curve_barcode(r, curve, n)
        again, again_origins = batch.barcode(i)
        assert_pairs(_pairs(again), _pairs(barcode), rtol=1e-13)
        assert again_origins == origins
    assert not batch.valid[2].any()
    np.testing.assert_array_equal(batch.births[~batch.valid], 0.0)


def test_batch_barcode_validates_shapes():
    curve = FiltrationCurve.diagonal(2)
    with pytest.raises(InputError):
        batch_curve_barcode(np.ones((3, 4)), curve, 1)
    with pytest.raises(InputError):
        batch_curve_barcode(-np.ones((3, 2)), curve, 1)
