"""Tail measures, extremal marginals, point sampling, record structure."""

import math

import numpy as np
import pytest

from extremalclock.measures import (
    ExtremalPath,
    PointSample,
    TailMeasure,
    extremal_marginal,
    extremal_path,
    fdd_probability,
    range_avoidance_prob,
    record_interval_mass,
    sample_poisson_points,
    sample_record_avoidance,
    sample_sup_levels,
    sup_path,
    tail_inverse,
    tail_mass,
)


def test_pareto_tail_values():
    m = TailMeasure.pareto(4.0)
    assert tail_mass(m, 2.0) == pytest.approx(2.0)
    assert tail_mass(m, 0.5) == pytest.approx(8.0)
    m6 = TailMeasure.pareto(6.0)
    assert tail_mass(m6, 1.0) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        tail_mass(m, 0.0)
    with pytest.raises(ValueError):
        TailMeasure.pareto(0.0)
    with pytest.raises(ValueError):
        TailMeasure.pareto(math.inf)


def test_tail_inverse_round_trip():
    m = TailMeasure.pareto(4.0)
    assert tail_inverse(m, 2.0) == pytest.approx(2.0)
    for u in (0.01, 1.0, 37.5):
        assert tail_inverse(m, tail_mass(m, u)) == pytest.approx(u, rel=1e-12)
    with pytest.raises(ValueError):
        tail_inverse(m, 0.0)


def test_custom_tail_matches_pareto():
    # same K/u law supplied as a bare callable: numeric inversion must
    # agree with the closed form
    m = TailMeasure.from_tail(lambda u: 4.0 / u)
    ref = TailMeasure.pareto(4.0)
    for u in (0.2, 1.0, 5.0, 80.0):
        assert tail_mass(m, u) == pytest.approx(tail_mass(ref, u))
    for mass in (0.03, 1.0, 12.0):
        assert tail_inverse(m, mass) == pytest.approx(tail_inverse(ref, mass), rel=1e-9)


def test_extremal_marginal_closed_form():
    m = TailMeasure.pareto(4.0)
    # t=1, u=4: exp(-1)
    assert extremal_marginal(m, 1.0, 4.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    # t=2, u=4: exp(-2)
    assert extremal_marginal(m, 2.0, 4.0) == pytest.approx(math.exp(-2.0), rel=1e-14)
    with pytest.raises(ValueError):
        extremal_marginal(m, 0.0, 1.0)


def test_fdd_product_form():
    m = TailMeasure.pareto(4.0)
    # times (1, 2), thresholds (4, 4): exp(-1*1) * exp(-1*1) = exp(-2)
    assert fdd_probability(m, [1.0, 2.0], [4.0, 4.0]) == pytest.approx(
        math.exp(-2.0), rel=1e-14)
    # single time must agree bitwise with the marginal
    assert fdd_probability(m, [1.5], [3.0]) == extremal_marginal(m, 1.5, 3.0)
    # non-trivial increasing thresholds
    val = fdd_probability(m, [1.0, 3.0], [2.0, 8.0])
    assert val == pytest.approx(math.exp(-(1.0 * 2.0 + 2.0 * 0.5)), rel=1e-14)


def test_fdd_validation():
    m = TailMeasure.pareto(4.0)
    with pytest.raises(ValueError):
        fdd_probability(m, [2.0, 1.0], [1.0, 1.0])  # times not increasing
    with pytest.raises(ValueError):
        fdd_probability(m, [1.0, 2.0], [5.0, 3.0])  # thresholds decreasing
    with pytest.raises(ValueError):
        fdd_probability(m, [0.0, 1.0], [1.0, 1.0])  # t must be positive
    with pytest.raises(ValueError):
        fdd_probability(m, [1.0, 2.0], [1.0])  # length mismatch
    with pytest.raises(ValueError):
        fdd_probability(m, [1.0], [-1.0])


def test_point_sample_statistics():
    m = TailMeasure.pareto(4.0)
    rng = np.random.default_rng(42)
    counts = []
    for _ in range(2000):
        pts = sample_poisson_points(m, t_max=2.0, u_min=1.0, rng=rng)
        counts.append(pts.count)
        assert np.all(pts.magnitudes >= 1.0)
        assert np.all((pts.times > 0.0) & (pts.times <= 2.0))
    counts = np.asarray(counts, dtype=float)
    # Poisson(t_max * K / u_min) = Poisson(8)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - 8.0) <= 3.0 * se


def test_point_magnitude_law():
    # conditional magnitudes above u_min follow u_min/U: check the CDF
    # at a few points against tail(u)/tail(u_min)
    m = TailMeasure.pareto(4.0)
    rng = np.random.default_rng(3)
    mags = np.concatenate([
        sample_poisson_points(m, 1.0, 0.5, rng).magnitudes for _ in range(5000)
    ])
    for u in (1.0, 2.0, 4.0):
        frac = float(np.mean(mags > u))
        expect = (4.0 / u) / (4.0 / 0.5)
        se = math.sqrt(expect * (1.0 - expect) / mags.size)
        assert abs(frac - expect) <= 4.0 * se


def test_sup_path_cases():
    pts = PointSample(times=np.array([0.5, 1.5]),
                      magnitudes=np.array([3.0, 2.0]),
                      t_max=2.0, u_min=0.1)
    assert sup_path(pts, 0.25) == pytest.approx(0.1)   # before any point
    assert sup_path(pts, 1.0) == pytest.approx(3.0)
    assert sup_path(pts, 2.0) == pytest.approx(3.0)    # later lower point ignored
    assert sup_path(pts, 1.0, floor=5.0) == pytest.approx(5.0)
    empty = PointSample(times=np.array([]), magnitudes=np.array([]),
                        t_max=1.0, u_min=0.2)
    assert sup_path(empty, 0.7) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        sup_path(pts, -1.0)


def test_extremal_path_records():
    pts = PointSample(times=np.array([1.5, 0.5, 1.0]),
                      magnitudes=np.array([2.0, 3.0, 2.5]),
                      t_max=2.0, u_min=0.1)
    path = extremal_path(pts)
    # only the first point is a record: later ones are below 3.0
    assert path.breakpoints == ((0.5, 3.0),)
    assert path.level_at(0.4) == pytest.approx(0.1)
    assert path.level_at(0.5) == pytest.approx(3.0)   # right-continuous
    assert path.level_at(2.0) == pytest.approx(3.0)


def test_extremal_path_agrees_with_sup_path():
    m = TailMeasure.pareto(4.0)
    rng = np.random.default_rng(9)
    for _ in range(50):
        pts = sample_poisson_points(m, 2.0, 0.05, rng)
        path = extremal_path(pts)
        levels = [bl for _, bl in path.breakpoints]
        assert levels == sorted(levels)
        times = [bt for bt, _ in path.breakpoints]
        assert times == sorted(times)
        for t in (0.3, 0.9, 1.4, 2.0):
            assert path.level_at(t) == pytest.approx(sup_path(pts, t))


def test_record_interval_mass():
    assert record_interval_mass(1.0, 2.0) == pytest.approx(math.log(2.0))
    assert record_interval_mass(2.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        record_interval_mass(0.0, 1.0)
    with pytest.raises(ValueError):
        record_interval_mass(2.0, 1.0)


def test_range_avoidance_closed_form():
    assert range_avoidance_prob(4.0, 1.0, 1.0) == pytest.approx(0.5)
    assert range_avoidance_prob(4.0, 1.0, 3.0) == pytest.approx(0.25)
    assert range_avoidance_prob(4.0, 2.0, 1.0) == pytest.approx(2.0 / 3.0)
    assert range_avoidance_prob(4.0, 1.0, 0.0) == 1.0
    # K-independence
    assert range_avoidance_prob(0.5, 1.0, 1.0) == range_avoidance_prob(40.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        range_avoidance_prob(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        range_avoidance_prob(4.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        range_avoidance_prob(4.0, 1.0, -0.5)


def test_sample_sup_levels_matches_scalar_path():
    # law equivalence is tested via KS elsewhere; here check the
    # vectorised sampler respects the floor, monotonicity and t_max
    m = TailMeasure.pareto(4.0)
    rng = np.random.default_rng(21)
    levels = sample_sup_levels(m, [0.5, 1.0, 2.0], 2.0, 0.05, 400, rng)
    assert levels.shape == (400, 3)
    assert np.all(levels >= 0.05)
    assert np.all(np.diff(levels, axis=1) >= 0.0)
    with pytest.raises(ValueError):
        sample_sup_levels(m, [3.0], 2.0, 0.05, 10, rng)


def test_sup_level_marginal_mc():
    m = TailMeasure.pareto(4.0)
    rng = np.random.default_rng(8)
    levels = sample_sup_levels(m, [1.0], 1.0, 0.05, 40_000, rng)[:, 0]
    for u in (2.0, 4.0, 8.0):
        p_hat = float(np.mean(levels <= u))
        p = extremal_marginal(m, 1.0, u)
        se = math.sqrt(p * (1.0 - p) / levels.size)
        assert abs(p_hat - p) <= 4.0 * se


def test_record_avoidance_mc():
    m = TailMeasure.pareto(4.0)
    rng = np.random.default_rng(12)
    hits = sample_record_avoidance(m, t=1.0, s=1.0, u_min=0.05,
                                   reps=40_000, rng=rng)
    p_hat = float(np.mean(hits))
    se = math.sqrt(p_hat * (1.0 - p_hat) / hits.size)
    assert abs(p_hat - 0.5) <= 3.0 * se
    with pytest.raises(ValueError):
        sample_record_avoidance(m, t=1.0, s=-1.0, u_min=0.05, reps=10, rng=rng)
