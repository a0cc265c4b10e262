import numpy as np
import pytest

from apdens.adaptation import (
    DEFAULT_POOL,
    ParameterPool,
    SuccessHistoryArchive,
    SuccessRecords,
    floor_probabilities,
    pool_select,
    pool_update,
    record_success,
    sample_cr_f,
    update_memory,
    weighted_arithmetic_mean,
    weighted_lehmer_mean,
)


def records(values, deltas):
    r = SuccessRecords()
    for x, d in zip(values, deltas):
        r.add(x, x, d, 0.0)
    return r


def test_record_absolute_difference():
    r = SuccessRecords()
    record_success(r, 0.9, 0.5, 10.0, 4.0)
    assert (r.cr, r.f, r.delta_f) == ([0.9], [0.5], [6.0])


def test_record_zero_improvement():
    r = SuccessRecords()
    record_success(r, 0.2, 0.8, 3.0, 3.0)
    assert r.delta_f == [0.0]


def test_weights_proportional_to_improvement():
    np.testing.assert_allclose(records([0.1, 0.2], [6, 2]).weights(), [0.75, 0.25])


def test_weights_uniform_without_improvement():
    np.testing.assert_allclose(records([0.1, 0.2, 0.3], [0, 0, 0]).weights(), [1 / 3] * 3)


@pytest.mark.parametrize("values,deltas,expected", [
    ([0.5, 1.0], [1, 1], 0.75),
    ([0.5, 1.0], [3, 1], 0.625),
    ([0.4], [7], 0.4),
])
def test_arithmetic_mean(values, deltas, expected):
    assert weighted_arithmetic_mean(records(values, deltas), "cr") == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("values,expected", [
    ([0.5, 1.0], (0.125 + 0.5) / (0.25 + 0.5)),
    ([0.6], 0.6),
    ([0.0, 0.0], 0.0),
])
def test_lehmer_mean(values, expected):
    assert weighted_lehmer_mean(records(values, [1] * len(values)), "f") == pytest.approx(expected, abs=1e-12)


def test_means_need_records():
    with pytest.raises(ValueError):
        weighted_lehmer_mean(SuccessRecords(), "cr")
    with pytest.raises(ValueError):
        records([0.1], [1]).values("xx")


def test_memory_update_lehmer_cr_assignment():
    a = SuccessHistoryArchive(6, lehmer_cr=True)
    update_memory(a, records([0.5, 1.0], [1, 1]))
    assert a.mu_cr[0] == pytest.approx(0.8333333333333334, abs=1e-12)
    assert a.mu_f[0] == pytest.approx(0.75, abs=1e-12)
    assert a.H == 2


def test_memory_update_default_assignment():
    a = SuccessHistoryArchive(6)
    update_memory(a, records([0.5, 1.0], [1, 1]))
    assert a.mu_cr[0] == pytest.approx(0.75, abs=1e-12)
    assert a.mu_f[0] == pytest.approx(0.8333333333333334, abs=1e-12)
    np.testing.assert_array_equal(a.mu_cr[1:], 0.5)


def test_memory_empty_records_noop():
    a = SuccessHistoryArchive(6)
    before = (a.mu_cr.copy(), a.mu_f.copy(), a.cursor)
    update_memory(a, SuccessRecords())
    assert a.mu_cr.tobytes() == before[0].tobytes()
    assert a.mu_f.tobytes() == before[1].tobytes()
    assert a.cursor == before[2]


def test_memory_cursor_wraps():
    a = SuccessHistoryArchive(6)
    for i in range(7):
        update_memory(a, records([0.1 * (i + 1)], [1]))
    assert a.mu_cr[0] == pytest.approx(0.7)
    assert a.mu_cr[1] == pytest.approx(0.2)
    assert a.H == 2


def test_sample_bounds(rng):
    a = SuccessHistoryArchive(6)
    cr, f = a.sample(rng, 10000)
    assert cr.min() >= 0 and cr.max() <= 1
    assert f.min() > 0 and f.max() <= 1
    assert abs(cr.mean() - 0.5) < 0.01


def test_sample_small_mu_f_stays_positive(rng):
    a = SuccessHistoryArchive(6)
    a.mu_f[:] = 0.05
    _, f = a.sample(rng, 10000)
    assert f.min() > 0


def test_sample_cr_mean_against_clamped_normal(rng):
    a = SuccessHistoryArchive(6)
    a.mu_cr[:] = 0.9
    cr, _ = a.sample(rng, 10000)
    # Monte-Carlo oracle of the clamped normal from an independent stream
    ref = np.clip(np.random.default_rng(7).normal(0.9, 0.1, 200000), 0, 1).mean()
    assert abs(cr.mean() - 0.9) <= 0.02
    assert abs(cr.mean() - ref) <= 0.005


def test_sample_f_fallback(rng):
    a = SuccessHistoryArchive(1)
    a.mu_f[:] = -5.0
    _, f = a.sample(rng, 50)
    np.testing.assert_array_equal(f, 0.5)


def test_sample_scalar(rng):
    cr, f = sample_cr_f(SuccessHistoryArchive(), rng)
    assert isinstance(cr, float) and 0 < f <= 1


def test_default_pool():
    assert DEFAULT_POOL == ((0.9, 0.9), (0.5, 0.5), (0.9, 0.2), (0.6, 0.8))


def test_pool_update_from_successes():
    pool = ParameterPool()
    pool_update(pool, [10, 0, 0, 0])
    np.testing.assert_allclose(pool.probabilities, [11 / 14, 1 / 14, 1 / 14, 1 / 14], atol=1e-12)


def test_pool_update_uniform():
    pool = ParameterPool()
    pool_update(pool, [0, 0, 0, 0])
    np.testing.assert_allclose(pool.probabilities, 0.25)


def test_pool_floor_applied():
    pool = ParameterPool()
    pool_update(pool, [1000, 0, 0, 0])
    assert pool.probabilities.min() == pytest.approx(0.05)
    assert pool.probabilities.sum() == pytest.approx(1.0)


def test_floor_probabilities_cascade():
    p = floor_probabilities(np.array([0.9, 0.06, 0.03, 0.01]), 0.05)
    assert p.sum() == pytest.approx(1.0)
    assert p.min() >= 0.05 - 1e-15
    with pytest.raises(ValueError):
        floor_probabilities(np.ones(4), 0.3)


def test_pool_window(rng):
    pool = ParameterPool(lp=3)
    for _ in range(2):
        pool.record([0, 0, 1], [True, True, False])
        pool.end_generation()
    np.testing.assert_allclose(pool.probabilities, 0.25)
    pool.record([0], [True])
    pool.end_generation()
    assert pool.successes.sum() == 0
    np.testing.assert_allclose(pool.probabilities, [6 / 9, 1 / 9, 1 / 9, 1 / 9])


def test_pool_select(rng):
    pool = ParameterPool()
    idx, cr, f = pool.select(rng, 100)
    np.testing.assert_array_equal(np.column_stack([cr, f]), pool.pairs[idx])
    assert pool_select(pool, rng) in DEFAULT_POOL


def test_empty_pool():
    with pytest.raises(ValueError):
        ParameterPool(pairs=[])
