import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from apdens.adaptation import ParameterPool, SuccessHistoryArchive, SuccessRecords, pool_update
from apdens.bench import ProblemMetrics, RunRecord, criterion_one, sign_test
from apdens.config import SolverConfig, dump_config, loads_config
from apdens.constraints import ComparatorConfig, Ordering, rank_population, sf_compare, sp_fitness
from apdens.operators import (
    DonorPool,
    binomial_crossover,
    exponential_mask,
    mutate_ss_pbest,
    mutate_ss_randr1,
    repair_bounds,
)
from apdens.population import SizeController, partition
from apdens.problems import evaluate, evaluate_batch, make_problem, problem_names
from apdens.solver import APDESolver

from conftest import batch, ev

finite = st.floats(-1e6, 1e6, allow_nan=False)
viol = st.one_of(st.just(0.0), st.floats(1e-9, 1e3))
seeds = st.integers(0, 2 ** 32 - 1)


# -- problems -------------------------------------------------------------------

@given(name=st.sampled_from(problem_names()), seed=seeds)
def test_violation_definitions(name, seed):
    p = make_problem(name, 2 if name == "P-ROSEN-CUBIC" else 3)
    rng = np.random.default_rng(seed)
    b = evaluate_batch(p, rng.uniform(p.lower - 1, p.upper + 1, size=(20, p.dim)))
    assert np.all(b.v >= 0)
    np.testing.assert_array_equal(b.v == 0, np.all(b.G == 0, axis=1))
    if p.n_eq == 0:
        np.testing.assert_array_equal(b.theta, b.G.max(axis=1))
        np.testing.assert_allclose(b.v, b.G.mean(axis=1), rtol=1e-15)


@given(seed=seeds, d1=st.floats(0, 1e-2), d2=st.floats(0, 1e-2))
def test_feasibility_monotone_in_delta(seed, d1, d2):
    lo, hi = sorted((d1, d2))
    p = make_problem("P-EQ-LINE", 3)
    x = np.random.default_rng(seed).uniform(-0.01, 0.01, 3) + 1 / 3
    if evaluate(p, x, lo).feasible:
        assert evaluate(p, x, hi).feasible


def test_known_optima_feasible():
    for name in problem_names():
        p = make_problem(name)
        if p.known_optimum is not None:
            assert evaluate(p, p.known_optimum[1], 1e-4).feasible


# -- comparators ----------------------------------------------------------------

@given(st.lists(st.tuples(finite, viol), min_size=3, max_size=3))
def test_sf_antisymmetric_transitive(triple):
    a, b, c = (ev(f, v) for f, v in triple)
    assert sf_compare(a, b) == -sf_compare(b, a)
    if sf_compare(a, b) <= 0 and sf_compare(b, c) <= 0:
        assert sf_compare(a, c) <= 0


@given(st.tuples(finite, st.floats(0, 10)), st.tuples(finite, st.floats(0, 10)))
def test_ec_zero_epsilon_theta_decides(a, b):
    ea, eb = ev(a[0], a[1]), ev(b[0], b[1])
    cmp = ComparatorConfig("ec", 0.0)
    if ea.theta != eb.theta and not (ea.theta == 0 and eb.theta == 0):
        expected = Ordering.A_BETTER if ea.theta < eb.theta else Ordering.B_BETTER
        assert cmp.compare(ea, eb) is expected


@given(st.lists(st.tuples(finite, st.floats(1e-9, 1e3)), min_size=1, max_size=30))
def test_sp_equals_violation_without_feasible(pairs):
    b = batch(pairs)
    np.testing.assert_array_equal(sp_fitness(b).F, b.v)


@given(st.lists(st.tuples(finite, viol), min_size=1, max_size=40))
def test_sf_rank_feasible_block_first(pairs):
    b = batch(pairs)
    order = rank_population(b)
    feas = b.feasible[order]
    assert not np.any(feas[1:] & ~feas[:-1])


# -- adaptation -----------------------------------------------------------------

unit = st.floats(0, 1)
rec_lists = st.lists(st.tuples(unit, unit, st.floats(0, 100)), min_size=1, max_size=30)


def _records(rows):
    r = SuccessRecords()
    for cr, f, d in rows:
        r.add(cr, f, d, 0.0)
    return r


@given(st.lists(st.floats(1e-3, 1), min_size=1, max_size=20))
def test_lehmer_dominates_arithmetic(values):
    from apdens.adaptation import weighted_arithmetic_mean, weighted_lehmer_mean

    r = _records([(x, x, 1.0) for x in values])
    assert weighted_lehmer_mean(r, "f") >= weighted_arithmetic_mean(r, "f") - 1e-12
    same = _records([(values[0], values[0], 1.0)] * 3)
    assert weighted_lehmer_mean(same, "cr") == pytest.approx(values[0], abs=1e-15)


@given(rec_lists)
def test_memory_touches_one_slot(rows):
    a = SuccessHistoryArchive(6)
    a.update(_records([(0.1, 0.2, 1.0)]))
    before_cr, before_f, slot = a.mu_cr.copy(), a.mu_f.copy(), a.cursor
    a.update(_records(rows))
    others = np.arange(6) != slot
    assert a.mu_cr[others].tobytes() == before_cr[others].tobytes()
    assert a.mu_f[others].tobytes() == before_f[others].tobytes()


@settings(max_examples=20)
@given(seed=seeds, mu_cr=st.floats(-1, 2), mu_f=st.floats(-1, 2))
def test_samples_in_range(seed, mu_cr, mu_f):
    a = SuccessHistoryArchive(6)
    a.mu_cr[:] = mu_cr
    a.mu_f[:] = mu_f
    cr, f = a.sample(np.random.default_rng(seed), 5000)
    assert cr.min() >= 0 and cr.max() <= 1
    assert f.min() > 0 and f.max() <= 1


@given(st.lists(st.integers(0, 10000), min_size=4, max_size=4))
def test_pool_probabilities(successes):
    pool = ParameterPool()
    pool_update(pool, successes)
    assert abs(pool.probabilities.sum() - 1) <= 1e-12
    assert pool.probabilities.min() >= 0.05 - 1e-12


# -- population -----------------------------------------------------------------

@given(st.integers(1, 2000), st.lists(st.integers(0, 500), min_size=4, max_size=4))
def test_partition_sums(np_total, se):
    sizes = partition(np_total, se)
    assert sizes.sum() == np_total
    if np_total >= 20:
        assert sizes.min() >= 5


@settings(max_examples=50)
@given(np_max=st.integers(6, 400), fes_max=st.integers(100, 100000),
       rates=st.lists(st.floats(0, 1), min_size=1, max_size=60))
def test_size_non_increasing_except_pesk(np_max, fes_max, rates):
    c = SizeController(np_max, 6, fes_max)
    n = np_max
    for i, r in enumerate(rates):
        fes = (i + 1) * fes_max // len(rates)
        nxt = c.next_size(min(fes, fes_max), r, n)
        assert 6 <= nxt <= np_max
        was_pesk = c.reset_point is not None and c.reset_point[1] == min(fes, fes_max) and nxt > n
        assert nxt <= n or was_pesk
        n = nxt


# -- operators ------------------------------------------------------------------

@given(seed=seeds, n=st.integers(4, 30), d=st.integers(1, 6))
def test_zero_f_full_cr_gives_base(seed, n, d):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    pool = DonorPool(X, rng.permutation(n), np.arange(n))
    v = mutate_ss_pbest(pool, 0.0, pfeas=0.5, fes=0, fes_max=10, rng=rng)
    np.testing.assert_array_equal(binomial_crossover(X, v, 1.0, rng), X)
    # tournament rand/1 with F=0 returns the tournament winner
    v = mutate_ss_randr1(pool, 0.0, pfeas=0.5, rdiv=0.3, rng=rng)
    ranks = pool.rank
    for row in v:
        i = int(np.flatnonzero(np.all(X == row, axis=1))[0])
        assert ranks[i] <= np.sort(ranks)[n - 3]


@given(seed=seeds, n=st.integers(4, 30), f=st.floats(0.01, 1))
def test_ss_pbest_matches_plain_pbest_when_feasible(seed, n, f):
    X = np.random.default_rng(seed).normal(size=(n, 3))
    pool = DonorPool(X, np.arange(n), np.arange(n))
    a = mutate_ss_pbest(pool, f, pfeas=0.2, fes=5, fes_max=10, rng=np.random.default_rng(seed))
    b = mutate_ss_pbest(pool, f, pfeas=0.2, fes=5, fes_max=10, rng=np.random.default_rng(seed),
                        state_switch=False)
    assert a.tobytes() == b.tobytes()


@given(arrays(float, (8, 3), elements=st.floats(-1e3, 1e3)), seeds)
def test_repair_in_bounds(V, seed):
    lo, hi = np.full(3, -1.0), np.full(3, 2.0)
    base = np.random.default_rng(seed).uniform(lo, hi, size=(8, 3))
    out = repair_bounds(V, base, lo, hi)
    assert np.all(out >= lo) and np.all(out <= hi)


@given(seed=seeds, d=st.integers(1, 12), cr=unit)
def test_binomial_changes_at_least_one(seed, d, cr):
    U = binomial_crossover(np.zeros((20, d)), np.ones((20, d)), cr, np.random.default_rng(seed))
    assert np.all(U.sum(axis=1) >= 1)


@given(seed=seeds, d=st.integers(1, 12), cr=unit)
def test_exponential_block_contiguous(seed, d, cr):
    m = exponential_mask(20, d, cr, np.random.default_rng(seed))
    for row in m:
        # one circular run: at most one False->True transition around the ring
        starts = np.sum(row & ~np.roll(row, 1))
        assert row.any() and (starts == 1 or row.all())


# -- solver ---------------------------------------------------------------------

@settings(max_examples=5, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(seed=seeds, name=st.sampled_from(["P-SPH-INEQ", "P-EQ-LINE", "P-INFEAS-TIGHT"]),
       variant=st.sampled_from(["ns", "ns-l"]))
def test_generation_invariants(seed, name, variant):
    p = make_problem(name, 3)
    s = APDESolver(p, SolverConfig(fes_max=3000, seed=seed, variant=variant, trace_every=1))
    prev_np = len(s.pop)
    while True:
        before = s.pop.evals.f.copy(), s.pop.evals.v.copy()
        parents = s.pop.evals.take(slice(None))
        more = s.step()
        info = s.last
        n = len(s.pop)
        assert np.bincount(info.labels, minlength=5)[1:].tolist() == info.sizes.tolist()
        assert np.all(s.pop.X >= p.lower) and np.all(s.pop.X <= p.upper)
        assert len(s.fa) <= 2 * n
        assert n <= prev_np or s.sizing.pesk
        i = int(np.random.default_rng(seed).integers(n))
        e = evaluate(p, s.pop.X[i])
        assert (e.f, e.v) == (s.pop.evals.f[i], s.pop.evals.v[i])
        for k in range(4):
            assert info.success_counts[k] == int(np.sum(info.success & (info.labels == k + 1)))
        prev_np = n
        if not more:
            break
    res = s.result()
    assert res.fes_used <= 3000
    assert res.fes_used == res.n_initial + res.n_trials + res.n_growth


# -- harness --------------------------------------------------------------------

def _metrics(fr_vio_obj):
    fr, vio, obj = fr_vio_obj
    recs = tuple(RunRecord("P", 2, "x", i, obj, 0.0 if i < fr else vio, i < fr, 1, 1) for i in range(4))
    return ProblemMetrics("P", 2, "x", recs)


triples = st.tuples(st.integers(0, 4), st.floats(0.01, 10), st.floats(-10, 10))


@given(triples, triples, triples)
def test_criterion_one_total_preorder(a, b, c):
    ma, mb, mc = _metrics(a), _metrics(b), _metrics(c)
    rank = {"+": -1, "=": 0, "-": 1}
    ab, bc, ac = (rank[criterion_one(x, y)] for x, y in ((ma, mb), (mb, mc), (ma, mc)))
    assert rank[criterion_one(mb, ma)] == -ab
    if ab <= 0 and bc <= 0:
        assert ac <= 0


@given(st.lists(st.tuples(finite, viol), min_size=1, max_size=30))
def test_sign_test_self(pairs):
    recs = [RunRecord("P", 2, "x", i, f, v, v == 0, 1, 1) for i, (f, v) in enumerate(pairs)]
    assert sign_test(recs, recs) == "no-difference"


@given(np_max=st.one_of(st.none(), st.integers(6, 500)), cht=st.sampled_from(["sf", "ec", "sp"]),
       eps=st.one_of(st.just(math.inf), st.floats(0, 10)), seed=st.integers(0, 2 ** 31),
       cc=st.floats(0, 1))
def test_config_round_trip(np_max, cht, eps, seed, cc):
    cfg = SolverConfig(np_max=np_max, cht=cht, epsilon=eps, seed=seed, cc=cc)
    assert loads_config(dump_config(cfg)) == cfg
