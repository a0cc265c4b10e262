"""Generation loop of the adaptive-population DE and the plain DE/rand/1/bin baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adaptation import ParameterPool, SuccessHistoryArchive, SuccessRecords
from .config import ConfigError, SolverConfig
from .constraints import SF, ComparatorConfig, Ordering, pfeas, rank_population
from .operators import (
    DonorPool,
    Mutation,
    Strategy,
    crossover,
    binomial_crossover,
    mutate_pbest_div,
    mutate_rand1,
    mutate_ss_pbest,
    mutate_ss_randr1,
    repair_bounds,
    strategy_for,
)
from .population import (
    FailedArchive,
    Individual,
    Population,
    SizeController,
    assign_subpopulations,
    partition,
    resize,
    spread,
)
from .problems import ConstrainedProblem, EvalCounter, evaluate_batch

TRACE_COLUMNS = ("generation", "fes", "np", "pfeas", "rdiv", "best_f", "best_v")


@dataclass(frozen=True)
class TraceRecord:
    generation: int
    fes: int
    np: int
    pfeas: float
    rdiv: float
    best_f: float
    best_v: float

    def as_row(self) -> tuple:
        return tuple(getattr(self, c) for c in TRACE_COLUMNS)


@dataclass(eq=False)
class RunResult:
    problem: str
    dim: int
    algo: str
    seed: int
    best: Individual
    fes_used: int
    generations: int
    trace: list[TraceRecord]
    n_initial: int = 0
    n_trials: int = 0
    n_growth: int = 0

    @property
    def final_eval(self):
        return self.best.eval

    @property
    def success_flag(self) -> bool:
        return self.best.eval.feasible


@dataclass(eq=False)
class GenerationInfo:
    """What happened in the most recent generation (for inspection and tests)."""

    labels: np.ndarray
    sizes: np.ndarray
    strategies: list[Strategy]
    success: np.ndarray
    evaluated: int
    success_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


class _Driver:
    algo = "?"

    def __init__(self, problem: ConstrainedProblem, config: SolverConfig, np_init: int):
        self.problem = problem
        self.config = config
        self.dim = problem.dim
        self.fes_max = config.resolved_fes_max(self.dim)
        if self.fes_max < np_init:
            raise ConfigError(f"fes_max ({self.fes_max}) is smaller than the initial population ({np_init})")
        self.rng = np.random.default_rng(config.seed)
        self.counter = EvalCounter()
        X = self.rng.uniform(problem.lower, problem.upper, size=(np_init, self.dim))
        evals = evaluate_batch(problem, X, config.delta, self.counter)
        self.pop = Population(X, evals, np.ones(np_init, dtype=int))
        self.n_initial = np_init
        self.n_trials = 0
        self.n_growth = 0
        self.generation = 0
        self.rdivf_init = spread(X)
        self.rdiv = 1.0
        self.best = self._population_best()
        self.trace: list[TraceRecord] = []
        self._record(pfeas(self.pop.evals))

    @property
    def fes(self) -> int:
        return self.counter.count

    @property
    def done(self) -> bool:
        return self.fes >= self.fes_max

    @property
    def best_comparator(self) -> ComparatorConfig:
        # SP fitness is population-relative; best-so-far uses feasibility rules instead
        cmp = self.config.comparator
        return SF if cmp.kind == "sp" else cmp

    def _population_best(self) -> Individual:
        i = int(rank_population(self.pop.evals, self.best_comparator)[0])
        return self.pop.individual(i)

    def _update_best(self) -> None:
        cand = self._population_best()
        if self.best_comparator.compare(cand.eval, self.best.eval) is Ordering.A_BETTER:
            self.best = cand

    def _record(self, rate: float) -> None:
        self.trace.append(TraceRecord(self.generation, self.fes, len(self.pop), rate, self.rdiv,
                                      self.best.eval.f, self.best.eval.v))

    def _maybe_record(self, rate: float) -> None:
        if self.generation % self.config.trace_every == 0 or self.done:
            self._record(rate)

    def step(self) -> bool:
        raise NotImplementedError

    def run(self) -> RunResult:
        while self.step():
            pass
        return self.result()

    def result(self) -> RunResult:
        if self.trace[-1].generation != self.generation:
            self._record(pfeas(self.pop.evals))
        return RunResult(self.problem.name, self.dim, self.algo, self.config.seed, self.best,
                         self.fes, self.generation, list(self.trace),
                         self.n_initial, self.n_trials, self.n_growth)


class APDESolver(_Driver):
    """Step-wise driver; call :meth:`step` until it returns False."""

    def __init__(self, problem: ConstrainedProblem, config: SolverConfig | None = None):
        config = config or SolverConfig()
        self.variant = config.resolved_variant(problem.dim)
        self.algo = "apde-" + self.variant
        self.np_max = config.resolved_np_max(problem.dim)
        if self.np_max < config.np_min:
            raise ConfigError("np_max must be at least np_min")
        super().__init__(problem, config, self.np_max)
        k = config.k
        self.ablation = None if config.ablation == "none" else config.ablation
        self.sizing = None
        if config.const_np is None:
            self.sizing = SizeController(self.np_max, config.np_min, self.fes_max)
        self.archives = [SuccessHistoryArchive(config.s_size, config.lehmer_cr) for _ in range(k)]
        self.pools = None
        if self.variant == "ns-l":
            self.pools = [ParameterPool(config.pool, config.lp, config.pool_floor, config.pool_s0)
                          for _ in range(k)]
        self.records = [SuccessRecords() for _ in range(k)]
        self.success_counts = np.zeros(k, dtype=int)
        self.fa = FailedArchive(self.dim, 2 * self.np_max)
        self.last: GenerationInfo | None = None

    def _mutate(self, strategy: Strategy, pool: DonorPool, F, rate: float) -> np.ndarray:
        cfg, rng = self.config, self.rng
        arch = self.fa.members if len(self.fa) else None
        m = strategy.mutation
        if m in (Mutation.SS_PBEST, Mutation.PBEST):
            return mutate_ss_pbest(pool, F, pfeas=rate, fes=self.fes, fes_max=self.fes_max,
                                   p_frac=cfg.p_frac, rng=rng, archive=arch,
                                   state_switch=m is Mutation.SS_PBEST)
        if m is Mutation.PBEST_DIV:
            return mutate_pbest_div(pool, F, rdiv=self.rdiv, cc=cfg.cc, p_frac=cfg.p_frac,
                                    rng=rng, archive=arch)
        if m in (Mutation.SS_RANDR1, Mutation.RANDR1):
            return mutate_ss_randr1(pool, F, pfeas=rate, rdiv=self.rdiv, cc=cfg.cc, rng=rng,
                                    state_switch=m is Mutation.SS_RANDR1)
        return mutate_rand1(pool, F, rng=rng)

    def step(self) -> bool:
        if self.done:
            return False
        cfg, rng, problem = self.config, self.rng, self.problem
        k = cfg.k
        self.generation += 1

        if self.sizing is not None:
            n_next = self.sizing.next_size(self.fes, pfeas(self.pop.evals), len(self.pop))
            n_now = len(self.pop)
            if n_next > n_now:
                n_next = n_now + min(n_next - n_now, self.fes_max - self.fes)
                self.n_growth += n_next - n_now
            self.pop = resize(self.pop, n_next, cfg.comparator, rng, problem, cfg.delta, self.counter)
        self.fa.set_capacity(2 * len(self.pop), rng)

        pop = self.pop
        n = len(pop)
        rate = pfeas(pop.evals)
        sizes = partition(n, self.success_counts, k, cfg.se0, cfg.min_subpop)
        pop.labels = assign_subpopulations(sizes, rng)
        rank_pos = np.empty(n, dtype=int)
        rank_pos[rank_population(pop.evals, cfg.comparator)] = np.arange(n)
        self.rdiv = spread(pop.X) / self.rdivf_init if self.rdivf_init > 0 else 0.0

        U = pop.X.copy()
        CR = np.zeros(n)
        F = np.zeros(n)
        pair_idx = np.zeros(n, dtype=int)
        uses_archive = np.zeros(n, dtype=bool)
        strategies = []
        for s in range(1, k + 1):
            members = np.flatnonzero(pop.labels == s)
            strategy = strategy_for(s, self.fes, self.fes_max, self.variant, self.ablation)
            strategies.append(strategy)
            if members.size == 0:
                continue
            if members.size >= cfg.min_subpop:
                donors, target_pos = members, np.arange(members.size)
            else:
                donors, target_pos = np.arange(n), members
            if self.pools is not None:
                idx, cr, f = self.pools[s - 1].select(rng, members.size)
                pair_idx[members] = idx
            else:
                cr, f = self.archives[s - 1].sample(rng, members.size)
            CR[members], F[members] = cr, f
            uses_archive[members] = strategy.uses_archive
            pool = DonorPool(pop.X[donors], rank_pos[donors], target_pos)
            V = self._mutate(strategy, pool, f, rate)
            V = repair_bounds(V, pop.X[members], problem.lower, problem.upper)
            U[members] = crossover(strategy.crossover, pop.X[members], V, cr, rng)

        # the last generation may only afford part of the trials
        n_eval = min(n, self.fes_max - self.fes)
        trial = evaluate_batch(problem, U[:n_eval], cfg.delta, self.counter)
        self.n_trials += n_eval
        parent = pop.evals.take(slice(0, n_eval))
        order = cfg.comparator.compare_batches(trial, parent)
        survive = np.zeros(n, dtype=bool)
        success = np.zeros(n, dtype=bool)
        survive[:n_eval] = order <= 0
        success[:n_eval] = order < 0
        failed = np.zeros(n, dtype=bool)
        failed[:n_eval] = order > 0

        for i in np.flatnonzero(failed & uses_archive):
            self.fa.insert(U[i], rng)

        f_parent = pop.evals.f.copy()
        f_trial = np.full(n, np.nan)
        f_trial[:n_eval] = trial.f
        for s in range(1, k + 1):
            rec = self.records[s - 1]
            rec.clear()
            mask = success & (pop.labels == s)
            rec.extend(CR[mask], F[mask], f_parent[mask], f_trial[mask])
            self.success_counts[s - 1] = int(mask.sum())

        idx = np.flatnonzero(survive[:n_eval])
        pop.X[idx] = U[idx]
        pop.evals.put(idx, trial.take(idx))

        for s in range(1, k + 1):
            if self.pools is not None:
                mask = pop.labels[:n_eval] == s
                self.pools[s - 1].record(pair_idx[:n_eval][mask], success[:n_eval][mask])
                self.pools[s - 1].end_generation()
            else:
                self.archives[s - 1].update(self.records[s - 1])

        self.last = GenerationInfo(pop.labels.copy(), sizes, strategies, success, n_eval,
                                   self.success_counts.copy())
        self._update_best()
        self._maybe_record(rate)
        return not self.done


class DEBinSolver(_Driver):
    """Classic DE/rand/1/bin with fixed F, Cr and population size under feasibility rules."""

    algo = "de-bin"

    def __init__(self, problem: ConstrainedProblem, config: SolverConfig | None = None):
        config = config or SolverConfig()
        np_const = config.baseline_np if config.baseline_np is not None else 10 * problem.dim
        super().__init__(problem, config, max(np_const, 4))

    @property
    def best_comparator(self) -> ComparatorConfig:
        return SF

    def step(self) -> bool:
        if self.done:
            return False
        cfg, rng, problem = self.config, self.rng, self.problem
        self.generation += 1
        pop = self.pop
        n = len(pop)
        pool = DonorPool(pop.X, np.arange(n), np.arange(n))
        V = mutate_rand1(pool, cfg.baseline_f, rng=rng)
        V = repair_bounds(V, pop.X, problem.lower, problem.upper)
        U = binomial_crossover(pop.X, V, cfg.baseline_cr, rng)
        n_eval = min(n, self.fes_max - self.fes)
        trial = evaluate_batch(problem, U[:n_eval], cfg.delta, self.counter)
        self.n_trials += n_eval
        order = SF.compare_batches(trial, pop.evals.take(slice(0, n_eval)))
        idx = np.flatnonzero(order <= 0)
        pop.X[idx] = U[idx]
        pop.evals.put(idx, trial.take(idx))
        self.rdiv = spread(pop.X) / self.rdivf_init if self.rdivf_init > 0 else 0.0
        self._update_best()
        self._maybe_record(pfeas(pop.evals))
        return not self.done


def run(problem: ConstrainedProblem, config: SolverConfig | None = None) -> RunResult:
    return APDESolver(problem, config).run()


def de_bin_baseline(problem: ConstrainedProblem, config: SolverConfig | None = None) -> RunResult:
    return DEBinSolver(problem, config).run()
