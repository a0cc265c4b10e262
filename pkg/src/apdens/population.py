"""Population bookkeeping: subpopulation partitioning, pfeas-driven sizing,
the failed-trial archive and the diversity index."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .constraints import SF, ComparatorConfig, rank_population
from .problems import ConstrainedProblem, EvalCounter, Evaluation, EvaluationBatch, evaluate_batch

EXPLORING = "exploring"
BALANCE = "balance"
EXPLOITING = "exploiting"


@dataclass(frozen=True, eq=False)
class Individual:
    x: np.ndarray
    eval: Evaluation
    subpop: int = 1


@dataclass(eq=False)
class Population:
    """Decision vectors, their evaluations and 1-based subpopulation labels."""

    X: np.ndarray
    evals: EvaluationBatch
    labels: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    def individual(self, i: int) -> Individual:
        return Individual(self.X[i].copy(), self.evals[i], int(self.labels[i]))

    def individuals(self) -> list[Individual]:
        return [self.individual(i) for i in range(len(self))]

    def take(self, idx) -> Population:
        return Population(self.X[idx], self.evals.take(idx), self.labels[idx])

    @classmethod
    def from_individuals(cls, individuals) -> Population:
        individuals = list(individuals)
        return cls(np.array([ind.x for ind in individuals], dtype=float),
                   EvaluationBatch.from_evaluations(ind.eval for ind in individuals),
                   np.array([ind.subpop for ind in individuals], dtype=int))


def round_half_up(x) -> int:
    return math.floor(Fraction(x) + Fraction(1, 2))


# -- partitioning -------------------------------------------------------------

def partition(np_total: int, success_counts, k: int = 4, se0=1, min_subpop: int = 5) -> np.ndarray:
    """Subpopulation sizes proportional to ``Se + se0``, summing to ``np_total``.

    Shares are integerized by largest remainder, then every size is raised to
    ``min_subpop`` one unit at a time from the currently largest subpopulation.
    Below ``k * min_subpop`` the split is uniform.
    """
    se = [Fraction(s) + Fraction(se0) for s in success_counts]
    if len(se) != k:
        raise ValueError(f"expected {k} success counts, got {len(se)}")
    if np_total < k * min_subpop:
        base, extra = divmod(np_total, k)
        return np.array([base + (s < extra) for s in range(k)], dtype=int)
    # exact shares w_s * np_total / total on a common integer denominator
    den = math.lcm(*(w.denominator for w in se))
    w = [int(x * den) for x in se]
    total = sum(w)
    sizes, rems = zip(*(divmod(wi * np_total, total) for wi in w))
    sizes = list(sizes)
    left = np_total - sum(sizes)
    # larger fractional part first, lower index on ties
    order = sorted(range(k), key=lambda s: (-rems[s], s))
    for s in order[:left]:
        sizes[s] += 1
    for s in range(k):
        while sizes[s] < min_subpop:
            donor = max(range(k), key=lambda t: (sizes[t], -t))
            sizes[donor] -= 1
            sizes[s] += 1
    return np.array(sizes, dtype=int)


def assign_subpopulations(sizes, rng: np.random.Generator) -> np.ndarray:
    """Random 1-based labels with the given subpopulation sizes."""
    sizes = np.asarray(sizes, dtype=int)
    labels = np.empty(int(sizes.sum()), dtype=int)
    labels[rng.permutation(labels.size)] = np.repeat(np.arange(1, sizes.size + 1), sizes)
    return labels


# -- population size ----------------------------------------------------------

def linear_size(np_max: int, np_min: int, fes_max: int, fes: int) -> int:
    """Linear reduction from ``np_max`` at zero evaluations to ``np_min`` at the budget."""
    num = np_max * fes_max - (np_max - np_min) * fes
    return (2 * num + fes_max) // (2 * fes_max)


class SizeController:
    """Three-stage population size state machine driven by the feasible rate.

    * exploring (``FEs < 0.5 FES_max``): linear reduction.
    * balance (``0.5 <= FEs/FES_max < 0.9``): linear reduction once pfeas has
      exceeded 0.5; otherwise the size is frozen at entry and then shrinks in
      proportion to pfeas, holding while pfeas is zero.
    * exploiting: linear reduction, plus a single reset to ``np_max / 6`` when
      the population is smaller and pfeas < 0.6.  After the reset the size
      shrinks linearly from the reset point to ``np_min`` over the remaining
      budget.
    """

    def __init__(self, np_max: int, np_min: int, fes_max: int):
        if not np_min <= np_max:
            raise ValueError("np_min must not exceed np_max")
        self.np_max = np_max
        self.np_min = np_min
        self.fes_max = fes_max
        self.stage = EXPLORING
        self.np_fix: int | None = None
        self.fes_fix: int | None = None
        self.pesk = False
        self.linear_latch = False
        self.reset_point: tuple[int, int] | None = None

    def _clamp(self, n: int) -> int:
        return max(self.np_min, min(self.np_max, n))

    def next_size(self, fes: int, pfeas: float, np_current: int) -> int:
        fes_max = self.fes_max
        if 2 * fes < fes_max:
            self.stage = EXPLORING
            if pfeas > 0.5:
                self.linear_latch = True
            n = linear_size(self.np_max, self.np_min, fes_max, fes)
        elif 10 * fes < 9 * fes_max:
            self.stage = BALANCE
            if pfeas > 0.5:
                self.linear_latch = True
            if self.linear_latch:
                n = linear_size(self.np_max, self.np_min, fes_max, fes)
            else:
                if self.np_fix is None:
                    self.np_fix, self.fes_fix = np_current, fes
                if pfeas == 0:
                    n = np_current
                else:
                    span = Fraction(self.np_fix - self.np_min, fes_max - self.fes_fix)
                    n = round_half_up(self.np_fix - span * (fes - self.fes_fix) * Fraction(pfeas))
        else:
            self.stage = EXPLOITING
            if self.reset_point is not None:
                np0, fes0 = self.reset_point
                if fes_max > fes0:
                    n = round_half_up(np0 - Fraction(np0 - self.np_min, fes_max - fes0) * (fes - fes0))
                else:
                    n = np0
            else:
                n = linear_size(self.np_max, self.np_min, fes_max, fes)
            n = min(n, np_current)
            if not self.pesk and 6 * n < self.np_max and pfeas < 0.6:
                n = round_half_up(Fraction(self.np_max, 6))
                self.pesk = True
                self.reset_point = (n, fes)
                return self._clamp(n)
        return self._clamp(min(n, np_current))


def next_population_size(state: SizeController, fes: int, pfeas: float, np_current: int) -> int:
    return state.next_size(fes, pfeas, np_current)


def resize(pop: Population, np_next: int, comparator: ComparatorConfig = SF,
           rng: np.random.Generator | None = None, problem: ConstrainedProblem | None = None,
           delta: float = 1e-4, counter: EvalCounter | None = None) -> Population:
    """Drop the worst members or append fresh random ones (evaluated on the spot).

    Survivors keep their relative order.
    """
    n = len(pop)
    if np_next == n:
        return pop
    if np_next < n:
        keep = np.sort(rank_population(pop.evals, comparator)[:np_next])
        return pop.take(keep)
    if problem is None or rng is None:
        raise ValueError("growing a population needs a problem and an rng")
    extra = np_next - n
    X_new = rng.uniform(problem.lower, problem.upper, size=(extra, problem.dim))
    ev_new = evaluate_batch(problem, X_new, delta, counter)
    return Population(np.vstack([pop.X, X_new]), EvaluationBatch.concat([pop.evals, ev_new]),
                      np.concatenate([pop.labels, np.ones(extra, dtype=int)]))


# -- failed-trial archive -----------------------------------------------------

class FailedArchive:
    """Trial vectors that lost selection, with uniform-random eviction."""

    def __init__(self, dim: int, capacity: int):
        self._buf = np.empty((max(capacity, 1), dim))
        self.size = 0
        self.capacity = capacity

    def __len__(self):
        return self.size

    @property
    def members(self) -> np.ndarray:
        return self._buf[: self.size]

    def _ensure(self, cap: int) -> None:
        if cap > self._buf.shape[0]:
            buf = np.empty((cap, self._buf.shape[1]))
            buf[: self.size] = self._buf[: self.size]
            self._buf = buf

    def set_capacity(self, capacity: int, rng: np.random.Generator) -> None:
        self.capacity = capacity
        self._ensure(capacity)
        if self.size > capacity:
            keep = np.sort(rng.choice(self.size, size=capacity, replace=False))
            self._buf[:capacity] = self._buf[keep]
            self.size = capacity

    def insert(self, x: np.ndarray, rng: np.random.Generator) -> None:
        if self.capacity <= 0:
            return
        if self.size >= self.capacity:
            self._buf[rng.integers(self.size)] = x
        else:
            self._ensure(self.size + 1)
            self._buf[self.size] = x
            self.size += 1


def fa_insert(archive: FailedArchive, x, rng: np.random.Generator) -> None:
    archive.insert(np.asarray(x, dtype=float), rng)


# -- diversity ----------------------------------------------------------------

def spread(X: np.ndarray) -> float:
    """Root of the summed squared deviation from the centroid, per member."""
    X = np.asarray(X, dtype=float)
    return math.sqrt(float(np.sum((X - X.mean(axis=0)) ** 2)) / X.shape[0])


def rdiv(population, rdivf_init: float) -> float:
    X = population.X if isinstance(population, Population) else np.asarray(population, dtype=float)
    if rdivf_init <= 0:
        raise ValueError("initial spread must be positive")
    return spread(X) / rdivf_init
