"""Constraint-handling comparators: feasibility rules, epsilon level, adaptive penalty.

Every comparator reduces to a lexicographic ``(primary, secondary)`` key per
evaluation, lower is better.  Pairwise comparisons, ranking and selection all
go through :meth:`ComparatorConfig.keys`, so one code path serves scalars and
whole populations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .problems import Evaluation, EvaluationBatch, as_batch

CHT_KINDS = ("sf", "ec", "sp")


class Ordering(IntEnum):
    A_BETTER = -1
    TIE = 0
    B_BETTER = 1


def _order(ka, kb) -> Ordering:
    if ka < kb:
        return Ordering.A_BETTER
    if kb < ka:
        return Ordering.B_BETTER
    return Ordering.TIE


def sf_compare(a: Evaluation, b: Evaluation) -> Ordering:
    """Superiority of feasible solutions."""
    if a.feasible and b.feasible:
        return _order(a.f, b.f)
    if a.feasible:
        return Ordering.A_BETTER
    if b.feasible:
        return Ordering.B_BETTER
    return _order(a.v, b.v)


def ec_compare(a: Evaluation, b: Evaluation, epsilon: float = 0.0) -> Ordering:
    """Epsilon-level comparison on ``(f, theta)``."""
    if (a.theta <= epsilon and b.theta <= epsilon) or a.theta == b.theta:
        return _order(a.f, b.f)
    return _order(a.theta, b.theta)


def pfeas(evals) -> float:
    batch = as_batch(evals)
    if len(batch) == 0:
        raise ValueError("pfeas of an empty population")
    return float(np.count_nonzero(batch.feasible)) / len(batch)


@dataclass(frozen=True, eq=False)
class SpFitness:
    """Self-adaptive penalty terms, one entry per member (lower ``F`` is better)."""

    F: np.ndarray
    d: np.ndarray
    p: np.ndarray
    f_norm: np.ndarray
    pfeas: float


def sp_fitness(evals) -> SpFitness:
    batch = as_batch(evals)
    n = len(batch)
    if n == 0:
        raise ValueError("sp_fitness of an empty population")
    rate = pfeas(batch)
    f, v = batch.f, batch.v
    f_min, f_max = f.min(), f.max()
    if f_max == f_min:
        f_norm = np.zeros(n)
    else:
        f_norm = (f - f_min) / (f_max - f_min)
    if rate == 0.0:
        d = v.copy()
        M = np.zeros(n)
    else:
        d = np.sqrt(f_norm ** 2 + v ** 2)
        M = v
    N = np.where(batch.feasible, 0.0, f_norm)
    p = (1.0 - rate) * M + rate * N
    return SpFitness(F=d + p, d=d, p=p, f_norm=f_norm, pfeas=rate)


@dataclass(frozen=True)
class ComparatorConfig:
    kind: str = "sf"
    epsilon: float = 0.0

    def __post_init__(self):
        if self.kind not in CHT_KINDS:
            raise ValueError(f"unknown constraint-handling technique {self.kind!r}")
        if not (self.epsilon >= 0 or math.isinf(self.epsilon)):
            raise ValueError("epsilon must be non-negative")

    def keys(self, evals) -> tuple[np.ndarray, np.ndarray]:
        """Lexicographic sort keys for a batch.

        SP keys depend on the whole batch (pfeas, f range), so compare members
        only within the batch the keys were computed for.
        """
        batch = as_batch(evals)
        if self.kind == "sf":
            # infeasible rows: v decides, secondary is constant
            return batch.v, np.where(batch.feasible, batch.f, 0.0)
        if self.kind == "ec":
            return np.where(batch.theta <= self.epsilon, 0.0, batch.theta), batch.f
        F = sp_fitness(batch).F
        return F, np.zeros_like(F)

    def compare(self, a: Evaluation, b: Evaluation) -> Ordering:
        if self.kind == "sf":
            return sf_compare(a, b)
        if self.kind == "ec":
            return ec_compare(a, b, self.epsilon)
        k1, _ = self.keys([a, b])
        return _order(k1[0], k1[1])

    def compare_batches(self, a: EvaluationBatch, b: EvaluationBatch) -> np.ndarray:
        """Row-wise ordering of ``a[i]`` against ``b[i]`` as -1 / 0 / +1."""
        n = len(a)
        if self.kind == "sp":
            p, s = self.keys(EvaluationBatch.concat([a, b]))
            pa, sa, pb, sb = p[:n], s[:n], p[n:], s[n:]
        else:
            pa, sa = self.keys(a)
            pb, sb = self.keys(b)
        out = np.where(pa < pb, -1, np.where(pb < pa, 1, 0))
        tie = out == 0
        out[tie] = np.where(sa[tie] < sb[tie], -1, np.where(sb[tie] < sa[tie], 1, 0))
        return out


SF = ComparatorConfig("sf")


def rank_population(population, comparator: ComparatorConfig = SF) -> np.ndarray:
    """Indices best-first; ties keep the original order."""
    if hasattr(population, "evals"):
        population = population.evals
    elif isinstance(population, (list, tuple)) and population and hasattr(population[0], "eval"):
        population = [ind.eval for ind in population]
    primary, secondary = comparator.keys(population)
    # lexsort is stable and sorts by the last key first
    return np.lexsort((secondary, primary))
