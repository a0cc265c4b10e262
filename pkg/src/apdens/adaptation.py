"""Success-history adaptation of Cr and F, and the discrete parameter pool."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_POOL = ((0.9, 0.9), (0.5, 0.5), (0.9, 0.2), (0.6, 0.8))

SIGMA = 0.1
MAX_F_RESAMPLES = 10
F_FALLBACK = 0.5


@dataclass
class SuccessRecords:
    """Parameters of the trials that beat their parents in the current generation."""

    cr: list[float] = field(default_factory=list)
    f: list[float] = field(default_factory=list)
    delta_f: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.cr)

    def add(self, cr: float, f: float, f_parent: float, f_trial: float) -> None:
        self.cr.append(float(cr))
        self.f.append(float(f))
        self.delta_f.append(abs(float(f_parent) - float(f_trial)))

    def extend(self, cr, f, f_parent, f_trial) -> None:
        self.cr.extend(np.asarray(cr, dtype=float).tolist())
        self.f.extend(np.asarray(f, dtype=float).tolist())
        self.delta_f.extend(np.abs(np.asarray(f_parent, float) - np.asarray(f_trial, float)).tolist())

    def clear(self) -> None:
        self.cr.clear()
        self.f.clear()
        self.delta_f.clear()

    def weights(self) -> np.ndarray:
        """Improvement-proportional weights; uniform when no trial improved ``f``."""
        d = np.asarray(self.delta_f, dtype=float)
        total = d.sum()
        if total == 0.0:
            return np.full(len(d), 1.0 / len(d))
        return d / total

    def values(self, name: str) -> np.ndarray:
        if name not in ("cr", "f"):
            raise ValueError(f"unknown field {name!r}")
        return np.asarray(getattr(self, name), dtype=float)


def record_success(records: SuccessRecords, cr: float, f: float, f_parent: float,
                   f_trial: float) -> None:
    records.add(cr, f, f_parent, f_trial)


def weighted_arithmetic_mean(records: SuccessRecords, name: str) -> float:
    if not len(records):
        raise ValueError("no success records")
    return float(np.dot(records.weights(), records.values(name)))


def weighted_lehmer_mean(records: SuccessRecords, name: str) -> float:
    if not len(records):
        raise ValueError("no success records")
    w, x = records.weights(), records.values(name)
    den = np.dot(w, x)
    if den == 0.0:
        return 0.0
    return float(np.dot(w, x * x) / den)


class SuccessHistoryArchive:
    """Circular memory of ``s_size`` (mu_cr, mu_f) pairs.

    By default mu_cr takes the weighted arithmetic mean and mu_f the weighted
    Lehmer mean of the successful values; ``lehmer_cr=True`` swaps the two
    (Lehmer for Cr, arithmetic for F).  The arithmetic mean lets F drift
    towards zero and the population stalls on equality constraints.

    ``H`` is 1-based to match the usual notation; ``cursor`` is the 0-based slot.
    """

    def __init__(self, s_size: int = 6, lehmer_cr: bool = False):
        if s_size < 1:
            raise ValueError("s_size must be positive")
        self.lehmer_cr = lehmer_cr
        self.mu_cr = np.full(s_size, 0.5)
        self.mu_f = np.full(s_size, 0.5)
        self.cursor = 0

    @property
    def size(self) -> int:
        return self.mu_cr.size

    @property
    def H(self) -> int:
        return self.cursor + 1

    def update(self, records: SuccessRecords) -> None:
        if not len(records):
            return
        if self.lehmer_cr:
            self.mu_cr[self.cursor] = weighted_lehmer_mean(records, "cr")
            self.mu_f[self.cursor] = weighted_arithmetic_mean(records, "f")
        else:
            self.mu_cr[self.cursor] = weighted_arithmetic_mean(records, "cr")
            self.mu_f[self.cursor] = weighted_lehmer_mean(records, "f")
        self.cursor = (self.cursor + 1) % self.size

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``n`` (cr, f) pairs, each from a uniformly chosen slot."""
        slots = rng.integers(0, self.size, size=n)
        cr = np.clip(rng.normal(self.mu_cr[slots], SIGMA), 0.0, 1.0)
        mu_f = self.mu_f[slots]
        f = rng.normal(mu_f, SIGMA)
        bad = f <= 0.0
        tries = 0
        while bad.any() and tries < MAX_F_RESAMPLES:
            f[bad] = rng.normal(mu_f[bad], SIGMA)
            bad = f <= 0.0
            tries += 1
        f[bad] = F_FALLBACK
        return cr, np.minimum(f, 1.0)


def update_memory(archive: SuccessHistoryArchive, records: SuccessRecords) -> None:
    archive.update(records)


def sample_cr_f(archive: SuccessHistoryArchive, rng: np.random.Generator) -> tuple[float, float]:
    cr, f = archive.sample(rng, 1)
    return float(cr[0]), float(f[0])


def floor_probabilities(p: np.ndarray, floor: float) -> np.ndarray:
    """Raise entries below ``floor`` to it, shrinking the rest proportionally."""
    p = np.asarray(p, dtype=float)
    if floor * p.size > 1.0:
        raise ValueError("probability floor too large for pool size")
    p = p / p.sum()
    pinned = np.zeros(p.size, dtype=bool)
    while True:
        low = (p < floor) & ~pinned
        if not low.any():
            return p
        pinned |= low
        free = ~pinned
        rest = 1.0 - floor * np.count_nonzero(pinned)
        out = np.empty_like(p)
        out[pinned] = floor
        if free.any():
            out[free] = p[free] / p[free].sum() * rest
        p = out


def pool_update(pool: "ParameterPool", successes) -> None:
    """Refit pair probabilities from the success counts of the last window."""
    s = np.asarray(successes, dtype=float)
    raw = (s + pool.s0) / np.sum(s + pool.s0)
    pool.probabilities = floor_probabilities(raw, pool.floor)


class ParameterPool:
    """Discrete (cr, f) pairs chosen with success-driven probabilities."""

    def __init__(self, pairs=DEFAULT_POOL, lp: int = 50, floor: float = 0.05, s0: float = 1.0):
        self.pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
        if self.pairs.shape[0] == 0:
            raise ValueError("parameter pool is empty")
        self.lp = int(lp)
        self.floor = floor
        self.s0 = s0
        self.probabilities = np.full(len(self.pairs), 1.0 / len(self.pairs))
        self.successes = np.zeros(len(self.pairs), dtype=int)
        self.attempts = np.zeros(len(self.pairs), dtype=int)
        self.generations = 0

    def select(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(pair index, cr, f)`` arrays of length ``n``."""
        idx = rng.choice(len(self.pairs), size=n, p=self.probabilities)
        return idx, self.pairs[idx, 0].copy(), self.pairs[idx, 1].copy()

    def record(self, idx, success) -> None:
        idx = np.asarray(idx, dtype=int)
        np.add.at(self.attempts, idx, 1)
        np.add.at(self.successes, idx[np.asarray(success, dtype=bool)], 1)

    def end_generation(self) -> None:
        self.generations += 1
        if self.generations % self.lp == 0:
            pool_update(self, self.successes)
            self.successes[:] = 0
            self.attempts[:] = 0


def pool_select(pool: ParameterPool, rng: np.random.Generator) -> tuple[float, float]:
    _, cr, f = pool.select(rng, 1)
    return float(cr[0]), float(f[0])
