"""Mutation strategies, crossover and bound repair.

Mutation works on one subpopulation at a time: a :class:`DonorPool` holds the
donor vectors, their comparator rank and where each target sits in the pool.
All draws are vectorized over the targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

PBEST_GATE = 0.12
EXPLORE_GATE = 0.5


class Mutation(str, Enum):
    SS_PBEST = "ss-pbest"       # state-switch current-to-pbest/1
    SS_RANDR1 = "ss-randr1"     # state-switch rand/1 with tournament base
    PBEST = "pbest"             # plain current-to-pbest/1
    RANDR1 = "randr1"           # plain tournament rand/1
    PBEST_DIV = "pbest-div"     # current-to-pbest with diversity-weighted difference
    RAND1 = "rand1"             # classic rand/1


class Crossover(str, Enum):
    BIN = "bin"
    EXP = "exp"


PBEST_FAMILY = {Mutation.SS_PBEST, Mutation.PBEST, Mutation.PBEST_DIV}


@dataclass(frozen=True)
class Strategy:
    mutation: Mutation
    crossover: Crossover

    @property
    def uses_archive(self) -> bool:
        return self.mutation in PBEST_FAMILY

    def __str__(self):
        return f"{self.mutation.value}/{self.crossover.value}"


_NS = (
    Strategy(Mutation.SS_PBEST, Crossover.BIN),
    Strategy(Mutation.SS_PBEST, Crossover.EXP),
    Strategy(Mutation.SS_RANDR1, Crossover.BIN),
    Strategy(Mutation.SS_RANDR1, Crossover.EXP),
)
_NS_L = (
    Strategy(Mutation.PBEST_DIV, Crossover.BIN),
    Strategy(Mutation.PBEST, Crossover.BIN),
    Strategy(Mutation.SS_PBEST, Crossover.BIN),
    Strategy(Mutation.RAND1, Crossover.BIN),
)
_CROSSOVERS = (Crossover.BIN, Crossover.EXP, Crossover.BIN, Crossover.EXP)


def strategy_for(subpop_index: int, fes: int, fes_max: int, variant: str = "ns",
                 ablation: str | None = None) -> Strategy:
    """Strategy of the 1-based subpopulation ``subpop_index`` out of four.

    ``ablation`` ``"a"``/``"b"`` replaces every mutation by plain
    current-to-pbest / plain tournament rand/1, keeping the crossover pattern.
    """
    if not 1 <= subpop_index <= 4:
        raise ValueError("strategies are defined for exactly four subpopulations")
    s = subpop_index - 1
    if ablation in ("a", "b"):
        mut = Mutation.PBEST if ablation == "a" else Mutation.RANDR1
        return Strategy(mut, _CROSSOVERS[s])
    if variant == "ns-l":
        return _NS_L[s]
    if variant != "ns":
        raise ValueError(f"unknown variant {variant!r}")
    if 10 * fes >= 9 * fes_max and s >= 2:
        return _NS[s - 2]
    return _NS[s]


# -- index draws --------------------------------------------------------------

def draw_distinct(rng: np.random.Generator, high: int, exclude: list[np.ndarray]) -> np.ndarray:
    """One index in ``[0, high)`` per row, different from every ``exclude`` column.

    The excluded indices of a row must be distinct.  A uniform draw over the
    ``high - len(exclude)`` remaining slots is shifted past each excluded index
    in ascending order, which is uniform over the allowed set.
    """
    if high <= len(exclude):
        raise ValueError("not enough candidates for distinct donors")
    ex = np.sort(np.column_stack(exclude), axis=1)
    out = rng.integers(0, high - ex.shape[1], size=ex.shape[0])
    for j in range(ex.shape[1]):
        out += out >= ex[:, j]
    return out


@dataclass(eq=False)
class DonorPool:
    X: np.ndarray           # (P, D) donor vectors
    rank: np.ndarray        # (P,) comparator rank, 0 is best, all distinct
    target_pos: np.ndarray  # (n,) pool row of each target

    @property
    def size(self) -> int:
        return self.X.shape[0]

    @property
    def targets(self) -> np.ndarray:
        return self.X[self.target_pos]

    def ranked(self) -> np.ndarray:
        return np.argsort(self.rank, kind="stable")


def _require(pool: DonorPool, need: int) -> None:
    if pool.size < need:
        raise RuntimeError(f"donor pool of {pool.size} is too small (need {need})")


# -- formulas -----------------------------------------------------------------

def current_to_pbest(x, pbest, r1, r2, F):
    F = np.asarray(F, dtype=float)[..., None] if np.ndim(F) else F
    return x + F * (pbest - x) + F * (r1 - r2)


def current_to_pbest_greedy(x, pbest, F):
    F = np.asarray(F, dtype=float)[..., None] if np.ndim(F) else F
    return x + F * (pbest - x)


def randr1(b1, b2, b3, F, explore_weight=0.0):
    """``b1 + F (b2 - b3) + w (b1 - b2)`` with ``b1`` the tournament winner."""
    F = np.asarray(F, dtype=float)[..., None] if np.ndim(F) else F
    w = np.asarray(explore_weight, dtype=float)[..., None] if np.ndim(explore_weight) else explore_weight
    return b1 + F * (b2 - b3) + w * (b1 - b2)


def rand1(r1, r2, r3, F):
    F = np.asarray(F, dtype=float)[..., None] if np.ndim(F) else F
    return r1 + F * (r2 - r3)


def pbest_difference_mask(pfeas: float, fes: int, fes_max: int, u: np.ndarray) -> np.ndarray:
    """True where the state-switch pbest mutation keeps its difference vector.

    Without feasible members the difference is dropped with probability 0.12
    for ``0.08 < FEs/FES_max < 0.5`` and always for ``0.5 <= FEs/FES_max < 0.9``.
    """
    n = u.shape[0]
    if pfeas > 0:
        return np.ones(n, dtype=bool)
    if 25 * fes > 2 * fes_max and 2 * fes < fes_max:
        return u >= PBEST_GATE
    if 2 * fes >= fes_max and 10 * fes < 9 * fes_max:
        return np.zeros(n, dtype=bool)
    return np.ones(n, dtype=bool)


def _pick_pbest(pool: DonorPool, n: int, p_frac: float, rng) -> np.ndarray:
    p_count = min(pool.size, max(2, int(round(p_frac * pool.size))))
    return pool.ranked()[rng.integers(0, p_count, size=n)]


def _r1_r2_with_archive(pool: DonorPool, archive: np.ndarray | None, rng):
    t = pool.target_pos
    r1 = draw_distinct(rng, pool.size, [t])
    n_arch = 0 if archive is None else archive.shape[0]
    r2 = draw_distinct(rng, pool.size + n_arch, [t, r1])
    union = pool.X if n_arch == 0 else np.vstack([pool.X, archive])
    return pool.X[r1], union[r2]


def mutate_ss_pbest(pool: DonorPool, F, *, pfeas: float, fes: int, fes_max: int,
                    p_frac: float = 0.11, rng: np.random.Generator,
                    archive: np.ndarray | None = None, state_switch: bool = True) -> np.ndarray:
    """Current-to-pbest/1 whose difference term is switched off by pfeas and FEs."""
    _require(pool, 3)
    n = pool.target_pos.size
    x = pool.targets
    pbest = pool.X[_pick_pbest(pool, n, p_frac, rng)]
    xr1, xr2 = _r1_r2_with_archive(pool, archive, rng)
    if state_switch:
        keep = pbest_difference_mask(pfeas, fes, fes_max, rng.random(n))
    else:
        keep = np.ones(n, dtype=bool)
    F = np.broadcast_to(np.asarray(F, dtype=float), (n,))
    return x + F[:, None] * (pbest - x) + (F * keep)[:, None] * (xr1 - xr2)


def mutate_pbest_div(pool: DonorPool, F, *, rdiv: float, cc: float = 0.3, p_frac: float = 0.11,
                     rng: np.random.Generator, archive: np.ndarray | None = None) -> np.ndarray:
    """Current-to-pbest whose difference weight ``cc (1 - rdiv)`` grows as diversity drops."""
    _require(pool, 3)
    n = pool.target_pos.size
    x = pool.targets
    pbest = pool.X[_pick_pbest(pool, n, p_frac, rng)]
    xr1, xr2 = _r1_r2_with_archive(pool, archive, rng)
    F = np.broadcast_to(np.asarray(F, dtype=float), (n,))
    return x + F[:, None] * (pbest - x) + cc * (1.0 - rdiv) * (xr1 - xr2)


def _three_distinct(pool: DonorPool, rng):
    t = pool.target_pos
    r1 = draw_distinct(rng, pool.size, [t])
    r2 = draw_distinct(rng, pool.size, [t, r1])
    r3 = draw_distinct(rng, pool.size, [t, r1, r2])
    return r1, r2, r3


def tournament_order(rank: np.ndarray, r1, r2, r3):
    """Put the best-ranked of each triple first; the other two keep draw order."""
    trip = np.column_stack([r1, r2, r3])
    win = np.argmin(rank[trip], axis=1)
    rows = np.arange(trip.shape[0])
    best = trip[rows, win]
    rest = np.array([[1, 2], [0, 2], [0, 1]])[win]
    return best, trip[rows, rest[:, 0]], trip[rows, rest[:, 1]]


def mutate_ss_randr1(pool: DonorPool, F, *, pfeas: float, rdiv: float, cc: float = 0.3,
                     rng: np.random.Generator, state_switch: bool = True) -> np.ndarray:
    """Tournament rand/1; with no feasible member, half the targets get an extra
    ``cc * rdiv`` pull along the winner-minus-runner-up direction."""
    _require(pool, 4)
    n = pool.target_pos.size
    b1, b2, b3 = tournament_order(pool.rank, *_three_distinct(pool, rng))
    if state_switch and pfeas == 0:
        explore = rng.random(n) < EXPLORE_GATE
    else:
        explore = np.zeros(n, dtype=bool)
    F = np.broadcast_to(np.asarray(F, dtype=float), (n,))
    X = pool.X
    return randr1(X[b1], X[b2], X[b3], F, np.where(explore, cc * rdiv, 0.0))


def mutate_rand1(pool: DonorPool, F, *, rng: np.random.Generator) -> np.ndarray:
    _require(pool, 4)
    r1, r2, r3 = _three_distinct(pool, rng)
    F = np.broadcast_to(np.asarray(F, dtype=float), (pool.target_pos.size,))
    return rand1(pool.X[r1], pool.X[r2], pool.X[r3], F)


# -- crossover ----------------------------------------------------------------

def binomial_crossover(X: np.ndarray, V: np.ndarray, cr, rng: np.random.Generator) -> np.ndarray:
    n, d = X.shape
    cr = np.broadcast_to(np.asarray(cr, dtype=float), (n,))
    mask = rng.random((n, d)) <= cr[:, None]
    mask[np.arange(n), rng.integers(0, d, size=n)] = True
    return np.where(mask, V, X)


def exponential_mask(n: int, d: int, cr, rng: np.random.Generator) -> np.ndarray:
    """Circular runs of mutant coordinates: start uniform, extend while rand <= cr."""
    cr = np.broadcast_to(np.asarray(cr, dtype=float), (n,))
    start = rng.integers(0, d, size=n)
    cont = rng.random((n, max(d - 1, 0))) <= cr[:, None]
    length = 1 + np.cumprod(cont, axis=1).sum(axis=1)
    offset = (np.arange(d)[None, :] - start[:, None]) % d
    return offset < length[:, None]


def exponential_crossover(X: np.ndarray, V: np.ndarray, cr, rng: np.random.Generator) -> np.ndarray:
    n, d = X.shape
    return np.where(exponential_mask(n, d, cr, rng), V, X)


def crossover(kind: Crossover, X, V, cr, rng) -> np.ndarray:
    if kind is Crossover.BIN:
        return binomial_crossover(X, V, cr, rng)
    return exponential_crossover(X, V, cr, rng)


def crossover_bin(target, mutant, cr: float, rng: np.random.Generator) -> np.ndarray:
    return binomial_crossover(np.atleast_2d(target), np.atleast_2d(mutant), cr, rng)[0]


def crossover_exp(target, mutant, cr: float, rng: np.random.Generator) -> np.ndarray:
    return exponential_crossover(np.atleast_2d(target), np.atleast_2d(mutant), cr, rng)[0]


def repair_bounds(v, base, lower, upper) -> np.ndarray:
    """Move out-of-box coordinates halfway between the base and the violated bound."""
    v = np.asarray(v, dtype=float)
    base = np.asarray(base, dtype=float)
    out = np.where(v < lower, (lower + base) / 2.0, v)
    return np.where(v > upper, (upper + base) / 2.0, out)
