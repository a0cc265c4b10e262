"""Constrained test problems and the violation measures built on them.

A problem is ``min f(x)`` subject to ``g_i(x) <= 0`` (``i < q``) and
``h_j(x) = 0`` inside a box.  Constraint maps are vectorized: they take an
``(n, D)`` array and return ``(n,)`` objectives and ``(n, q)`` / ``(n, m - q)``
constraint values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

DEFAULT_DELTA = 1e-4

ArrayFn = Callable[[np.ndarray], np.ndarray]


class EvaluationError(ValueError):
    """Raised when a problem returns a non-finite objective or constraint."""


class UnknownProblemError(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class ConstrainedProblem:
    name: str
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    objective: ArrayFn
    inequalities: ArrayFn | None = None
    equalities: ArrayFn | None = None
    n_ineq: int = 0
    n_eq: int = 0
    known_optimum: tuple[float, np.ndarray] | None = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != (self.dim,) or upper.shape != (self.dim,):
            raise ValueError(f"{self.name}: bounds must have length {self.dim}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError(f"{self.name}: bounds must be finite")
        if np.any(lower >= upper):
            raise ValueError(f"{self.name}: lower bound must be below upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def q(self) -> int:
        return self.n_ineq

    @property
    def m(self) -> int:
        return self.n_ineq + self.n_eq


@dataclass(frozen=True, eq=False)
class Evaluation:
    """Objective and constraint measures of a single point."""

    f: float
    g: np.ndarray
    h: np.ndarray
    G: np.ndarray
    v: float
    theta: float

    @property
    def feasible(self) -> bool:
        return self.v == 0.0


@dataclass(eq=False)
class EvaluationBatch:
    """Column-wise evaluations of ``n`` points (one row per point)."""

    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    G: np.ndarray
    v: np.ndarray
    theta: np.ndarray

    def __len__(self) -> int:
        return self.f.shape[0]

    @property
    def feasible(self) -> np.ndarray:
        return self.v == 0.0

    def __getitem__(self, i: int) -> Evaluation:
        return Evaluation(
            f=float(self.f[i]),
            g=self.g[i].copy(),
            h=self.h[i].copy(),
            G=self.G[i].copy(),
            v=float(self.v[i]),
            theta=float(self.theta[i]),
        )

    def take(self, idx) -> EvaluationBatch:
        return EvaluationBatch(
            self.f[idx], self.g[idx], self.h[idx], self.G[idx], self.v[idx], self.theta[idx]
        )

    def put(self, mask_or_idx, other: EvaluationBatch) -> None:
        """Overwrite rows in place with the rows of ``other``."""
        for name in ("f", "g", "h", "G", "v", "theta"):
            getattr(self, name)[mask_or_idx] = getattr(other, name)

    @classmethod
    def concat(cls, batches: Sequence[EvaluationBatch]) -> EvaluationBatch:
        return cls(*(np.concatenate([getattr(b, n) for b in batches])
                     for n in ("f", "g", "h", "G", "v", "theta")))

    @classmethod
    def from_evaluations(cls, evals: Iterable[Evaluation]) -> EvaluationBatch:
        evals = list(evals)
        if not evals:
            raise ValueError("empty evaluation list")
        return cls(
            f=np.array([e.f for e in evals], dtype=float),
            g=np.array([e.g for e in evals], dtype=float).reshape(len(evals), -1),
            h=np.array([e.h for e in evals], dtype=float).reshape(len(evals), -1),
            G=np.array([e.G for e in evals], dtype=float).reshape(len(evals), -1),
            v=np.array([e.v for e in evals], dtype=float),
            theta=np.array([e.theta for e in evals], dtype=float),
        )


def as_batch(evals) -> EvaluationBatch:
    if isinstance(evals, EvaluationBatch):
        return evals
    if isinstance(evals, Evaluation):
        return EvaluationBatch.from_evaluations([evals])
    return EvaluationBatch.from_evaluations(evals)


class EvalCounter:
    """Function-evaluation counter owned by one run."""

    def __init__(self, count: int = 0):
        self.count = count

    def __repr__(self):
        return f"EvalCounter({self.count})"


def violation_measures(g: np.ndarray, h: np.ndarray, delta: float = DEFAULT_DELTA):
    """Return ``(G, v, theta)`` for row-wise constraint values.

    Equalities get the same ``delta`` slack in ``theta`` as in ``G`` so that
    ``theta == 0`` exactly when ``v == 0``.
    """
    G = np.concatenate([np.maximum(g, 0.0), np.maximum(np.abs(h) - delta, 0.0)], axis=1)
    n, m = G.shape
    if m == 0:
        zeros = np.zeros(n)
        return G, zeros, zeros.copy()
    v = G.sum(axis=1) / m
    theta = G.max(axis=1)
    return G, v, theta


def evaluate_batch(problem: ConstrainedProblem, X: np.ndarray, delta: float = DEFAULT_DELTA,
                   counter: EvalCounter | None = None) -> EvaluationBatch:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if X.shape[1] != problem.dim:
        raise ValueError(f"{problem.name}: expected vectors of length {problem.dim}, got {X.shape[1]}")
    f = np.asarray(problem.objective(X), dtype=float).reshape(n)
    g = (np.asarray(problem.inequalities(X), dtype=float).reshape(n, problem.n_ineq)
         if problem.n_ineq else np.zeros((n, 0)))
    h = (np.asarray(problem.equalities(X), dtype=float).reshape(n, problem.n_eq)
         if problem.n_eq else np.zeros((n, 0)))
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        raise EvaluationError(f"{problem.name}: non-finite objective or constraint value")
    G, v, theta = violation_measures(g, h, delta)
    if counter is not None:
        counter.count += n
    return EvaluationBatch(f, g, h, G, v, theta)


def evaluate(problem: ConstrainedProblem, x, delta: float = DEFAULT_DELTA,
             counter: EvalCounter | None = None) -> Evaluation:
    """Evaluate one point; bumps ``counter`` by one."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("evaluate expects a single vector; use evaluate_batch")
    return evaluate_batch(problem, x[None, :], delta, counter)[0]


# -- registry -----------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    name: str
    factory: Callable[[int], ConstrainedProblem]
    min_dim: int
    max_dim: int
    default_dim: int
    description: str = ""
    tags: tuple[str, ...] = field(default_factory=tuple)

    def supports(self, dim: int) -> bool:
        return self.min_dim <= dim <= self.max_dim

    def resolve_dim(self, dim: int) -> int:
        """Requested ``dim`` if supported, else the closest supported one."""
        return min(max(dim, self.min_dim), self.max_dim)


_REGISTRY: dict[str, ProblemSpec] = {}


def register_problem(name: str, factory: Callable[[int], ConstrainedProblem], *,
                     min_dim: int = 1, max_dim: int = 100, default_dim: int | None = None,
                     description: str = "", tags: Sequence[str] = ()) -> ProblemSpec:
    key = name.upper()
    if key in _REGISTRY:
        raise ValueError(f"problem {name!r} already registered")
    spec = ProblemSpec(key, factory, min_dim, max_dim,
                       default_dim if default_dim is not None else min(10, max_dim),
                       description, tuple(tags))
    _REGISTRY[key] = spec
    return spec


def get_problem_spec(name: str) -> ProblemSpec:
    try:
        return _REGISTRY[name.upper()]
    except KeyError:
        raise UnknownProblemError(f"unknown problem {name!r}") from None


def problem_names(tag: str | None = None) -> list[str]:
    return [n for n, s in _REGISTRY.items() if tag is None or tag in s.tags]


def make_problem(name: str, dim: int | None = None) -> ConstrainedProblem:
    spec = get_problem_spec(name)
    dim = spec.default_dim if dim is None else int(dim)
    if not spec.supports(dim):
        raise ValueError(f"{spec.name} does not support D={dim} "
                         f"(allowed {spec.min_dim}..{spec.max_dim})")
    return spec.factory(dim)


def manifest() -> list[dict]:
    """Describe every registered problem at its default dimension."""
    rows = []
    for spec in _REGISTRY.values():
        p = spec.factory(spec.default_dim)
        opt = None
        if p.known_optimum is not None:
            opt = {"f": p.known_optimum[0], "x": p.known_optimum[1].tolist()}
        rows.append({
            "name": spec.name,
            "min_dim": spec.min_dim,
            "max_dim": spec.max_dim,
            "default_dim": spec.default_dim,
            "n_ineq": p.n_ineq,
            "n_eq": p.n_eq,
            "known_optimum": opt,
            "description": spec.description,
        })
    return rows


# -- built-in suite -----------------------------------------------------------
# Module-level callables so that problems survive pickling into worker processes.

def _sphere(X):
    return np.sum(X * X, axis=1)


def _sum(X):
    return np.sum(X, axis=1)


def _one_minus_x1(X):
    return (1.0 - X[:, 0])[:, None]


def _ball(X):
    return (np.sum(X * X, axis=1) - 1.0)[:, None]


def _line(X):
    return (np.sum(X, axis=1) - 1.0)[:, None]


def _rosen(X):
    return (1.0 - X[:, 0]) ** 2 + 100.0 * (X[:, 1] - X[:, 0] ** 2) ** 2


def _rosen_cubic_line(X):
    return np.column_stack([(X[:, 0] - 1.0) ** 3 - X[:, 1] + 1.0, X[:, 0] + X[:, 1] - 2.0])


def _tight_pair(X):
    return np.column_stack([1.0 - X[:, 0], X[:, 0] + 1.0])


def _sph_ineq(dim):
    x_star = np.zeros(dim)
    x_star[0] = 1.0
    return ConstrainedProblem("P-SPH-INEQ", dim, np.full(dim, -10.0), np.full(dim, 10.0),
                              _sphere, _one_minus_x1, n_ineq=1, known_optimum=(1.0, x_star))


def _lin_ball(dim):
    x_star = np.full(dim, -1.0 / math.sqrt(dim))
    return ConstrainedProblem("P-LIN-BALL", dim, np.full(dim, -2.0), np.full(dim, 2.0),
                              _sum, _ball, n_ineq=1, known_optimum=(-math.sqrt(dim), x_star))


def _eq_line(dim):
    return ConstrainedProblem("P-EQ-LINE", dim, np.full(dim, -5.0), np.full(dim, 5.0),
                              _sphere, equalities=_line, n_eq=1,
                              known_optimum=(1.0 / dim, np.full(dim, 1.0 / dim)))


def _rosen_cubic(dim):
    return ConstrainedProblem("P-ROSEN-CUBIC", 2, np.array([-1.5, -0.5]), np.array([1.5, 2.5]),
                              _rosen, _rosen_cubic_line, n_ineq=2,
                              known_optimum=(0.0, np.array([1.0, 1.0])))


def _infeas_tight(dim):
    return ConstrainedProblem("P-INFEAS-TIGHT", dim, np.full(dim, -10.0), np.full(dim, 10.0),
                              _sphere, _tight_pair, n_ineq=2)


register_problem("P-SPH-INEQ", _sph_ineq, default_dim=10, tags=("feasible",),
                 description="sphere with a single active half-space constraint")
register_problem("P-LIN-BALL", _lin_ball, default_dim=10, tags=("feasible",),
                 description="linear objective inside the unit ball")
register_problem("P-EQ-LINE", _eq_line, default_dim=10, tags=("feasible",),
                 description="sphere on the hyperplane sum(x) = 1")
register_problem("P-ROSEN-CUBIC", _rosen_cubic, min_dim=2, max_dim=2, default_dim=2,
                 tags=("feasible",), description="Rosenbrock with cubic and line constraints")
register_problem("P-INFEAS-TIGHT", _infeas_tight, default_dim=2, tags=("infeasible",),
                 description="contradictory constraints x1 >= 1 and x1 <= -1")
