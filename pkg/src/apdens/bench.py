"""Multi-run campaigns, the ranking criteria, the sign test and timing."""

from __future__ import annotations

import csv
import json
import math
import re
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import SolverConfig, config_to_dict, config_from_dict
from .problems import get_problem_spec, make_problem, problem_names, evaluate_batch
from .solver import TRACE_COLUMNS, RunResult, de_bin_baseline, run

METRIC_COLUMNS = ("problem", "D", "algo", "runs", "FR", "mean_vio", "mean_obj", "SR")
RUN_COLUMNS = ("problem", "D", "algo", "seed", "f", "v", "feasible", "fes_used", "generations")

SR_THRESHOLD = 0.3
ALPHA = 0.05

A_BETTER = "a-better"
B_BETTER = "b-better"
NO_DIFFERENCE = "no-difference"


class CampaignError(RuntimeError):
    pass


class AlgorithmError(ValueError):
    pass


@dataclass(frozen=True)
class RunRecord:
    problem: str
    dim: int
    algo: str
    seed: int
    f: float
    v: float
    feasible: bool
    fes_used: int
    generations: int

    @classmethod
    def from_result(cls, res: RunResult) -> RunRecord:
        ev = res.final_eval
        return cls(res.problem, res.dim, res.algo, res.seed, float(ev.f), float(ev.v),
                   bool(ev.feasible), int(res.fes_used), int(res.generations))


@dataclass(frozen=True)
class ProblemMetrics:
    problem: str
    dim: int
    algo: str
    records: tuple[RunRecord, ...]
    FR: float = field(init=False)
    mean_vio: float = field(init=False)
    mean_obj: float = field(init=False)

    def __post_init__(self):
        if not self.records:
            raise ValueError("metrics need at least one run")
        recs = self.records
        object.__setattr__(self, "FR", sum(r.feasible for r in recs) / len(recs))
        object.__setattr__(self, "mean_vio", math.fsum(r.v for r in recs) / len(recs))
        object.__setattr__(self, "mean_obj", math.fsum(r.f for r in recs) / len(recs))

    @property
    def runs(self) -> int:
        return len(self.records)

    @property
    def SR_success(self) -> bool:
        return sr_success(self.FR)

    def row(self) -> dict:
        return {"problem": self.problem, "D": self.dim, "algo": self.algo, "runs": self.runs,
                "FR": self.FR, "mean_vio": self.mean_vio, "mean_obj": self.mean_obj,
                "SR": self.SR_success}


def sr_success(fr: float) -> bool:
    return fr > SR_THRESHOLD


# -- algorithms -----------------------------------------------------------------

_CONST_NP = re.compile(r"const-np\((\d+)\)$")


def ablation_variant(variant_id: str, config: SolverConfig | None = None) -> SolverConfig:
    """Config for ``APDE-NS-A``, ``APDE-NS-B`` or ``const-np(m)``."""
    config = config or SolverConfig()
    key = variant_id.strip().lower()
    if key == "apde-ns-a":
        return config.replace(variant="ns", ablation="a")
    if key == "apde-ns-b":
        return config.replace(variant="ns", ablation="b")
    m = _CONST_NP.match(key)
    if m and int(m.group(1)) > 0:
        return config.replace(variant="ns", const_np=int(m.group(1)))
    raise AlgorithmError(f"unknown ablation variant {variant_id!r}")


def resolve_algorithm(algo: str, config: SolverConfig | None = None) -> tuple[str, SolverConfig]:
    """Map an algorithm id onto (runner kind, config).  Kinds are ``apde`` and ``de-bin``."""
    config = config or SolverConfig()
    key = algo.strip().lower()
    if key in ("de-bin", "debin", "de/rand/1/bin"):
        return "de-bin", config
    if key in ("auto", "apde"):
        return "apde", config
    if key in ("ns", "apde-ns"):
        return "apde", config.replace(variant="ns")
    if key in ("ns-l", "apde-ns-l"):
        return "apde", config.replace(variant="ns-l")
    return "apde", ablation_variant(key, config)


def _label(algo: str) -> str:
    return algo.strip().lower()


def _one_run(task) -> RunRecord:
    kind, label, name, dim, cfg_dict = task
    cfg = config_from_dict(cfg_dict)
    problem = make_problem(name, dim)
    try:
        res = de_bin_baseline(problem, cfg) if kind == "de-bin" else run(problem, cfg)
    except Exception as exc:  # pragma: no cover - reported with context below
        raise CampaignError(f"run failed on {name} (D={dim}) seed {cfg.seed}: {exc}") from exc
    rec = RunRecord.from_result(res)
    return RunRecord(rec.problem, rec.dim, label, rec.seed, rec.f, rec.v, rec.feasible,
                     rec.fes_used, rec.generations)


def resolve_problems(problems) -> list[tuple[str, int]]:
    out = []
    for p in problems:
        name, dim = (p, None) if isinstance(p, str) else p
        spec = get_problem_spec(name)
        out.append((spec.name, spec.default_dim if dim is None else spec.resolve_dim(dim)))
    return out


def run_campaign(problems, algo: str = "auto", runs: int = 25, config: SolverConfig | None = None,
                 parallelism: int = 1) -> list[ProblemMetrics]:
    """``runs`` seeded runs per problem; run i uses ``config.seed + i``.

    ``problems`` holds names (default dimension) or ``(name, dim)`` pairs.
    Results do not depend on ``parallelism``.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    kind, cfg = resolve_algorithm(algo, config)
    label = _label(algo)
    plist = resolve_problems(problems)
    base = config_to_dict(cfg)
    tasks = [(kind, label, name, dim, dict(base, seed=cfg.seed + i))
             for name, dim in plist for i in range(runs)]
    if parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as ex:
            records = list(ex.map(_one_run, tasks))
    else:
        records = [_one_run(t) for t in tasks]
    return [ProblemMetrics(name, dim, label, tuple(records[j * runs:(j + 1) * runs]))
            for j, (name, dim) in enumerate(plist)]


def feasible_suite() -> list[str]:
    return problem_names("feasible")


# -- comparisons ----------------------------------------------------------------

def criterion_one(a: ProblemMetrics, b: ProblemMetrics) -> str:
    """``+`` if ``a`` ranks better, ``-`` if worse, ``=`` on a full tie.

    Keys: FR (higher first), then mean violation, then mean objective.
    """
    ka = (-a.FR, a.mean_vio, a.mean_obj)
    kb = (-b.FR, b.mean_vio, b.mean_obj)
    if ka < kb:
        return "+"
    if kb < ka:
        return "-"
    return "="


def _run_key(r: RunRecord) -> tuple:
    return (not r.feasible, r.v, r.f)


def _binom_upper_tail(n: int, w: int) -> float:
    return sum(math.comb(n, i) for i in range(w, n + 1)) / 2 ** n


def sign_test_critical(n: int, alpha: float = ALPHA) -> int:
    """Smallest ``w`` with two-sided binomial tail ``2 P(X >= w) < alpha``.

    Significance needs wins strictly above it, which gives the usual
    "more than 18 of 25" rule.
    """
    if n < 1:
        raise ValueError("n must be positive")
    for w in range(n + 1):
        if 2 * _binom_upper_tail(n, w) < alpha:
            return w
    return n


def count_wins(runs_a, runs_b) -> tuple[int, int]:
    runs_a, runs_b = list(runs_a), list(runs_b)
    if len(runs_a) != len(runs_b):
        raise ValueError("sign test needs equal run counts")
    wins_a = wins_b = 0
    for ra, rb in zip(runs_a, runs_b):
        ka, kb = _run_key(ra), _run_key(rb)
        wins_a += ka < kb
        wins_b += kb < ka
    return wins_a, wins_b


def sign_test_from_wins(wins_a: int, wins_b: int, n: int) -> str:
    crit = sign_test_critical(n)
    if wins_a > crit:
        return A_BETTER
    if wins_b > crit:
        return B_BETTER
    return NO_DIFFERENCE


def sign_test(runs_a, runs_b) -> str:
    """Pairwise sign test on per-run records paired by index."""
    runs_a, runs_b = list(runs_a), list(runs_b)
    wins_a, wins_b = count_wins(runs_a, runs_b)
    return sign_test_from_wins(wins_a, wins_b, len(runs_a))


_SIGN_SYMBOL = {A_BETTER: "+", B_BETTER: "-", NO_DIFFERENCE: "="}


@dataclass(frozen=True)
class Comparison:
    problems: tuple[str, ...]
    criterion_one: tuple[str, ...]
    sign_test: tuple[str, ...]

    @staticmethod
    def _tally(symbols) -> dict:
        symbols = list(symbols)
        return {s: sum(1 for v in symbols if v == s) for s in "+=-"}

    @property
    def tally_one(self) -> dict:
        return self._tally(self.criterion_one)

    @property
    def tally_sign(self) -> dict:
        return self._tally(_SIGN_SYMBOL[v] for v in self.sign_test)

    def lines(self, name_a: str = "a", name_b: str = "b") -> list[str]:
        out = [f"{'problem':<16} {'criterion I':>11} {'sign test':>14}"]
        for p, c, s in zip(self.problems, self.criterion_one, self.sign_test):
            out.append(f"{p:<16} {c:>11} {s:>14}")
        t1, t2 = self.tally_one, self.tally_sign
        out.append(f"{name_a} vs {name_b}  +/=/- criterion I: {t1['+']}/{t1['=']}/{t1['-']}"
                   f"  sign test: {t2['+']}/{t2['=']}/{t2['-']}")
        return out


def compare(a: list[ProblemMetrics], b: list[ProblemMetrics]) -> Comparison:
    ka = {(m.problem, m.dim): m for m in a}
    kb = {(m.problem, m.dim): m for m in b}
    if set(ka) != set(kb):
        raise ValueError("result sets cover different problems")
    keys = [(m.problem, m.dim) for m in a]
    for k in keys:
        if ka[k].runs != kb[k].runs:
            raise ValueError(f"run counts differ on {k[0]}")
    return Comparison(tuple(k[0] for k in keys),
                      tuple(criterion_one(ka[k], kb[k]) for k in keys),
                      tuple(sign_test(ka[k].records, kb[k].records) for k in keys))


# -- complexity -----------------------------------------------------------------

@dataclass(frozen=True)
class Complexity:
    T1: float
    T2: float

    @property
    def ratio(self) -> float:
        return (self.T2 - self.T1) / self.T1


def complexity(problems=None, config: SolverConfig | None = None, evaluations: int = 10000) -> Complexity:
    """T1: raw evaluations, T2: full solver runs of the same budget, summed over the suite.

    Raw evaluations go through the same batched path as the solver, one
    initial-population-sized chunk at a time.
    """
    config = config or SolverConfig()
    plist = resolve_problems(problems if problems is not None else problem_names())
    rng = np.random.default_rng(config.seed)
    t1 = t2 = 0.0
    for name, dim in plist:
        problem = make_problem(name, dim)
        X = rng.uniform(problem.lower, problem.upper, size=(evaluations, dim))
        chunk = config.resolved_np_max(dim)
        start = time.perf_counter()
        for i in range(0, evaluations, chunk):
            evaluate_batch(problem, X[i:i + chunk], config.delta)
        t1 += time.perf_counter() - start
        start = time.perf_counter()
        run(problem, config.replace(fes_max=evaluations))
        t2 += time.perf_counter() - start
    result = Complexity(t1, t2)
    if result.ratio < 0:
        warnings.warn("algorithm time below raw evaluation time; timing is noisy", RuntimeWarning)
    return result


# -- files ----------------------------------------------------------------------

def write_metrics_csv(metrics, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS)
        w.writeheader()
        for m in metrics:
            row = m.row()
            row.update(FR=repr(m.FR), mean_vio=repr(m.mean_vio), mean_obj=repr(m.mean_obj))
            w.writerow(row)


def write_runs_csv(metrics, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUN_COLUMNS)
        for m in metrics:
            for r in m.records:
                w.writerow([r.problem, r.dim, r.algo, r.seed, repr(r.f), repr(r.v),
                            r.feasible, r.fes_used, r.generations])


def metrics_to_json(metrics) -> dict:
    return {"metrics": [dict(m.row(), records=[asdict(r) for r in m.records]) for m in metrics]}


def write_metrics_json(metrics, path) -> None:
    Path(path).write_text(json.dumps(metrics_to_json(metrics), indent=2))


def metrics_from_json(doc: dict) -> list[ProblemMetrics]:
    out = []
    for row in doc["metrics"]:
        recs = tuple(RunRecord(**r) for r in row["records"])
        out.append(ProblemMetrics(row["problem"], int(row["D"]), row["algo"], recs))
    return out


def read_metrics_json(path) -> list[ProblemMetrics]:
    return metrics_from_json(json.loads(Path(path).read_text()))


def read_metrics_csv(path) -> list[dict]:
    """Metric rows with numbers parsed; per-run records are not part of this table."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["D"], r["runs"] = int(r["D"]), int(r["runs"])
        for k in ("FR", "mean_vio", "mean_obj"):
            r[k] = float(r[k])
        r["SR"] = r["SR"] == "True"
    return rows


def read_runs_csv(path) -> list[ProblemMetrics]:
    groups: dict = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rec = RunRecord(r["problem"], int(r["D"]), r["algo"], int(r["seed"]), float(r["f"]),
                            float(r["v"]), r["feasible"] == "True", int(r["fes_used"]),
                            int(r["generations"]))
            groups.setdefault((rec.problem, rec.dim, rec.algo), []).append(rec)
    return [ProblemMetrics(p, d, a, tuple(recs)) for (p, d, a), recs in groups.items()]


def write_trace_csv(result: RunResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for rec in result.trace:
            w.writerow([rec.generation, rec.fes, rec.np, repr(rec.pfeas), repr(rec.rdiv),
                        repr(rec.best_f), repr(rec.best_v)])


def sr_summary(metrics) -> str:
    ok = sum(m.SR_success for m in metrics)
    return f"SR {ok}/{len(metrics)}  failures {len(metrics) - ok}"
