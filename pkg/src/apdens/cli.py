"""Command-line front end: ``apdens solve|bench|compare|ablate|complexity|problems``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import bench
from .config import ConfigError, SolverConfig, dump_config, load_config
from .problems import UnknownProblemError, make_problem, manifest, problem_names
from .solver import de_bin_baseline, run

OUTPUT_ENV = "APDE_OUTPUT_DIR"
EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class CliError(Exception):
    pass


def _output_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTPUT_ENV) or "apde-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> SolverConfig:
    cfg = load_config(args.config, args.set or ())
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML file with solver settings")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one setting (repeatable, applied after --config)")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./apde-out)")
    p.add_argument("--seed", type=int, help="base seed; campaign run i uses seed + i")


def _add_campaign(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problems", nargs="+", metavar="NAME[:D]",
                   help="problems to run (default: the whole built-in suite)")
    p.add_argument("--dim", type=int, help="dimension for problems given without :D")
    p.add_argument("--runs", type=int, default=25)
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")


def _problems(args, default=None) -> list[tuple[str, int]]:
    names = args.problems or default or problem_names()
    out = []
    for item in names:
        name, _, d = item.partition(":")
        dim = int(d) if d else args.dim
        out.append((name, dim))
    return bench.resolve_problems(out)


def _write_metrics(metrics, out: Path, stem: str, fmt: str) -> list[Path]:
    paths = []
    if fmt in ("csv", "both"):
        paths += [out / f"{stem}.csv", out / f"{stem}-runs.csv"]
        bench.write_metrics_csv(metrics, paths[-2])
        bench.write_runs_csv(metrics, paths[-1])
    if fmt in ("json", "both"):
        paths.append(out / f"{stem}.json")
        bench.write_metrics_json(metrics, paths[-1])
    return paths


def _print_table(metrics) -> None:
    print(f"{'problem':<16} {'D':>3} {'algo':<10} {'runs':>4} {'FR':>6} {'mean_vio':>11} "
          f"{'mean_obj':>14} SR")
    for m in metrics:
        print(f"{m.problem:<16} {m.dim:>3} {m.algo:<10} {m.runs:>4} {m.FR:>6.2f} "
              f"{m.mean_vio:>11.3e} {m.mean_obj:>14.8g} {'yes' if m.SR_success else 'no'}")


def _safe(name: str) -> str:
    return name.replace("/", "_").replace("(", "").replace(")", "")


# -- commands -------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = _config(args)
    problem = make_problem(args.problem, args.dim)
    kind, cfg = bench.resolve_algorithm(args.algo, cfg)
    res = de_bin_baseline(problem, cfg) if kind == "de-bin" else run(problem, cfg)
    ev = res.final_eval
    out = _output_dir(args)
    trace = out / f"trace-{problem.name}-D{problem.dim}-{res.algo}-s{cfg.seed}.csv"
    bench.write_trace_csv(res, trace)
    (out / "effective-config.toml").write_text(dump_config(cfg))
    print(f"{problem.name} D={problem.dim} {res.algo} seed={cfg.seed}: f={ev.f:.10g} v={ev.v:.3e} "
          f"feasible={'yes' if ev.feasible else 'no'} FEs={res.fes_used} "
          f"generations={res.generations}")
    print(f"trace: {trace}")
    return EXIT_OK if ev.feasible else EXIT_INFEASIBLE


def cmd_bench(args) -> int:
    cfg = _config(args)
    metrics = bench.run_campaign(_problems(args), args.variant, args.runs, cfg, args.parallel)
    _print_table(metrics)
    print(bench.sr_summary(metrics))
    for p in _write_metrics(metrics, _output_dir(args), f"metrics-{_safe(args.variant)}", args.format):
        print(f"wrote {p}")
    return EXIT_OK


def _load_results(path: str):
    p = Path(path)
    if not p.exists():
        raise CliError(f"no such result file: {path}")
    if p.suffix == ".json":
        return bench.read_metrics_json(p)
    if p.name.endswith("-runs.csv"):
        return bench.read_runs_csv(p)
    runs = p.with_name(p.stem + "-runs.csv")
    if p.suffix == ".csv" and runs.exists():
        return bench.read_runs_csv(runs)
    raise CliError(f"{path}: expected a metrics .json or a per-run .csv file")


def cmd_compare(args) -> int:
    a, b = _load_results(args.result_a), _load_results(args.result_b)
    try:
        comp = bench.compare(a, b)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    name_a = a[0].algo if a else "a"
    name_b = b[0].algo if b else "b"
    for line in comp.lines(name_a, name_b):
        print(line)
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _config(args)
    plist = _problems(args, default=bench.feasible_suite())
    variants = args.variants or ["APDE-NS-A", "APDE-NS-B", "const-np(5)", "const-np(10)",
                                 "const-np(15)", "const-np(20)"]
    out = _output_dir(args)
    ref = bench.run_campaign(plist, "apde-ns", args.runs, cfg, args.parallel)
    _write_metrics(ref, out, "ablate-apde-ns", args.format)
    for vid in variants:
        metrics = bench.run_campaign(plist, vid, args.runs, cfg, args.parallel)
        _write_metrics(metrics, out, f"ablate-{_safe(vid.lower())}", args.format)
        _print_table(metrics)
        for line in bench.compare(ref, metrics).lines("apde-ns", vid.lower()):
            print(line)
        print()
    return EXIT_OK


def cmd_complexity(args) -> int:
    cfg = _config(args)
    names = args.problems or None
    res = bench.complexity(names, cfg, args.evaluations)
    print(f"{'T1':>10} {'T2':>10} {'(T2-T1)/T1':>12}")
    print(f"{res.T1:>10.4f} {res.T2:>10.4f} {res.ratio:>12.4f}")
    return EXIT_OK


def cmd_problems(args) -> int:
    for row in manifest():
        lo, hi = row["min_dim"], row["max_dim"]
        dims = str(lo) if lo == hi else f"{lo}..{hi}"
        opt = row["known_optimum"]
        fstar = f"{opt['f']:.6g}" if opt is not None else "none"
        print(f"{row['name']:<16} D={dims:<7} g={row['n_ineq']} h={row['n_eq']} f*={fstar:<10} "
              f"{row['description']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apdens", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="single run; writes a trace CSV")
    p.add_argument("--problem", required=True)
    p.add_argument("--dim", type=int)
    p.add_argument("--algo", default="auto",
                   help="auto, apde-ns, apde-ns-l, de-bin, APDE-NS-A, APDE-NS-B or const-np(m)")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="multi-run campaign with metric tables")
    p.add_argument("--variant", default="auto")
    _add_common(p)
    _add_campaign(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compare", help="criterion I and sign-test verdicts for two campaigns")
    p.add_argument("result_a")
    p.add_argument("result_b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ablate", help="ablation variants against apde-ns")
    p.add_argument("--variants", nargs="+")
    _add_common(p)
    _add_campaign(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("complexity", help="T1, T2 and (T2-T1)/T1 timing")
    p.add_argument("--problems", nargs="+")
    p.add_argument("--evaluations", type=int, default=10000)
    _add_common(p)
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("problems", help="list the built-in problems")
    p.set_defaults(func=cmd_problems)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnknownProblemError as exc:
        print(f"error: {exc.args[0] if exc.args else 'unknown problem'}", file=sys.stderr)
    except (ConfigError, CliError, bench.AlgorithmError, bench.CampaignError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
