"""Command-line entry point: ``qwflo <verb> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bench import (
    ExperimentConfig,
    emit_outputs,
    format_scaling_table,
    heatmap_svg,
    line_svg,
    load_config,
    run_benchmark,
    run_single,
    scaling_table,
)
from .errors import QwfloError
from .farm import FarmProblem, WindRegime, load_problem, save_problem, site_position, windspeed_field, write_field_csv
from .presets import PRESET_NAMES, load_preset
from .qubo import assemble_qubo, heatmap_data, lambda_scan, save_qubo, write_heatmap_csv


def _problem(args) -> FarmProblem:
    if getattr(args, "problem", None):
        problem = load_problem(args.problem)
        return problem if args.lam is None else problem.with_weights(args.lam)
    if not args.preset or args.L is None:
        raise QwfloError("give either --problem FILE or --preset NAME with -L SIZE")
    return load_preset(args.preset, args.L, 200.0 if args.lam is None else args.lam)


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("-L", type=int, help="grid side count")
    p.add_argument("--problem", help="problem JSON document instead of a preset")
    p.add_argument("--lam", type=float, default=None, help="weight for all three constraints")


def _out(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_build(args) -> int:
    problem = _problem(args)
    out = _out(args.out)
    q = assemble_qubo(problem)
    save_qubo(q, out / f"{problem.name}_qubo.txt")
    save_problem(problem, out / f"{problem.name}_problem.json")
    print(f"{problem.name}: N={q.dimension}, offset={q.offset:.3f} -> {out}")
    return 0


def cmd_solve(args) -> int:
    problem = _problem(args)
    if args.method in ("sqoe", "pce") and args.param is None:
        raise QwfloError(f"--param is required for {args.method}")
    cfg = ExperimentConfig(problem.name, (problem.grid.side_count,),
                           args.method, (args.param,), samples=1, seed=args.seed, shots=args.shots,
                           warm_start=not args.cold)
    result = run_single(cfg, problem, args.param, args.seed)
    if args.trace:
        result.write_trace(args.trace)
    print(json.dumps({
        "problem": problem.name,
        "method": args.method,
        "seed": args.seed,
        "cost": result.cost,
        "power": result.power,
        "turbines": result.turbines,
        "valid": result.valid,
        "layout": "".join(map(str, result.layout)),
        "iterations": result.iterations,
        "wall_time": result.wall_time,
    }, indent=2))
    return 0


def _experiment(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    overrides = {k: v for k, v in (("samples", args.samples), ("seed", args.seed), ("output_dir", args.out),
                                   ("workers", args.workers)) if v is not None}
    return replace(cfg, **overrides)


def cmd_bench(args) -> int:
    cfg = _experiment(args)
    report = run_benchmark(cfg)
    for path in emit_outputs(report, "boxplot", svg=args.svg):
        print(path)
    return 0


def cmd_scaling(args) -> int:
    cfg = _experiment(args)
    report = run_benchmark(cfg)
    paths = emit_outputs(report, "scaling", svg=args.svg)
    print(format_scaling_table(scaling_table(report)))
    for path in paths:
        print(path)
    return 0


def cmd_heatmap(args) -> int:
    base = _problem(args)
    out = _out(args.out)
    for lam in args.lambdas:
        data = heatmap_data(assemble_qubo(base.with_weights(lam)))
        stem = out / f"{base.name}_heatmap_lam{lam:g}"
        write_heatmap_csv(data, f"{stem}.csv")
        print(f"{stem}.csv")
        if args.svg:
            Path(f"{stem}.svg").write_text(heatmap_svg(data, f"log10|Q| lambda={lam:g}"), encoding="utf-8")
    return 0


def cmd_wakefield(args) -> int:
    problem = _problem(args)
    if args.direction is not None:
        problem = replace(problem, regime=WindRegime.unidirectional(args.direction, args.speed))
    sites = [int(s) for s in args.sites.split(",")] if args.sites else []
    field = windspeed_field(problem, [site_position(problem.grid, s) for s in sites], args.resolution)
    out = _out(args.out)
    path = out / f"{problem.name}_wakefield.csv"
    write_field_csv(field, path)
    print(path)
    if args.svg:
        (out / f"{problem.name}_wakefield.svg").write_text(heatmap_svg(-field, "effective wind speed"),
                                                           encoding="utf-8")
    return 0


def cmd_lambda_scan(args) -> int:
    problem = _problem(args)
    lambdas = np.arange(args.start, args.stop + 0.5 * args.step, args.step)
    points = lambda_scan(problem, lambdas)
    out = _out(args.out)
    path = out / f"{problem.name}_lambda_scan.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("lambda,turbines,gap,cost\n")
        for p in points:
            fh.write(f"{p.lam:.6f},{p.turbines},{p.gap:.6f},{p.cost:.6f}\n")
    print(path)
    if args.svg:
        (out / f"{problem.name}_lambda_turbines.svg").write_text(
            line_svg({"turbines": [(p.lam, p.turbines) for p in points]}, "lambda", "turbines"), encoding="utf-8")
        (out / f"{problem.name}_lambda_gap.svg").write_text(
            line_svg({"gap": [(p.lam, p.gap) for p in points]}, "lambda", "cost gap"), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwflo", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("build", help="assemble and save the QUBO for a farm")
    _add_problem_args(p)
    p.add_argument("-o", "--out", default=".")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="run one solver once")
    _add_problem_args(p)
    p.add_argument("--method", choices=("exact", "anneal", "sqoe", "pce"), default="anneal")
    p.add_argument("--param", type=int, default=None, help="k for pce, q for sqoe")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--cold", action="store_true", help="skip the SQOE warm start")
    p.add_argument("--trace", help="write the optimizer trace CSV here")
    p.set_defaults(func=cmd_solve)

    for verb, func, text in (("bench", cmd_bench, "64-sample power distributions"),
                             ("scaling", cmd_scaling, "wall-time scaling fits")):
        p = sub.add_parser(verb, help=text)
        p.add_argument("config", help="experiment JSON")
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("-o", "--out")
        p.add_argument("--svg", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("heatmap", help="log-magnitude QUBO heatmaps")
    _add_problem_args(p)
    p.add_argument("--lambdas", type=float, nargs="+", default=[0.0, 250.0])
    p.add_argument("-o", "--out", default=".")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("wakefield", help="effective wind speed raster")
    _add_problem_args(p)
    p.add_argument("--sites", help="comma-separated occupied site indices")
    p.add_argument("--direction", type=float, help="single wind direction instead of the regime")
    p.add_argument("--speed", type=float, default=12.0)
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("-o", "--out", default=".")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_wakefield)

    p = sub.add_parser("lambda-scan", help="optimal turbine count and cost gap against the weight")
    _add_problem_args(p)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=400.0)
    p.add_argument("--step", type=float, default=25.0)
    p.add_argument("-o", "--out", default=".")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_lambda_scan)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QwfloError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
