"""Command line: generate instances, solve, verify, compare with the exact optimum, benchmark, plot.

Exit codes: 0 success, 1 invalid input, 2 infeasible instance or failed verification,
3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import instance as inst_io
from .exact import InfeasibleInstance, brute_force_opt, verify_solution
from .gen import GadgetSpec3DM, gen_3dm_gadget, gen_random_euclidean, gen_random_metric
from .instance import CoverageError, MetricInstance, is_monotone
from .relax import InfeasibleLP, solve_relaxation
from .round_euclid import EuclidParams, run_euclid_pipeline
from .round_metric import GENERAL_BETA, SOFT_BETA, UNIFORM_BETA, RoundingParams, run_metric_pipeline, solve_soft
from .solution import RoundedSolution, from_assignment
from .svg import render_svg
from .trace import Trace, replay

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_ASSERT = 0, 1, 2, 3
MODES = ("metric", "uniform", "euclid", "soft")


class InputError(ValueError):
    pass


@dataclass
class RunReport:
    instance: dict[str, Any]
    mode: str
    lp_value: float
    cost: int
    max_beta: float
    beta_bound: float
    cost_over_lp: float
    cost_over_opt: float | None = None
    opt: int | None = None
    checks: dict[str, bool] = field(default_factory=dict)
    timings: dict[str, float] | None = None

    def to_json(self) -> str:
        data = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _summary(inst: MetricInstance) -> dict[str, Any]:
    return {"n": inst.n, "m": inst.m, "d": inst.dimension if inst.is_euclidean else "metric"}


def _load_instance(path: str) -> MetricInstance:
    try:
        return inst_io.load(path)
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read instance {path}: {exc}") from exc


def _load_solution(path: str) -> RoundedSolution:
    try:
        return RoundedSolution.load(path)
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read solution {path}: {exc}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# solving


def beta_bound(mode: str, epsilon: float) -> float:
    return {"metric": GENERAL_BETA, "uniform": UNIFORM_BETA, "soft": SOFT_BETA, "euclid": 1 + epsilon}[mode]


def run_mode(inst: MetricInstance, mode: str, alpha: float, epsilon: float, trace: Trace) -> tuple[RoundedSolution, dict[str, float]]:
    timings: dict[str, float] = {}
    if mode == "euclid" and not inst.is_euclidean:
        raise InputError("euclid mode needs a coordinate instance")
    if not is_monotone(inst):
        raise InputError("capacities are not monotone in the radius")
    if mode == "uniform" and len(set(inst.capacities.tolist())) > 1:
        raise InputError("uniform mode needs equal capacities")
    t0 = time.perf_counter()
    frac = solve_relaxation(inst, soft=mode == "soft")
    timings["lp"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if mode == "soft":
        sol = solve_soft(inst, frac, alpha=alpha, trace=trace)
    elif mode == "euclid":
        sol = run_euclid_pipeline(inst, EuclidParams(epsilon=epsilon, alpha=alpha), trace, frac)
    else:
        variant = "general" if mode == "metric" else "uniform"
        sol = run_metric_pipeline(inst, RoundingParams(alpha=alpha), variant, trace, frac)
    timings["rounding"] = time.perf_counter() - t0
    return sol, timings


def solve_report(
    inst: MetricInstance,
    mode: str,
    alpha: float,
    epsilon: float,
    trace: Trace,
    oracle_max: int = 0,
    timings: bool = False,
) -> tuple[RoundedSolution, RunReport]:
    sol, times = run_mode(inst, mode, alpha, epsilon, trace)
    bound = beta_bound(mode, epsilon)
    check = verify_solution(inst, sol, bound)
    rep = RunReport(
        instance=_summary(inst),
        mode=mode,
        lp_value=round(float(sol.lp_value), 9),
        cost=sol.cost,
        max_beta=round(sol.max_expansion, 9),
        beta_bound=round(bound, 9),
        cost_over_lp=round(sol.cost / sol.lp_value, 9) if sol.lp_value > 0 else math.inf,
        checks={"verify": check.is_valid, "replay": replay(trace.events).ok},
    )
    if 0 < inst.m <= oracle_max:
        t0 = time.perf_counter()
        opt, _, _ = brute_force_opt(inst, max_balls=oracle_max)
        times["oracle"] = time.perf_counter() - t0
        rep.opt = opt
        rep.cost_over_opt = round(sol.cost / opt, 9)
    if timings:
        rep.timings = {k: round(v, 6) for k, v in times.items()}
    return sol, rep


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    if args.kind == "euclid":
        inst = gen_random_euclidean(
            args.seed, args.n, args.m, args.d, (args.rmin, args.rmax), args.capacity_mode, args.capacity, (args.cmin, args.cmax)
        )
    elif args.kind == "metric":
        inst = gen_random_metric(
            args.seed, args.n, args.m, capacity_mode=args.capacity_mode, capacity=args.capacity, cap_range=(args.cmin, args.cmax)
        )
    else:
        triples = _parse_triples(args.triples) if args.triples else [(i, i, i) for i in range(args.N)]
        gadget = gen_3dm_gadget(GadgetSpec3DM(args.N, tuple(triples), Fraction(args.c)))
        inst = gadget.instance
        if args.witness:
            cover = _parse_ints(args.cover) if args.cover else list(range(len(triples)))
            selected, assignment = gadget.canonical_solution(cover)
            from_assignment(inst, assignment, keep=selected).save(args.witness)
    _write(args.output, inst_io.dumps(inst))
    return EXIT_OK


def _parse_triples(text: str) -> list[tuple[int, int, int]]:
    try:
        out = [tuple(int(v) for v in part.split(",")) for part in text.split(";") if part.strip()]
    except ValueError as exc:
        raise InputError(f"bad triple list {text!r}") from exc
    if any(len(t) != 3 for t in out):
        raise InputError("each triple needs three comma separated indices")
    return out  # type: ignore[return-value]


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad index list {text!r}") from exc


def cmd_solve(args) -> int:
    inst = _load_instance(args.input)
    trace = Trace()
    try:
        sol, rep = solve_report(inst, args.mode, args.alpha, args.epsilon, trace, args.max_balls if args.oracle else 0, args.timings)
    finally:
        if args.trace:
            trace.dump(args.trace)
    if args.output:
        sol.save(args.output)
    sys.stdout.write(rep.to_json())
    return EXIT_OK if all(rep.checks.values()) else EXIT_INFEASIBLE


def cmd_exact(args) -> int:
    inst = _load_instance(args.input)
    opt, subset, assignment = brute_force_opt(inst, max_balls=args.max_balls)
    sol = from_assignment(inst, assignment, keep=subset)
    if args.output:
        sol.save(args.output)
    sys.stdout.write(json.dumps({"opt": opt, "selected": subset}, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load_instance(args.input)
    sol = _load_solution(args.solution)
    rep = verify_solution(inst, sol, args.beta)
    out = {"cost": sol.cost, "beta": args.beta, **rep.to_dict()}
    sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if rep.is_valid else EXIT_INFEASIBLE


BENCH_HEADER = ["instance", "n", "m", "mode", "lp", "cost", "opt", "beta", "cost_over_lp", "verify", "time"]


def cmd_bench(args) -> int:
    files = sorted(Path(args.input).glob("*.json"))
    if not files:
        raise InputError(f"no instance files in {args.input}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_HEADER)
    failed = False
    for path in files:
        inst = _load_instance(str(path))
        t0 = time.perf_counter()
        sol, rep = solve_report(inst, args.mode, args.alpha, args.epsilon, Trace(), args.max_balls if args.oracle else 0)
        elapsed = time.perf_counter() - t0
        failed |= not all(rep.checks.values())
        writer.writerow(
            [
                path.stem,
                inst.n,
                inst.m,
                args.mode,
                f"{rep.lp_value:.6f}",
                rep.cost,
                "" if rep.opt is None else rep.opt,
                f"{rep.max_beta:.6f}",
                f"{rep.cost_over_lp:.6f}",
                int(rep.checks["verify"]),
                f"{elapsed:.4f}" if args.timings else "",
            ]
        )
    _write(args.output, buf.getvalue())
    return EXIT_INFEASIBLE if failed else EXIT_OK


def cmd_plot(args) -> int:
    inst = _load_instance(args.input)
    sol = _load_solution(args.solution) if args.solution else None
    _write(args.output, render_svg(inst, sol))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="capcover", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("kind", choices=["euclid", "metric", "gadget-3dm"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=40)
    g.add_argument("--m", type=int, default=12)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--rmin", type=float, default=0.05)
    g.add_argument("--rmax", type=float, default=0.3)
    g.add_argument("--capacity-mode", choices=["monotone", "uniform"], default="monotone")
    g.add_argument("--capacity", type=int, default=3, help="capacity in uniform mode")
    g.add_argument("--cmin", type=int, default=1)
    g.add_argument("--cmax", type=int, default=8)
    g.add_argument("--N", type=int, default=1, help="gadget: elements per side")
    g.add_argument("--c", type=str, default="1", help="gadget: expansion constant, e.g. 1 or 3/2")
    g.add_argument("--triples", help="gadget: 'x,y,z;x,y,z;...' (default: the matching (i,i,i))")
    g.add_argument("--cover", help="gadget: triple indices of the cover used for --witness")
    g.add_argument("--witness", help="gadget: write the canonical solution of the cover here")
    g.add_argument("--output", "-o")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="LP relaxation plus rounding")
    s.add_argument("--input", "-i", required=True)
    s.add_argument("--output", "-o", help="solution file")
    s.add_argument("--mode", choices=MODES, default="metric")
    s.add_argument("--alpha", type=float, default=None, help="light threshold (0.375, or 0.5 in soft mode)")
    s.add_argument("--epsilon", type=float, default=0.5)
    s.add_argument("--trace", help="write the event trace (NDJSON) here")
    s.add_argument("--oracle", action="store_true", help="also compute the exact optimum")
    s.add_argument("--max-balls", type=int, default=12)
    s.add_argument("--timings", action="store_true", help="add wall-clock timings to the report")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("exact", help="brute-force optimum of a small instance")
    e.add_argument("--input", "-i", required=True)
    e.add_argument("--output", "-o")
    e.add_argument("--max-balls", type=int, default=12)
    e.set_defaults(func=cmd_exact)

    v = sub.add_parser("verify", help="check a solution file")
    v.add_argument("--input", "-i", required=True)
    v.add_argument("--solution", "-s", required=True)
    v.add_argument("--beta", type=float, default=1.0)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="solve every *.json instance in a directory, emit CSV")
    b.add_argument("--input", "-i", required=True, help="directory of instance files")
    b.add_argument("--output", "-o")
    b.add_argument("--mode", choices=MODES, default="metric")
    b.add_argument("--alpha", type=float, default=None)
    b.add_argument("--epsilon", type=float, default=0.5)
    b.add_argument("--oracle", action="store_true")
    b.add_argument("--max-balls", type=int, default=12)
    b.add_argument("--timings", action="store_true")
    b.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="render a planar instance (and solution) as SVG")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--solution", "-s")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "alpha", "unset") is None:
        args.alpha = 0.5 if args.mode == "soft" else 0.375
    try:
        return args.func(args)
    except (CoverageError, InfeasibleLP, InfeasibleInstance) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AssertionError as exc:
        hint = f" (trace in {args.trace})" if getattr(args, "trace", None) else ""
        print(f"invariant failure: {exc}{hint}", file=sys.stderr)
        return EXIT_ASSERT
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
