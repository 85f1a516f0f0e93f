"""Command-line entry point: ``droneq {route,schedule,solve,qubo,bench}``.

Exit codes are 0 on success, 1 when the problem is infeasible or a result
fails validation, and 2 for usage, file, and parse errors. Data goes to
stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from .bench import ExperimentConfig, ExperimentError, ParseError, emit, load_instance, route_durations, run_experiment
from .drone import DroneParams
from .qaoa import QaoaConfig, qaoa_minimize
from .qubo import CapacityError, QuboModel, brute_force_minimize
from .routing import (
    InfeasibleInstanceError,
    RoutingConfig,
    RoutingInstance,
    batch_energy,
    multi_start_route,
    validate_batch,
)
from .scheduling import ScheduleConfig, ScheduleReport, RouteTask, schedule

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2
SEED_ENV = "DRONEQ_SEED"


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _dump(doc, out: str | None) -> str:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is not None:
        Path(out).write_text(text)
    return text


def _read_json(path: str):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc.msg}", exc.lineno) from None


def _params(path: str | None) -> DroneParams:
    return DroneParams() if path is None else DroneParams.from_file(path)


def _routing_doc(instance: RoutingInstance, result, seed: int, iterations: int, depth: int) -> dict:
    batch = result.batch
    durations = route_durations(instance, batch.routes)
    routes = [
        {
            "customers": list(r),
            "node_ids": [instance.ids[c] for c in r],
            "load_kg": instance.load(r),
            "transit_min": instance.transit_time(r) * 60.0,
            "energy_kwh": instance.energy(r),
            "duration_h": d,
        }
        for r, d in zip(batch.routes, durations)
    ]
    doc = {
        "instance": instance.name,
        "seed": seed,
        "iterations": iterations,
        "qaoa_depth": depth,
        "params": instance.params.to_dict(),
        "routes": routes,
        "total_min": batch.total_time * 60.0,
        "total_kwh": batch_energy(instance, batch),
        "initial_min": result.initial_time * 60.0,
        "qaoa_calls": result.qaoa_calls,
        "fallback_calls": result.fallback_calls,
    }
    if result.moves:
        doc["moves"] = [
            {"iteration": mv.iteration, "customer": mv.customer, "n_vars": mv.n_vars,
             "from": list(mv.from_slot), "to": None if mv.to_slot is None else list(mv.to_slot),
             "time_before_h": mv.time_before, "time_after_h": mv.time_after, "solver": mv.solver}
            for mv in result.moves
        ]
    return doc


def _route(args) -> tuple[RoutingInstance, dict]:
    instance = load_instance(args.instance, _params(args.params))
    qcfg = QaoaConfig(depth=args.qaoa_depth)
    cfg = RoutingConfig(iterations=args.iterations, seed=args.seed, qaoa=qcfg,
                        record_moves=getattr(args, "moves", False))
    result = multi_start_route(instance, cfg)
    report = validate_batch(instance, result.batch)
    if not report.ok:
        raise ExperimentError("routing produced an invalid batch", report)
    return instance, _routing_doc(instance, result, args.seed, args.iterations, args.qaoa_depth)


def _schedule(durations: Sequence[float], drones: int, mode: str, seed: int, recharge: float, depth: int = 1) -> ScheduleReport:
    tasks = [RouteTask(str(i), float(d)) for i, d in enumerate(durations)]
    cfg = ScheduleConfig(QaoaConfig(depth=depth, seed=seed), recharge)
    return schedule(tasks, drones, mode, cfg)


def cmd_route(args) -> int:
    _, doc = _route(args)
    text = _dump(doc, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"total_min={doc['total_min']:.2f} total_kwh={doc['total_kwh']:.2f}")
    return EXIT_OK


def cmd_schedule(args) -> int:
    doc = _read_json(args.routes)
    try:
        durations = [float(r["duration_h"]) for r in doc["routes"]]
    except (KeyError, TypeError, ValueError):
        raise ParseError(f"{args.routes} is not a routing solution (routes[].duration_h missing)") from None
    recharge = float(doc.get("params", {}).get("recharge_time", DroneParams().recharge_time))
    report = _schedule(durations, args.drones, args.mode, args.seed, recharge)
    out = report.to_dict() | {"seed": args.seed}
    text = _dump(out, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"makespan_h={report.makespan:.2f}")
    return EXIT_OK


def cmd_solve(args) -> int:
    instance, routing = _route(args)
    durations = [r["duration_h"] for r in routing["routes"]]
    report = _schedule(durations, args.drones, args.mode, args.seed, instance.params.recharge_time, args.qaoa_depth)
    doc = {"routing": routing, "schedule": report.to_dict()}
    text = _dump(doc, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"total_min={routing['total_min']:.2f} total_kwh={routing['total_kwh']:.2f} "
              f"makespan_h={report.makespan:.2f}")
    return EXIT_OK


def cmd_qubo(args) -> int:
    doc = _read_json(args.model)
    try:
        model = QuboModel.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{args.model} is not a QUBO model: {exc}") from None
    if args.method == "brute":
        bits, energy = brute_force_minimize(model)
        out = {"method": "brute", "bitstring": list(bits), "energy": energy}
    else:
        outcome = qaoa_minimize(model, QaoaConfig(depth=args.qaoa_depth, shots=args.shots, seed=args.seed))
        out = {
            "method": "qaoa",
            "bitstring": list(outcome.bitstring),
            "energy": outcome.energy,
            "fallback": outcome.fallback,
            "gammas": None if outcome.params is None else list(outcome.params.gammas),
            "betas": None if outcome.params is None else list(outcome.params.betas),
            "samples": outcome.samples.to_list(),
        }
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def _bench_config(ref: str) -> ExperimentConfig:
    path = Path(ref)
    if not path.is_file():
        bundled = resources.files("droneq") / "data" / f"{ref.removesuffix('.json')}.json"
        if not bundled.is_file():
            raise FileNotFoundError(f"no such config: {ref}")
        return ExperimentConfig.from_dict(json.loads(bundled.read_text()))
    try:
        return ExperimentConfig.from_file(path)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {ref}: {exc.msg}", exc.lineno) from None


def cmd_bench(args) -> int:
    try:
        config = _bench_config(args.config)
    except TypeError as exc:
        raise UsageError(f"bad experiment config: {exc}") from None
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    rows = run_experiment(config)
    sys.stdout.write(emit(rows, args.format, timing=args.timing))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="droneq", description="QAOA-assisted drone routing and fleet scheduling.")
    sub = parser.add_subparsers(dest="command", required=True)

    def routing_flags(p):
        p.add_argument("--instance", required=True, help="CVRP file or bundled instance name (e.g. P-n16-k8)")
        p.add_argument("--iterations", type=_positive, default=50, help="local-search passes k (default 50)")
        p.add_argument("--qaoa-depth", type=_positive, default=1, help="QAOA layers p (default 1)")
        p.add_argument("--params", help="drone parameter file (JSON or key=value lines)")

    p = sub.add_parser("route", help="build a batch of routes for an instance")
    routing_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--moves", action="store_true", help="include the per-customer move log")
    p.add_argument("--out", help="write the solution JSON here instead of stdout")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("schedule", help="assign routes from a routing solution to a fleet")
    p.add_argument("--routes", required=True, help="routing solution JSON written by 'route'")
    p.add_argument("--drones", type=_positive, required=True)
    p.add_argument("--mode", choices=("pure", "hybrid"), default="hybrid")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("solve", help="route, then schedule, in one report")
    routing_flags(p)
    p.add_argument("--drones", type=_positive, required=True)
    p.add_argument("--mode", choices=("pure", "hybrid"), default="hybrid")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("qubo", help="minimize a QUBO model JSON (debugging aid)")
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=("qaoa", "brute"), default="qaoa")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--qaoa-depth", type=_positive, default=1)
    p.add_argument("--shots", type=_positive, default=1024)
    p.set_defaults(func=cmd_qubo)

    p = sub.add_parser("bench", help="run the multi-trial experiment and print a table")
    p.add_argument("--config", required=True, help="experiment JSON, or a bundled name such as small_bench")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    p.add_argument("--no-timing", dest="timing", action="store_false", help="blank out wall-clock columns")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command != "bench" and args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except (InfeasibleInstanceError, CapacityError, ExperimentError) as exc:
        print(f"droneq: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, OSError, ValueError) as exc:
        # ParseError and bad parameter values are ValueErrors too
        print(f"droneq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
