"""CVRP instance files, demand adaptation, and the multi-trial experiment runner."""

from __future__ import annotations

import csv
import io
import json
import re
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .drone import DroneParams
from .qaoa import QaoaConfig
from .routing import RoutingConfig, RoutingInstance, batch_energy, build_instance, multi_start_route, validate_batch
from .scheduling import ScheduleConfig, RouteTask, schedule

DEFAULT_DEMAND = 1.5
CSV_HEADER = ["instance", "trial", "seed", "route_min", "route_kwh", "m", "mode", "makespan_h", "wall_s"]
_REQUIRED = ("NAME", "DIMENSION", "CAPACITY", "NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ExperimentError(RuntimeError):
    def __init__(self, message: str, report=None) -> None:
        self.report = report
        super().__init__(message if report is None else f"{message}\n{report}")


@dataclass(frozen=True)
class RawInstance:
    """Parsed CVRP file. Node 0 is the depot; ``file_ids`` keep the original numbering."""

    name: str
    dimension: int
    capacity: float
    coords: tuple[tuple[float, float], ...]
    demands: tuple[float, ...]
    file_ids: tuple[int, ...]
    comment: str = ""


def _number(token: str, line: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise ParseError(f"non-numeric token {token!r}", line) from None
    return int(v) if v.is_integer() and re.fullmatch(r"[+-]?\d+", token) else v


def parse_vrp(text: str) -> RawInstance:
    """Parse NAME/DIMENSION/CAPACITY/NODE_COORD_SECTION/DEMAND_SECTION/DEPOT_SECTION text."""
    header: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, float] = {}
    depots: list[int] = []
    seen: set[str] = set()
    section = None
    node_line: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        key = line.split(":", 1)[0].strip().upper() if ":" in line else line.split()[0].upper()
        if key == "EOF":
            seen.add("EOF")
            break
        if key.endswith("_SECTION"):
            section = key
            seen.add(key)
            continue
        if ":" in line and not line[0].isdigit() and not line.startswith("-"):
            header[key] = line.split(":", 1)[1].strip()
            seen.add(key)
            section = None
            continue
        tokens = line.split()
        if section == "NODE_COORD_SECTION":
            if len(tokens) < 3:
                raise ParseError("coordinate line needs id, x, y", lineno)
            nid = int(_number(tokens[0], lineno))
            coords[nid] = (float(_number(tokens[1], lineno)), float(_number(tokens[2], lineno)))
            node_line[nid] = lineno
        elif section == "DEMAND_SECTION":
            if len(tokens) < 2:
                raise ParseError("demand line needs id and demand", lineno)
            nid = int(_number(tokens[0], lineno))
            if nid not in coords:
                raise ParseError(f"demand for unknown node {nid}", lineno)
            demands[nid] = _number(tokens[1], lineno)
        elif section == "DEPOT_SECTION":
            for tok in tokens:
                v = int(_number(tok, lineno))
                if v == -1:
                    section = None
                    break
                depots.append(v)
        else:
            raise ParseError(f"unexpected line {line!r}", lineno)

    missing = [s for s in _REQUIRED if s not in seen]
    if missing:
        raise ParseError(f"missing section(s): {', '.join(missing)}")
    try:
        dimension = int(header["DIMENSION"])
        capacity = _number(header["CAPACITY"], 0)
    except (ValueError, ParseError) as exc:
        raise ParseError(f"bad DIMENSION/CAPACITY header: {exc}") from None
    if len(coords) != dimension:
        raise ParseError(f"DIMENSION is {dimension} but {len(coords)} coordinates were given")
    absent = sorted(set(coords) - set(demands))
    if absent:
        raise ParseError(f"no demand for node(s) {absent}")
    if not depots:
        raise ParseError("DEPOT_SECTION lists no depot")
    depot = depots[0]
    if depot not in coords:
        raise ParseError(f"depot {depot} is not a node")
    order = [depot] + [i for i in coords if i != depot]
    return RawInstance(
        name=header["NAME"],
        dimension=dimension,
        capacity=capacity,
        coords=tuple(coords[i] for i in order),
        demands=tuple(demands[i] for i in order),
        file_ids=tuple(order),
        comment=header.get("COMMENT", ""),
    )


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def format_vrp(raw: RawInstance) -> str:
    lines = [f"NAME : {raw.name}"]
    if raw.comment:
        lines.append(f"COMMENT : {raw.comment}")
    lines += ["TYPE : CVRP", f"DIMENSION : {raw.dimension}", "EDGE_WEIGHT_TYPE : EUC_2D",
              f"CAPACITY : {_fmt(raw.capacity)}", "NODE_COORD_SECTION"]
    lines += [f"{nid} {_fmt(x)} {_fmt(y)}" for nid, (x, y) in zip(raw.file_ids, raw.coords)]
    lines.append("DEMAND_SECTION")
    lines += [f"{nid} {_fmt(d)}" for nid, d in zip(raw.file_ids, raw.demands)]
    lines += ["DEPOT_SECTION", f" {raw.file_ids[0]}", " -1", "EOF", ""]
    return "\n".join(lines)


def adapted_demand(d: float, capacity: float) -> float:
    """``d mod L`` when non-zero, else 1.5 kg."""
    r = d % capacity
    return float(r) if r != 0 else DEFAULT_DEMAND


def adapt_demands(raw: RawInstance, params: DroneParams | None = None) -> RoutingInstance:
    params = params or DroneParams()
    cap = params.payload_capacity
    if DEFAULT_DEMAND > cap:
        raise ValueError(f"default demand {DEFAULT_DEMAND} kg exceeds payload capacity {cap} kg")
    demands = [0.0] + [adapted_demand(d, cap) for d in raw.demands[1:]]
    return build_instance(raw.coords, demands, params, raw.name, raw.file_ids)


def bundled_instances() -> list[str]:
    files = resources.files("droneq") / "data"
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".vrp"))


def load_instance_text(ref: str | Path) -> str:
    """Read a file path, or a bundled instance by name (case-insensitive)."""
    path = Path(ref)
    if path.is_file():
        return path.read_text()
    for name in bundled_instances():
        if name.lower() == str(ref).lower().removesuffix(".vrp"):
            return (resources.files("droneq") / "data" / f"{name}.vrp").read_text()
    raise FileNotFoundError(f"no instance file or bundled instance named {str(ref)!r}")


def load_instance(ref: str | Path, params: DroneParams | None = None) -> RoutingInstance:
    return adapt_demands(parse_vrp(load_instance_text(ref)), params)


def trial_seed(master_seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(trial)]).generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    instance: str
    trials: int = 3
    seed: int = 0
    iterations: int = 50
    qaoa: QaoaConfig = field(default_factory=QaoaConfig)
    fleet_sizes: tuple[int, ...] = (2, 3)
    mode: str = "hybrid"
    params: DroneParams = field(default_factory=DroneParams)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.mode not in ("pure", "hybrid"):
            raise ValueError(f"unknown scheduling mode {self.mode!r}")
        if any(m < 1 for m in self.fleet_sizes):
            raise ValueError("fleet sizes must be positive")

    @classmethod
    def from_dict(cls, doc: Mapping, base_dir: Path | None = None) -> "ExperimentConfig":
        doc = dict(doc)
        if "instance" not in doc:
            raise ValueError("experiment config needs an 'instance'")
        inst = str(doc.pop("instance"))
        if base_dir is not None and not Path(inst).is_absolute() and (base_dir / inst).is_file():
            inst = str(base_dir / inst)
        qaoa = QaoaConfig(**doc.pop("qaoa", {}))
        params = DroneParams.from_dict(doc.pop("params", {}))
        fleet = tuple(int(m) for m in doc.pop("fleet_sizes", (2, 3)))
        known = {"trials", "seed", "iterations", "mode"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(inst, qaoa=qaoa, params=params, fleet_sizes=fleet, **doc)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), path.parent)


@dataclass
class ResultRow:
    instance: str
    trial: int | str
    seed: int | None
    route_min: float
    route_kwh: float
    makespans_h: dict[int, float]
    mode: str
    wall_s: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["makespans_h"] = {str(k): v for k, v in self.makespans_h.items()}
        return d


def route_durations(instance: RoutingInstance, routes: Sequence[Sequence[int]]) -> list[float]:
    """Hours each route occupies a drone: flight time plus one incidental block."""
    tau = instance.params.incidental_time
    return [instance.transit_time(r) + tau for r in routes]


def run_trial(instance: RoutingInstance, config: ExperimentConfig, trial: int) -> ResultRow:
    seed = trial_seed(config.seed, trial)
    start = time.perf_counter()
    routing = multi_start_route(instance, RoutingConfig(config.iterations, seed, config.qaoa))
    report = validate_batch(instance, routing.batch)
    if not report.ok:
        raise ExperimentError(f"trial {trial} produced an infeasible batch", report)
    tasks = [RouteTask(str(z), d) for z, d in enumerate(route_durations(instance, routing.batch.routes))]
    sched_cfg = ScheduleConfig(config.qaoa.with_seed(seed), instance.params.recharge_time)
    makespans = {m: schedule(tasks, m, config.mode, sched_cfg).makespan for m in config.fleet_sizes}
    return ResultRow(
        instance.name, trial, seed,
        routing.batch.total_time * 60.0, batch_energy(instance, routing.batch),
        makespans, config.mode, time.perf_counter() - start,
    )


def summarize(rows: Sequence[ResultRow]) -> ResultRow:
    fleets = rows[0].makespans_h.keys()
    return ResultRow(
        rows[0].instance, "avg", None,
        float(np.mean([r.route_min for r in rows])),
        float(np.mean([r.route_kwh for r in rows])),
        {m: float(np.mean([r.makespans_h[m] for r in rows])) for m in fleets},
        rows[0].mode,
        float(np.sum([r.wall_s for r in rows])),
    )


def run_experiment(config: ExperimentConfig, instance: RoutingInstance | None = None) -> list[ResultRow]:
    """One row per trial, then an averaged summary row."""
    if instance is None:
        instance = load_instance(config.instance, config.params)
    rows = [run_trial(instance, config, t) for t in range(config.trials)]
    return rows + [summarize(rows)]


def emit(rows: Sequence[ResultRow], fmt: str = "csv", timing: bool = True) -> str:
    """Render rows as CSV (one line per fleet size) or as a JSON list."""
    if not rows:
        raise ValueError("no rows to emit")
    if fmt == "json":
        docs = [r.to_dict() for r in rows]
        if not timing:
            for d in docs:
                d.pop("wall_s")
        return json.dumps(docs, indent=2)
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        for m, mk in r.makespans_h.items() or [("", None)]:
            writer.writerow([
                r.instance, r.trial, "" if r.seed is None else r.seed,
                f"{r.route_min:.2f}", f"{r.route_kwh:.2f}", m, r.mode, "" if mk is None else f"{mk:.2f}",
                f"{r.wall_s:.2f}" if timing else "",
            ])
    return buf.getvalue()
