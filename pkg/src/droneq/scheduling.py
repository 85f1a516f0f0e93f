"""Assigning finished routes to a homogeneous drone fleet to minimize makespan.

A drone flies its queue back to back, recharging for ``recharge_time`` hours
between consecutive routes but not after its last one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qaoa import QaoaConfig, qaoa_minimize
from .qubo import CapacityError, CostModel, QuboModel

DEFAULT_RECHARGE = 1.25
PURE_VARIABLE_BUDGET = 24
BRUTE_FORCE_SCHEDULES = 10**6


@dataclass(frozen=True)
class RouteTask:
    id: str
    duration: float

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ValueError(f"route {self.id!r} must have positive duration")


def tasks_from_durations(durations: Sequence[float]) -> list[RouteTask]:
    return [RouteTask(str(i), float(d)) for i, d in enumerate(durations)]


@dataclass(frozen=True)
class TimelineEntry:
    route: str
    start: float
    end: float


@dataclass(frozen=True)
class ScheduleReport:
    assignment: tuple[int, ...]
    timelines: tuple[tuple[TimelineEntry, ...], ...]
    makespan: float
    mode: str = "direct"
    solver: str = ""

    @property
    def n_drones(self) -> int:
        return len(self.timelines)

    def completion_times(self) -> list[float]:
        return [tl[-1].end if tl else 0.0 for tl in self.timelines]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "solver": self.solver,
            "drones": self.n_drones,
            "makespan_h": self.makespan,
            "assignment": {e.route: d for d, tl in enumerate(self.timelines) for e in tl},
            "timelines": [
                [{"route": e.route, "start_h": e.start, "end_h": e.end} for e in tl] for tl in self.timelines
            ],
        }


def drone_loads(durations: Sequence[float], assignment: Sequence[int], m: int, recharge_time: float) -> list[float]:
    """Completion time of each drone: sum of its durations plus recharges in between."""
    total = [0.0] * m
    count = [0] * m
    for t, a in zip(durations, assignment):
        total[a] += t
        count[a] += 1
    return [total[k] + recharge_time * (count[k] - 1) if count[k] else 0.0 for k in range(m)]


def makespan(
    tasks: Sequence[RouteTask],
    assignment: Sequence[int | None],
    m: int,
    recharge_time: float = DEFAULT_RECHARGE,
    mode: str = "direct",
    solver: str = "",
) -> ScheduleReport:
    if m < 1:
        raise ValueError("need at least one drone")
    if len(assignment) != len(tasks):
        raise ValueError("assignment must cover every route")
    for t, a in zip(tasks, assignment):
        if a is None or not 0 <= a < m:
            raise ValueError(f"route {t.id!r} is not assigned to a valid drone")
    timelines: list[list[TimelineEntry]] = [[] for _ in range(m)]
    ready = [0.0] * m
    for t, a in zip(tasks, assignment):
        start = ready[a]
        end = start + t.duration
        timelines[a].append(TimelineEntry(t.id, start, end))
        ready[a] = end + recharge_time
    mk = max((tl[-1].end for tl in timelines if tl), default=0.0)
    return ScheduleReport(tuple(int(a) for a in assignment), tuple(tuple(tl) for tl in timelines), mk, mode, solver)


def brute_force_schedule(
    tasks: Sequence[RouteTask], m: int, recharge_time: float = DEFAULT_RECHARGE
) -> tuple[tuple[int, ...], float]:
    """Minimum makespan over all ``m**n`` assignments; ties to the smallest vector."""
    n = len(tasks)
    if m < 1:
        raise ValueError("need at least one drone")
    if m**n > BRUTE_FORCE_SCHEDULES:
        raise CapacityError(f"{m}**{n} assignments exceeds the enumeration cap {BRUTE_FORCE_SCHEDULES}")
    durations = [t.duration for t in tasks]
    best, best_mk = None, math.inf
    for assignment in itertools.product(range(m), repeat=n):
        mk = max(drone_loads(durations, assignment, m, recharge_time), default=0.0)
        if mk < best_mk - 1e-12:
            best, best_mk = assignment, mk
    return tuple(best), best_mk


@dataclass(frozen=True)
class PureWeights:
    assign: float
    usage: float
    load: float


def pure_weights(tasks: Sequence[RouteTask], m: int) -> PureWeights:
    """Penalties ordered assign > usage > load, with loads measured in units of the longest route."""
    tmax = max(t.duration for t in tasks)
    n = len(tasks)
    load = 1.0 / tmax**2
    # valid assignments keep the load term below n**2 in those units
    usage = float(n * n) + 1.0
    assign = m * usage + float(n * m) ** 2 + 1.0
    return PureWeights(assign, usage, load)


def build_pure_qubo(
    tasks: Sequence[RouteTask],
    m: int,
    weights: PureWeights | None = None,
    budget: int = PURE_VARIABLE_BUDGET,
) -> tuple[CostModel, QuboModel]:
    """One bit ``x[i*m + a]`` per (route, drone) pair.

    Returns the full cost (quadratic part plus the drone-usage product term
    ``U * sum_a prod_i (1 - x_ia)``) and the quadratic part alone.
    """
    n = len(tasks)
    if n * m > budget:
        raise CapacityError(f"pure model needs n*m = {n}*{m} = {n * m} variables, budget is {budget}")
    w = weights or pure_weights(tasks, m)
    T = [t.duration for t in tasks]
    mean = sum(T) / m
    var = lambda i, a: i * m + a  # noqa: E731
    nv = n * m
    linear = [0.0] * nv
    quad: dict[tuple[int, int], float] = {}
    const = 0.0

    def add(j, k, v):
        if j == k:
            linear[j] += v
        else:
            key = (min(j, k), max(j, k))
            quad[key] = quad.get(key, 0.0) + v

    # A * (sum_a x_ia - 1)^2
    for i in range(n):
        const += w.assign
        for a in range(m):
            add(var(i, a), var(i, a), -w.assign)
            for b in range(a + 1, m):
                add(var(i, a), var(i, b), 2.0 * w.assign)
    # w_load * (sum_i T_i x_ia - mean)^2
    for a in range(m):
        const += w.load * mean**2
        for i in range(n):
            add(var(i, a), var(i, a), w.load * (T[i] ** 2 - 2.0 * mean * T[i]))
            for k in range(i + 1, n):
                add(var(i, a), var(k, a), 2.0 * w.load * T[i] * T[k])
    qubo = QuboModel(nv, quad, linear, const)

    def usage(bits: np.ndarray) -> np.ndarray:
        b = bits.reshape(len(bits), n, m)
        return w.usage * (b.max(axis=1) == 0).sum(axis=1)

    cost = CostModel(
        nv,
        lambda x: qubo.evaluate(x) + float(usage(np.array([x], dtype=np.int8))[0]),
        lambda bits: qubo.evaluate_many(bits) + usage(bits),
    )
    return cost, qubo


def decode_pure(bits: Sequence[int], n: int, m: int) -> list[int | None]:
    """Drone per route, or ``None`` unless exactly one bit of the route is set."""
    out: list[int | None] = []
    for i in range(n):
        row = bits[i * m:(i + 1) * m]
        out.append(list(row).index(1) if sum(row) == 1 else None)
    return out


@dataclass(frozen=True)
class HybridEncoding:
    n_routes: int
    n_drones: int
    bits_per_route: int
    invalid_penalty: float
    count_weight: float
    time_weight: float

    @property
    def n_vars(self) -> int:
        return self.n_routes * self.bits_per_route

    def variable(self, route: int, bit: int) -> int:
        return route * self.bits_per_route + bit


def build_hybrid_qubo(tasks: Sequence[RouteTask], m: int) -> tuple[HybridEncoding, CostModel]:
    """Log-encoded drone index per route.

    ``cost = P * #invalid + w_bal * sum_a (count_a - n/m)^2
    + w_time * sum_a (time_a - sum(T)/m)^2``, evaluated directly on bits.
    """
    if m < 2:
        raise ValueError("hybrid encoding needs at least two drones")
    n = len(tasks)
    B = max(1, math.ceil(math.log2(m)))
    T = np.array([t.duration for t in tasks], dtype=float)
    total = float(T.sum())
    enc = HybridEncoding(n, m, B, 10.0 * total, (total / n) ** 2 if n else 0.0, 1.0)
    weights = (1 << np.arange(B)).astype(np.int64)
    drones = np.arange(m)

    def batch(bits: np.ndarray) -> np.ndarray:
        idx = bits.reshape(len(bits), n, B).astype(np.int64) @ weights
        invalid = (idx >= m).sum(axis=1)
        onehot = idx[:, :, None] == drones[None, None, :]
        counts = onehot.sum(axis=1)
        times = (onehot * T[None, :, None]).sum(axis=1)
        return (
            enc.invalid_penalty * invalid
            + enc.count_weight * ((counts - n / m) ** 2).sum(axis=1)
            + enc.time_weight * ((times - total / m) ** 2).sum(axis=1)
        )

    cost = CostModel(enc.n_vars, lambda x: float(batch(np.array([x], dtype=np.int8))[0]), batch)
    return enc, cost


def decode_hybrid(encoding: HybridEncoding, bits: Sequence[int]) -> list[int]:
    """Raw drone index per route; values ``>= n_drones`` are left in place."""
    if len(bits) != encoding.n_vars:
        raise ValueError(f"expected {encoding.n_vars} bits, got {len(bits)}")
    B = encoding.bits_per_route
    return [sum(int(bits[i * B + b]) << b for b in range(B)) for i in range(encoding.n_routes)]


def repair(
    raw: Sequence[int | None], tasks: Sequence[RouteTask], m: int, recharge_time: float = DEFAULT_RECHARGE
) -> list[int]:
    """Make an assignment total and, where possible, leave no drone idle.

    Routes without a valid drone go, in route order, to the drone with the
    smallest completion time (ties to the lower index). Then, while a drone is
    idle and another holds at least two routes, the shortest route of the
    most-loaded such drone moves to the lowest-indexed idle drone.
    """
    durations = [t.duration for t in tasks]
    assignment: list[int | None] = [a if a is not None and 0 <= a < m else None for a in raw]

    def loads() -> list[float]:
        pairs = [(d, a) for d, a in zip(durations, assignment) if a is not None]
        return drone_loads([d for d, _ in pairs], [a for _, a in pairs], m, recharge_time)

    for i, a in enumerate(assignment):
        if a is None:
            current = loads()
            assignment[i] = min(range(m), key=lambda k: (current[k], k))

    while True:
        members = [[i for i, a in enumerate(assignment) if a == k] for k in range(m)]
        idle = [k for k in range(m) if not members[k]]
        donors = [k for k in range(m) if len(members[k]) >= 2]
        if not idle or not donors:
            break
        current = loads()
        donor = max(donors, key=lambda k: (current[k], -k))
        moved = min(members[donor], key=lambda i: (durations[i], i))
        assignment[moved] = idle[0]
    return [int(a) for a in assignment]


@dataclass(frozen=True)
class ScheduleConfig:
    qaoa: QaoaConfig = field(default_factory=QaoaConfig)
    recharge_time: float = DEFAULT_RECHARGE
    pure_budget: int = PURE_VARIABLE_BUDGET


def schedule(
    tasks: Sequence[RouteTask], m: int, mode: str = "hybrid", config: ScheduleConfig = ScheduleConfig()
) -> ScheduleReport:
    """Build the chosen cost model, solve it with QAOA, decode, repair, and time it."""
    if m < 1:
        raise ValueError("need at least one drone")
    if mode not in ("pure", "hybrid"):
        raise ValueError(f"unknown scheduling mode {mode!r}")
    n = len(tasks)
    if n == 0:
        return makespan(tasks, [], m, config.recharge_time, mode, "empty")
    if m == 1:
        return makespan(tasks, [0] * n, m, config.recharge_time, mode, "single-drone")
    if mode == "pure":
        cost, _ = build_pure_qubo(tasks, m, budget=config.pure_budget)
        outcome = qaoa_minimize(cost, config.qaoa)
        raw = decode_pure(outcome.bitstring, n, m)
    else:
        enc, cost = build_hybrid_qubo(tasks, m)
        outcome = qaoa_minimize(cost, config.qaoa)
        raw = decode_hybrid(enc, outcome.bitstring)
    fixed = repair(raw, tasks, m, config.recharge_time)
    return makespan(tasks, fixed, m, config.recharge_time, mode, outcome.fallback or "qaoa")
