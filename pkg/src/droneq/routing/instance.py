"""Routing instance, batches of routes, and constraint validation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..drone import DroneParams, payload_profile

Route = tuple[int, ...]

# absolute slack when comparing float loads and energies against capacities
EPS = 1e-9


class InfeasibleInstanceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RoutingInstance:
    """Depot (node 0) plus customers with demands in kg and Euclidean distances in km."""

    coords: np.ndarray
    demands: np.ndarray
    params: DroneParams = field(default_factory=DroneParams)
    name: str = "instance"
    ids: tuple[int, ...] = ()
    distances: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        demands = np.asarray(self.demands, dtype=float)
        if len(coords) != len(demands):
            raise ValueError("coords and demands must have the same length")
        if len(coords) == 0:
            raise ValueError("instance needs at least a depot")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        ids = tuple(self.ids) if self.ids else tuple(range(len(coords)))
        if len(ids) != len(coords):
            raise ValueError("ids must match the node count")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")
        if demands[0] != 0:
            raise ValueError("depot demand must be zero")
        cap = self.params.payload_capacity
        for i, r in enumerate(demands[1:], start=1):
            if not r > 0:
                raise ValueError(f"customer {i} has non-positive demand {r}")
            if r > cap + EPS:
                raise InfeasibleInstanceError(f"customer {i} demand {r} exceeds payload capacity {cap}")
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        coords.flags.writeable = False
        demands.flags.writeable = False
        dist.flags.writeable = False
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "demands", demands)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "distances", dist)

    @property
    def n_customers(self) -> int:
        return len(self.demands) - 1

    @property
    def customers(self) -> range:
        return range(1, len(self.demands))

    def legs(self, route: Sequence[int]) -> list[float]:
        stops = [0, *route, 0]
        d = self.distances
        return [float(d[a, b]) for a, b in zip(stops, stops[1:])]

    def load(self, route: Sequence[int]) -> float:
        return float(sum(self.demands[c] for c in route))

    def transit_time(self, route: Sequence[int]) -> float:
        """Flight hours of ``route``; same value as ``drone.route_transit_time``."""
        if not route:
            return 0.0
        stops = [0, *route, 0]
        payload = payload_profile([float(self.demands[c]) for c in route])
        d = self.distances
        w = self.params.weight
        total = 0.0
        for (a, b), p in zip(zip(stops, stops[1:]), payload):
            total += d[a, b] * (w + p)
        return float(total / self.params.thrust_constant)

    def energy(self, route: Sequence[int]) -> float:
        return self.params.max_power * self.transit_time(route) + self.params.incidental_energy

    def route_feasible(self, route: Sequence[int]) -> bool:
        p = self.params
        return self.load(route) <= p.payload_capacity + EPS and self.energy(route) <= p.battery_capacity + EPS


def build_instance(
    coords: Sequence[Sequence[float]],
    demands: Sequence[float],
    params: DroneParams | None = None,
    name: str = "instance",
    ids: Sequence[int] | None = None,
) -> RoutingInstance:
    return RoutingInstance(np.asarray(coords, dtype=float), np.asarray(demands, dtype=float),
                           params or DroneParams(), name, tuple(ids) if ids is not None else ())


@dataclass(frozen=True)
class BatchOfRoutes:
    """Depot-anchored routes covering all customers; ``total_time`` in hours."""

    routes: tuple[Route, ...]
    total_time: float

    @property
    def n_routes(self) -> int:
        return len(self.routes)

    def locate(self, customer: int) -> tuple[int, int]:
        for z, route in enumerate(self.routes):
            if customer in route:
                return z, route.index(customer)
        raise KeyError(f"customer {customer} is not in the batch")


def make_batch(instance: RoutingInstance, routes: Iterable[Sequence[int]]) -> BatchOfRoutes:
    """Build a batch from ``routes``, dropping empty ones and computing T."""
    kept = tuple(tuple(int(c) for c in r) for r in routes if len(r) > 0)
    return BatchOfRoutes(kept, batch_time(instance, kept))


def batch_time(instance: RoutingInstance, routes: Sequence[Sequence[int]]) -> float:
    transit = sum(instance.transit_time(r) for r in routes)
    return transit + (len(routes) + 1) * instance.params.incidental_time


def batch_total_time(instance: RoutingInstance, batch: BatchOfRoutes) -> float:
    return batch_time(instance, batch.routes)


def batch_energy(instance: RoutingInstance, batch: BatchOfRoutes) -> float:
    return sum(instance.energy(r) for r in batch.routes)


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    passed: bool
    violating_routes: tuple[int, ...] = ()
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[ConstraintCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[ConstraintCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "passed": c.passed, "violating_routes": list(c.violating_routes), "detail": c.detail}
                for c in self.checks
            ],
        }

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else f"FAIL routes={list(c.violating_routes)} {c.detail}".rstrip()
            lines.append(f"{c.name}: {status}")
        return "\n".join(lines)


def validate_batch(instance: RoutingInstance, batch: BatchOfRoutes) -> ValidationReport:
    """Check visit-once, payload, battery and depot-flow constraints. Never raises."""
    try:
        routes = [tuple(r) for r in batch.routes]
    except TypeError:
        return ValidationReport((ConstraintCheck("structure", False, (), "routes are not sequences"),))
    n_nodes = len(instance.demands)
    customers = set(instance.customers)

    flow_bad = []
    for z, r in enumerate(routes):
        if not r or any(not isinstance(c, (int, np.integer)) or not 1 <= c < n_nodes for c in r):
            flow_bad.append(z)

    seen: dict[int, int] = {}
    dup_routes = set()
    for z, r in enumerate(routes):
        for c in r:
            if c in seen:
                dup_routes.update((seen[c], z))
            seen.setdefault(c, z)
    missing = sorted(customers - set(seen))
    visit_detail = []
    if dup_routes:
        visit_detail.append("duplicate customers")
    if missing:
        visit_detail.append(f"missing customers {missing}")

    well_formed = [z for z in range(len(routes)) if z not in flow_bad]
    cap = instance.params.payload_capacity
    payload_bad = [z for z in well_formed if instance.load(routes[z]) > cap + EPS]
    battery_bad = [z for z in well_formed if instance.energy(routes[z]) > instance.params.battery_capacity + EPS]

    time_ok = True
    if not flow_bad and math.isfinite(batch.total_time):
        time_ok = abs(batch.total_time - batch_time(instance, routes)) <= 1e-9 * max(1.0, batch.total_time)

    return ValidationReport((
        ConstraintCheck("visit_once", not dup_routes and not missing, tuple(sorted(dup_routes)), "; ".join(visit_detail)),
        ConstraintCheck("payload", not payload_bad, tuple(payload_bad)),
        ConstraintCheck("battery", not battery_bad, tuple(battery_bad)),
        ConstraintCheck("depot_flow", not flow_bad, tuple(flow_bad)),
        ConstraintCheck("objective", time_ok, (), "" if time_ok else "cached total time is stale"),
    ))


def _set_partitions(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first, *part[i]]] + part[i + 1:]
        yield [[first], *part]


def exhaustive_optimum(instance: RoutingInstance, max_customers: int = 8) -> BatchOfRoutes:
    """Optimal batch by enumerating every partition and every visiting order."""
    n = instance.n_customers
    if n > max_customers:
        raise ValueError(f"{n} customers is too many to enumerate (cap {max_customers})")
    best_route: dict[frozenset, tuple[float, Route] | None] = {}

    def best_order(block: list[int]):
        key = frozenset(block)
        if key not in best_route:
            choice = None
            if instance.load(block) <= instance.params.payload_capacity + EPS:
                for perm in itertools.permutations(block):
                    if instance.energy(perm) <= instance.params.battery_capacity + EPS:
                        t = instance.transit_time(perm)
                        if choice is None or t < choice[0]:
                            choice = (t, perm)
            best_route[key] = choice
        return best_route[key]

    best, best_t = None, math.inf
    for part in _set_partitions(list(instance.customers)):
        total = (len(part) + 1) * instance.params.incidental_time
        routes = []
        for block in part:
            choice = best_order(block)
            if choice is None:
                break
            total += choice[0]
            routes.append(choice[1])
        else:
            if total < best_t:
                best, best_t = routes, total
    if best is None:
        raise InfeasibleInstanceError("no feasible batch exists")
    return make_batch(instance, sorted(best))
