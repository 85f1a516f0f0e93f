"""Multi-start relocation search driven by QAOA."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..qaoa import QaoaConfig, qaoa_minimize
from .instance import EPS, BatchOfRoutes, RoutingInstance, make_batch, validate_batch
from .relocation import (
    DegenerateRelocationError,
    apply_relocation,
    build_relocation_qubo,
)
from .savings import savings_init

PAPER_ITERATIONS = 1000


@dataclass(frozen=True)
class RoutingConfig:
    iterations: int = 50
    seed: int = 0
    qaoa: QaoaConfig = field(default_factory=QaoaConfig)
    penalty_factor: float = 10.0
    # consecutive non-improving passes before the best batch is perturbed
    patience: int = 2
    record_moves: bool = False


@dataclass(frozen=True)
class Move:
    iteration: int
    customer: int
    n_vars: int
    from_slot: tuple[int, int]
    to_slot: tuple[int, int] | None
    time_before: float
    time_after: float
    solver: str


@dataclass
class RoutingResult:
    batch: BatchOfRoutes
    iterations: int
    initial_time: float
    best_history: list[float] = field(default_factory=list)
    moves: list[Move] = field(default_factory=list)
    qaoa_calls: int = 0
    fallback_calls: int = 0


def _ranked_slots(reloc, outcome):
    """One-hot slots in sampled-energy order, then any unsampled ones by exact energy."""
    seen = []
    for s in outcome.samples:
        slot = reloc.decode(s.bitstring)
        if slot is not None and slot not in seen:
            seen.append(slot)
    rest = sorted(
        (k for k, slot in enumerate(reloc.slots) if slot not in seen),
        key=lambda k: (reloc.deltas[k], k),
    )
    return seen, [reloc.slots[k] for k in rest]


def local_search_pass(
    instance: RoutingInstance,
    batch: BatchOfRoutes,
    config: RoutingConfig,
    rng: np.random.Generator,
    result: RoutingResult | None = None,
    iteration: int = 0,
) -> tuple[BatchOfRoutes, bool]:
    """Try to relocate every customer once, in random order.

    For each customer the relocation QUBO is solved with QAOA; non-one-hot
    samples are skipped. If no one-hot was sampled at all the exact one-hot
    ranking is used instead. A move is kept only when it strictly lowers T.
    """
    improved = False
    for target in rng.permutation(list(instance.customers)):
        target = int(target)
        try:
            reloc, model = build_relocation_qubo(instance, batch, target, config.penalty_factor)
        except DegenerateRelocationError:
            continue
        qcfg = config.qaoa.with_seed(int(rng.integers(2**63)))
        outcome = qaoa_minimize(model, qcfg)
        if result is not None:
            result.qaoa_calls += 1
            result.fallback_calls += outcome.fallback is not None
        sampled, unsampled = _ranked_slots(reloc, outcome)
        candidates = sampled or unsampled
        new_batch, slot = apply_relocation(instance, batch, reloc, candidates)
        moved = slot is not None and slot != reloc.source and new_batch.total_time < batch.total_time - EPS
        if result is not None and config.record_moves:
            result.moves.append(Move(
                iteration, target, model.n_vars, reloc.source, slot if moved else None,
                batch.total_time, new_batch.total_time if moved else batch.total_time,
                outcome.fallback or "qaoa",
            ))
        if moved:
            batch = new_batch
            improved = True
    return batch, improved


def _cheapest_insertion(instance: RoutingInstance, routes: list[tuple[int, ...]], c: int, order) -> tuple[int, int] | None:
    best, best_cost = None, math.inf
    cap = instance.params.payload_capacity
    for z in order:
        route = routes[z]
        if instance.load(route) + instance.demands[c] > cap + EPS:
            continue
        base = instance.transit_time(route)
        for i in range(len(route) + 1):
            cand = route[:i] + (c,) + route[i:]
            if instance.energy(cand) > instance.params.battery_capacity + EPS:
                continue
            cost = instance.transit_time(cand) - base
            if cost < best_cost - 1e-12:
                best, best_cost = (z, i), cost
    return best


def perturb(instance: RoutingInstance, batch: BatchOfRoutes, strength: int, rng: np.random.Generator) -> BatchOfRoutes:
    """Remove ``strength`` random customers and greedily reinsert each one.

    Reinsertion takes the cheapest payload- and battery-feasible position,
    scanning routes in a random order; when nothing fits, the customer gets
    its own route.
    """
    if strength <= 0:
        return batch
    customers = [c for r in batch.routes for c in r]
    k = min(strength, len(customers))
    removed = [int(c) for c in rng.choice(customers, size=k, replace=False)]
    routes = [tuple(c for c in r if c not in removed) for r in batch.routes]
    routes = [r for r in routes if r]
    for c in removed:
        order = rng.permutation(len(routes))
        slot = _cheapest_insertion(instance, routes, c, order)
        if slot is None:
            routes.append((c,))
        else:
            z, i = slot
            routes[z] = routes[z][:i] + (c,) + routes[z][i:]
    return make_batch(instance, routes)


def perturb_strength(n_customers: int) -> int:
    return max(2, n_customers // 10)


def multi_start_route(instance: RoutingInstance, config: RoutingConfig = RoutingConfig()) -> RoutingResult:
    """Savings start, then ``config.iterations`` relocation passes with perturbation restarts."""
    rng = np.random.default_rng(config.seed)
    current = savings_init(instance)
    result = RoutingResult(current, 0, current.total_time)
    best = current
    base = perturb_strength(instance.n_customers)
    top = max(base, instance.n_customers // 3)
    failed_kicks = 0
    stall = 0
    for it in range(config.iterations):
        current, improved = local_search_pass(instance, current, config, rng, result, it)
        if current.total_time < best.total_time - EPS:
            best = current
            failed_kicks = 0
        result.best_history.append(best.total_time)
        result.iterations = it + 1
        stall = 0 if improved else stall + 1
        if stall >= config.patience:
            # kicks grow while they keep landing back in the same basin
            current = perturb(instance, best, min(top, base + failed_kicks), rng)
            failed_kicks += 1
            stall = 0
    report = validate_batch(instance, best)
    if not report.ok:
        raise AssertionError(f"search produced an infeasible batch:\n{report}")
    result.batch = best
    return result
