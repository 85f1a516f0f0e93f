"""Single-customer relocation as a one-hot QUBO.

A slot ``(z, i)`` means: insert the target customer into route ``z`` of the
batch *with the target removed*, immediately before its ``i``-th customer
(``i == len(route)`` inserts just before the return to the depot). When the
target was alone on its route, that route stays in the reduced batch as an
empty route so that "no move" remains representable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..drone import flight_time
from ..qubo import QuboModel
from .instance import EPS, BatchOfRoutes, Route, RoutingInstance, make_batch

Slot = tuple[int, int]


class SlotRejectedError(ValueError):
    pass


class DegenerateRelocationError(ValueError):
    pass


def remove_customer(batch: BatchOfRoutes, target: int) -> tuple[list[Route], Slot]:
    """Routes with ``target`` removed (empty route kept) and its original slot."""
    s, pos = batch.locate(target)
    reduced = [tuple(r) for r in batch.routes]
    reduced[s] = reduced[s][:pos] + reduced[s][pos + 1:]
    return reduced, (s, pos)


def _insert(route: Route, target: int, i: int) -> Route:
    return route[:i] + (target,) + route[i:]


def _check_slot(instance: RoutingInstance, reduced: Sequence[Route], target: int, z: int, i: int) -> None:
    if not 0 <= z < len(reduced) or not 0 <= i <= len(reduced[z]):
        raise SlotRejectedError(f"slot ({z}, {i}) does not exist")
    if instance.load(reduced[z]) + instance.demands[target] > instance.params.payload_capacity + EPS:
        raise SlotRejectedError(f"slot ({z}, {i}) exceeds payload capacity")


def delta_transit(instance: RoutingInstance, batch: BatchOfRoutes, target: int, z: int, i: int) -> float:
    """Exact change in flight hours of route ``z`` when ``target`` is inserted at ``i``.

    Recomputes the whole route, so the extra payload carried on every leg
    before the insertion point is accounted for.
    """
    reduced, _ = remove_customer(batch, target)
    _check_slot(instance, reduced, target, z, i)
    route = reduced[z]
    return instance.transit_time(_insert(route, target, i)) - instance.transit_time(route)


def two_edge_delta(instance: RoutingInstance, batch: BatchOfRoutes, target: int, z: int, i: int) -> float:
    """Edge-replacement estimate that ignores payload added on upstream legs."""
    reduced, _ = remove_customer(batch, target)
    _check_slot(instance, reduced, target, z, i)
    route = reduced[z]
    stops = (0, *route, 0)
    prev, nxt = stops[i], stops[i + 1]
    r_star = float(instance.demands[target])
    # payload leaving prev after insertion: target plus everything from position i on
    carried = r_star + instance.load(route[i:])
    d = instance.distances
    p = instance.params
    return (
        flight_time(p, d[prev, target], carried)
        + flight_time(p, d[target, nxt], carried - r_star)
        - flight_time(p, d[prev, nxt], carried - r_star)
    )


@dataclass(frozen=True)
class RelocationQubo:
    """One-hot slot choice for ``target``.

    ``deltas[k]`` is the exact change in the batch objective relative to the
    batch with ``target`` removed, so for the one-hot on slot ``k`` the new
    objective is ``T0 - removal_credit + deltas[k]``.
    """

    target: int
    source: Slot
    reduced_routes: tuple[Route, ...]
    slots: tuple[Slot, ...]
    deltas: tuple[float, ...]
    penalty: float
    removal_credit: float
    base_time: float

    @property
    def current_slot(self) -> int:
        return self.slots.index(self.source)

    def variable(self, slot: Slot) -> int:
        return self.slots.index(slot)

    def decode(self, bits: Sequence[int]) -> Slot | None:
        """The chosen slot for a one-hot bitstring, else ``None``."""
        if sum(bits) != 1:
            return None
        return self.slots[list(bits).index(1)]

    def predicted_time(self, k: int) -> float:
        return self.base_time - self.removal_credit + self.deltas[k]


def build_relocation_qubo(
    instance: RoutingInstance, batch: BatchOfRoutes, target: int, penalty_factor: float = 10.0
) -> tuple[RelocationQubo, QuboModel]:
    """``H = sum_k dT_k x_k + lam (sum_k x_k - 1)^2`` over payload-feasible slots."""
    reduced, source = remove_customer(batch, target)
    tau = instance.params.incidental_time
    cap = instance.params.payload_capacity
    r_star = float(instance.demands[target])
    slots, deltas = [], []
    for z, route in enumerate(reduced):
        if instance.load(route) + r_star > cap + EPS:
            continue
        base = instance.transit_time(route)
        for i in range(len(route) + 1):
            slots.append((z, i))
            # filling the emptied source route brings its incidental block back
            deltas.append(instance.transit_time(_insert(route, target, i)) - base + (tau if not route else 0.0))
    if not slots:
        raise DegenerateRelocationError(f"customer {target} has no payload-feasible slot")

    lam = penalty_factor * max(max(abs(d) for d in deltas), 1e-6)
    n = len(slots)
    linear = [d - lam for d in deltas]
    quad = {(j, k): 2.0 * lam for j in range(n) for k in range(j + 1, n)}
    model = QuboModel(n, quad, linear, lam)

    reduced_time = sum(instance.transit_time(r) for r in reduced if r) + (sum(1 for r in reduced if r) + 1) * tau
    info = RelocationQubo(
        target, source, tuple(reduced), tuple(slots), tuple(deltas), lam,
        batch.total_time - reduced_time, batch.total_time,
    )
    return info, model


def apply_relocation(
    instance: RoutingInstance,
    batch: BatchOfRoutes,
    reloc: RelocationQubo,
    candidates: Iterable[Slot],
) -> tuple[BatchOfRoutes, Slot | None]:
    """Apply the first battery-feasible candidate slot.

    Returns the new batch and the slot used. Choosing the current slot returns
    ``batch`` itself. If every candidate breaks the battery limit the batch is
    returned unchanged with ``None``.
    """
    for slot in candidates:
        if slot == reloc.source:
            return batch, slot
        z, i = slot
        _check_slot(instance, reloc.reduced_routes, reloc.target, z, i)
        new_route = _insert(reloc.reduced_routes[z], reloc.target, i)
        if instance.energy(new_route) > instance.params.battery_capacity + EPS:
            continue
        routes = list(reloc.reduced_routes)
        routes[z] = new_route
        return make_batch(instance, routes), slot
    return batch, None
