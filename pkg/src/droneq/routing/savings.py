"""Parallel Clarke-Wright savings construction."""

from __future__ import annotations

from .instance import EPS, BatchOfRoutes, InfeasibleInstanceError, RoutingInstance, make_batch


def _orient(instance: RoutingInstance, route: tuple[int, ...]) -> tuple[int, ...]:
    """Return whichever direction of ``route`` flies faster (payload makes it asymmetric)."""
    rev = route[::-1]
    return rev if instance.transit_time(rev) < instance.transit_time(route) else route


def savings_init(instance: RoutingInstance) -> BatchOfRoutes:
    """Merge singleton routes by descending savings ``d0i + d0j - dij``.

    A merge joins two routes at endpoints ``i`` and ``j`` and is kept only if
    the merged route respects payload and battery limits (in its faster
    direction). Ties in savings are broken by ``(i, j)``.
    """
    p = instance.params
    for c in instance.customers:
        if instance.energy((c,)) > p.battery_capacity + EPS:
            raise InfeasibleInstanceError(
                f"customer {c}: out-and-back energy {instance.energy((c,)):.4f} kWh exceeds battery {p.battery_capacity}"
            )
    d = instance.distances
    pairs = [
        (d[0, i] + d[0, j] - d[i, j], i, j)
        for i in instance.customers
        for j in instance.customers
        if i < j
    ]
    pairs.sort(key=lambda s: (-s[0], s[1], s[2]))

    routes = {c: (c,) for c in instance.customers}
    owner = {c: c for c in instance.customers}
    for _, i, j in pairs:
        a, b = owner[i], owner[j]
        if a == b:
            continue
        ri, rj = routes[a], routes[b]
        if i not in (ri[0], ri[-1]) or j not in (rj[0], rj[-1]):
            continue
        if instance.load(ri) + instance.load(rj) > p.payload_capacity + EPS:
            continue
        left = ri if ri[-1] == i else ri[::-1]
        right = rj if rj[0] == j else rj[::-1]
        merged = _orient(instance, left + right)
        if instance.energy(merged) > p.battery_capacity + EPS:
            continue
        routes[a] = merged
        del routes[b]
        for c in rj:
            owner[c] = a

    ordered = sorted((_orient(instance, r) for r in routes.values()), key=min)
    return make_batch(instance, ordered)
