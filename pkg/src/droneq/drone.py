"""Payload-dependent flight model for a multirotor delivery drone."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence


@dataclass(frozen=True)
class DroneParams:
    """Physical and operational constants of one (homogeneous) drone.

    Parameters
    ----------
    weight : float
        Airframe mass ``W`` in kg.
    payload_capacity : float
        Maximum carried mass ``L`` in kg.
    motor_efficiency : float
        Motor/propeller conversion efficiency.
    lift_to_drag : float
        Lift-to-drag ratio.
    electronics_power : float
        On-board electronics draw in kW.
    battery_capacity : float
        Usable energy per sortie in kWh; compared against route energy.
    max_power : float
        Power drawn in flight, kW.
    recharge_time : float
        Hours between consecutive routes flown by the same drone.
    incidental_time : float
        Hours per take-off/landing/loading cycle.
    incidental_energy : float
        kWh per take-off/landing/drop cycle.
    """

    weight: float = 7.5
    payload_capacity: float = 2.5
    motor_efficiency: float = 0.5
    lift_to_drag: float = 3.0
    electronics_power: float = 0.1
    battery_capacity: float = 1.7
    max_power: float = 0.6
    recharge_time: float = 1.25
    incidental_time: float = 0.15
    incidental_energy: float = 0.015

    def __post_init__(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive")
        if self.max_power <= self.electronics_power:
            raise ValueError("max_power must exceed electronics_power")

    @property
    def thrust_constant(self) -> float:
        """``370 * phi * gamma * (P_H - p_e)``: speed times all-up mass, in km/h * kg."""
        return 370.0 * self.motor_efficiency * self.lift_to_drag * (self.max_power - self.electronics_power)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "DroneParams":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown drone parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in doc.items()})

    @classmethod
    def from_file(cls, path: str | Path) -> "DroneParams":
        """Load from JSON, or from ``key = value`` / ``key: value`` lines."""
        text = Path(path).read_text()
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError:
            pass
        doc = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else ":"
            key, _, value = line.partition(sep)
            doc[key.strip()] = value.strip()
        return cls.from_dict(doc)


TABLE_I = DroneParams()


def velocity(params: DroneParams, payload: float) -> float:
    """Cruise speed in km/h while carrying ``payload`` kg."""
    if payload < 0:
        raise ValueError("payload must be non-negative")
    return params.thrust_constant / (params.weight + payload)


def flight_time(params: DroneParams, distance: float, payload: float) -> float:
    """Hours to fly ``distance`` km at full power carrying ``payload`` kg."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    return distance * (params.weight + payload) / params.thrust_constant


def edge_energy(params: DroneParams, distance: float, payload: float) -> float:
    return params.max_power * flight_time(params, distance, payload)


def payload_profile(demands: Sequence[float]) -> list[float]:
    """Mass carried on each leg of a depot-to-depot route.

    Leg ``i`` leaves the ``i``-th stop (stop 0 is the depot) and carries the
    demand of every customer still to be served.
    """
    out = [0.0] * (len(demands) + 1)
    acc = 0.0
    for i in range(len(demands) - 1, -1, -1):
        if demands[i] <= 0:
            raise ValueError("customer demands must be positive")
        acc += demands[i]
        out[i] = acc
    return out


def route_transit_time(params: DroneParams, leg_distances: Sequence[float], demands: Sequence[float]) -> float:
    """Total flight hours over ``len(demands) + 1`` legs."""
    if len(leg_distances) != len(demands) + 1:
        raise ValueError("a route with k customers has k + 1 legs")
    if not demands:
        return 0.0
    return sum(flight_time(params, d, w) for d, w in zip(leg_distances, payload_profile(demands)))


def route_energy(params: DroneParams, leg_distances: Sequence[float], demands: Sequence[float]) -> float:
    return params.max_power * route_transit_time(params, leg_distances, demands) + params.incidental_energy


def batch_total_time(params: DroneParams, transit_times: Sequence[float]) -> float:
    """Objective over a batch: route flight hours plus ``(M + 1)`` incidental blocks."""
    return sum(transit_times) + (len(transit_times) + 1) * params.incidental_time
