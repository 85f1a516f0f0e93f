"""Flight physics under Table I parameters."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from droneq.drone import (
    TABLE_I,
    DroneParams,
    batch_total_time,
    edge_energy,
    flight_time,
    payload_profile,
    route_energy,
    route_transit_time,
    velocity,
)

K = 370 * 0.5 * 3 * (0.6 - 0.1)


class TestDroneParams:
    def test_defaults(self):
        p = DroneParams()
        assert (p.weight, p.payload_capacity, p.motor_efficiency, p.lift_to_drag) == (7.5, 2.5, 0.5, 3.0)
        assert (p.electronics_power, p.battery_capacity, p.max_power) == (0.1, 1.7, 0.6)
        assert (p.recharge_time, p.incidental_time, p.incidental_energy) == (1.25, 0.15, 0.015)
        assert p.thrust_constant == pytest.approx(277.5)

    def test_non_positive_rejected(self):
        with pytest.raises(ValueError):
            DroneParams(weight=0)
        with pytest.raises(ValueError):
            DroneParams(recharge_time=-1)

    def test_power_ordering(self):
        with pytest.raises(ValueError):
            DroneParams(max_power=0.1, electronics_power=0.1)

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            DroneParams.from_dict({"wingspan": 1.0})

    def test_json_file(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"weight": 8.0, "recharge_time": 1.0}))
        p = DroneParams.from_file(path)
        assert p.weight == 8.0 and p.recharge_time == 1.0 and p.payload_capacity == 2.5

    def test_key_value_file(self, tmp_path):
        path = tmp_path / "p.cfg"
        path.write_text("# drone\nweight = 8\npayload_capacity: 3.0\n")
        p = DroneParams.from_file(path)
        assert p.weight == 8.0 and p.payload_capacity == 3.0

    def test_dict_round_trip(self):
        assert DroneParams.from_dict(TABLE_I.to_dict()) == TABLE_I


class TestVelocity:
    def test_empty(self):
        assert velocity(TABLE_I, 0.0) == pytest.approx(37.0)

    def test_full(self):
        assert velocity(TABLE_I, 2.5) == pytest.approx(27.75)

    def test_decreasing(self):
        speeds = [velocity(TABLE_I, w / 10) for w in range(26)]
        assert all(a > b for a, b in zip(speeds, speeds[1:]))

    def test_negative_payload(self):
        with pytest.raises(ValueError):
            velocity(TABLE_I, -0.1)


class TestFlightTime:
    def test_zero_distance(self):
        assert flight_time(TABLE_I, 0.0, 2.0) == 0.0

    def test_point_value(self):
        assert flight_time(TABLE_I, 10.0, 2.5) == pytest.approx(0.360360, abs=1e-6)

    def test_linear_in_distance(self):
        assert flight_time(TABLE_I, 14.0, 1.2) == pytest.approx(2 * flight_time(TABLE_I, 7.0, 1.2))

    def test_negative_distance(self):
        with pytest.raises(ValueError):
            flight_time(TABLE_I, -1.0, 0.0)


class TestEdgeEnergy:
    def test_zero_distance(self):
        assert edge_energy(TABLE_I, 0.0, 1.0) == 0.0

    def test_point_value(self):
        assert edge_energy(TABLE_I, 10.0, 2.5) == pytest.approx(0.216216, abs=1e-6)

    @given(st.floats(0, 100), st.floats(0, 2.5))
    def test_power_times_time(self, d, w):
        assert edge_energy(TABLE_I, d, w) == pytest.approx(0.6 * flight_time(TABLE_I, d, w))


class TestPayloadProfile:
    def test_one_customer(self):
        assert payload_profile([1.0]) == [1.0, 0.0]

    def test_suffix_sums(self):
        assert payload_profile([1.0, 0.5]) == [1.5, 0.5, 0.0]

    def test_empty(self):
        assert payload_profile([]) == [0.0]

    def test_non_positive(self):
        with pytest.raises(ValueError):
            payload_profile([1.0, 0.0])

    @given(st.lists(st.floats(0.01, 2.5), min_size=1, max_size=8))
    def test_non_increasing(self, demands):
        prof = payload_profile(demands)
        assert prof[0] == pytest.approx(sum(demands))
        assert prof[-1] == 0.0
        assert all(a >= b for a, b in zip(prof, prof[1:]))


class TestRouteTime:
    def test_depot_only(self):
        assert route_transit_time(TABLE_I, [0.0], []) == 0.0

    def test_single_customer(self):
        d, r = 6.0, 1.3
        expected = d * (7.5 + r) / K + d * 7.5 / K
        assert route_transit_time(TABLE_I, [d, d], [r]) == pytest.approx(expected)

    def test_symmetric_equal_demands(self):
        # depot, a, b form an equilateral triangle of side 4
        assert route_transit_time(TABLE_I, [4, 4, 4], [1.0, 1.0]) == pytest.approx(
            route_transit_time(TABLE_I, [4, 4, 4], [1.0, 1.0][::-1])
        )

    def test_heavy_first_not_slower(self):
        heavy_first = route_transit_time(TABLE_I, [4, 4, 4], [2.0, 0.5])
        heavy_last = route_transit_time(TABLE_I, [4, 4, 4], [0.5, 2.0])
        assert heavy_first <= heavy_last

    def test_leg_count_checked(self):
        with pytest.raises(ValueError):
            route_transit_time(TABLE_I, [1.0, 1.0], [1.0, 1.0])


class TestRouteEnergy:
    def test_depot_only(self):
        assert route_energy(TABLE_I, [0.0], []) == pytest.approx(0.015)

    def test_single_customer(self):
        # 0.6 * (10 * 10 + 10 * 7.5) / 277.5 + 0.015
        assert route_energy(TABLE_I, [10, 10], [2.5]) == pytest.approx(0.393378, abs=1e-6)

    def test_increasing_in_demand(self):
        assert route_energy(TABLE_I, [3, 2, 4], [1.0, 0.6]) < route_energy(TABLE_I, [3, 2, 4], [1.0, 0.7])

    @given(st.lists(st.floats(0, 30), min_size=3, max_size=3), st.floats(0.1, 1.2), st.floats(0.1, 1.2))
    def test_energy_time_coupling(self, legs, r1, r2):
        e = route_energy(TABLE_I, legs, [r1, r2])
        t = route_transit_time(TABLE_I, legs, [r1, r2])
        assert e - 0.015 == pytest.approx(0.6 * t)
        assert e >= 0 and t >= 0


class TestBatchTotalTime:
    def test_empty_batch(self):
        assert batch_total_time(TABLE_I, []) == pytest.approx(0.15)

    def test_two_routes(self):
        assert batch_total_time(TABLE_I, [1.0, 1.0]) == pytest.approx(2.45)

    def test_empty_route_adds_tau(self):
        assert batch_total_time(TABLE_I, [0.4, 0.0]) - batch_total_time(TABLE_I, [0.4]) == pytest.approx(0.15)
