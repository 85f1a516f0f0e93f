"""Fleet scheduling: timelines, QUBO encodings, repair and the oracle."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from droneq.qaoa import QaoaConfig
from droneq.qubo import CapacityError, all_bitstrings, brute_force_minimize
from droneq.scheduling import (
    RouteTask,
    ScheduleConfig,
    brute_force_schedule,
    build_hybrid_qubo,
    build_pure_qubo,
    decode_hybrid,
    decode_pure,
    makespan,
    pure_weights,
    repair,
    schedule,
    tasks_from_durations,
)

TAU_C = 1.25


def hand_makespan(durations, assignment, m, tau=TAU_C):
    loads = []
    for k in range(m):
        mine = [d for d, a in zip(durations, assignment) if a == k]
        loads.append(sum(mine) + tau * (len(mine) - 1) if mine else 0.0)
    return max(loads)


class TestRouteTask:
    def test_positive_duration(self):
        with pytest.raises(ValueError):
            RouteTask("a", 0.0)


class TestMakespan:
    def test_single(self):
        assert makespan(tasks_from_durations([2.0]), [0], 1).makespan == 2.0

    def test_hand_timeline(self):
        tasks = tasks_from_durations([2, 3, 4])
        report = makespan(tasks, [1, 1, 0], 2, TAU_C)
        assert report.completion_times() == [4.0, 6.25]
        assert report.makespan == 6.25
        second = report.timelines[1]
        assert [(e.route, e.start, e.end) for e in second] == [("0", 0.0, 2.0), ("1", 3.25, 6.25)]

    def test_first_route_starts_at_zero(self):
        report = makespan(tasks_from_durations([1, 2, 3, 4]), [0, 1, 2, 0], 3)
        for tl in report.timelines:
            assert tl[0].start == 0.0
            for a, b in zip(tl, tl[1:]):
                assert b.start - a.end == pytest.approx(TAU_C)

    def test_idle_drone(self):
        report = makespan(tasks_from_durations([1.0]), [0], 3)
        assert report.completion_times() == [1.0, 0.0, 0.0]

    def test_unassigned(self):
        with pytest.raises(ValueError):
            makespan(tasks_from_durations([1, 2]), [0, None], 2)
        with pytest.raises(ValueError):
            makespan(tasks_from_durations([1, 2]), [0, 2], 2)
        with pytest.raises(ValueError):
            makespan(tasks_from_durations([1, 2]), [0], 2)

    def test_report_dict(self):
        doc = makespan(tasks_from_durations([2, 3]), [0, 1], 2).to_dict()
        assert doc["assignment"] == {"0": 0, "1": 1}
        assert doc["makespan_h"] == 3.0


class TestBruteForceSchedule:
    def test_hand_case(self):
        assignment, mk = brute_force_schedule(tasks_from_durations([2, 3, 4]), 2, TAU_C)
        assert mk == pytest.approx(6.25)
        assert assignment == (0, 0, 1)

    def test_matches_independent_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            d = rng.uniform(0.5, 4, size=rng.integers(1, 6)).tolist()
            m = int(rng.integers(1, 4))
            ref = min(hand_makespan(d, a, m) for a in itertools.product(range(m), repeat=len(d)))
            assert brute_force_schedule(tasks_from_durations(d), m)[1] == pytest.approx(ref)

    def test_single_machine(self):
        d = [1.0, 2.0, 0.5]
        assert brute_force_schedule(tasks_from_durations(d), 1)[1] == pytest.approx(sum(d) + 2 * TAU_C)

    def test_many_machines(self):
        d = [1.0, 2.5, 0.5]
        assert brute_force_schedule(tasks_from_durations(d), 4)[1] == pytest.approx(2.5)

    def test_cap(self):
        with pytest.raises(CapacityError):
            brute_force_schedule(tasks_from_durations([1.0] * 13), 3)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0.1, 5), min_size=1, max_size=6))
    def test_non_increasing_in_fleet(self, d):
        tasks = tasks_from_durations(d)
        values = [brute_force_schedule(tasks, m)[1] for m in (1, 2, 3)]
        assert values[0] >= values[1] - 1e-12 >= values[2] - 2e-12


class TestPureQubo:
    def test_one_by_one(self):
        cost, _ = build_pure_qubo(tasks_from_durations([2.0]), 1)
        bits, _ = brute_force_minimize(cost)
        assert bits == (1,)
        assert decode_pure(bits, 1, 1) == [0]

    def test_equal_pair_split(self):
        cost, _ = build_pure_qubo(tasks_from_durations([1.5, 1.5]), 2)
        bits, _ = brute_force_minimize(cost)
        a = decode_pure(bits, 2, 2)
        assert sorted(a) == [0, 1]

    def test_double_assignment_penalized(self):
        tasks = tasks_from_durations([1.0, 2.0, 3.0])
        m = 2
        w = pure_weights(tasks, m)
        cost, _ = build_pure_qubo(tasks, m)
        valid = []
        double = []
        for bits in all_bitstrings(6):
            rows = [bits[i * m:(i + 1) * m] for i in range(3)]
            if all(sum(r) == 1 for r in rows):
                valid.append(cost.evaluate(bits))
            elif any(sum(r) == 2 for r in rows):
                double.append(cost.evaluate(bits))
        assert min(double) >= min(valid) + w.assign - 1e-9

    def test_usage_term_counts_idle_drones(self):
        tasks = tasks_from_durations([1.0, 1.0])
        cost, qubo = build_pure_qubo(tasks, 2)
        w = pure_weights(tasks, 2)
        both_on_zero = (1, 0, 1, 0)
        assert cost.evaluate(both_on_zero) - qubo.evaluate(both_on_zero) == pytest.approx(w.usage)
        split = (1, 0, 0, 1)
        assert cost.evaluate(split) == pytest.approx(qubo.evaluate(split))

    def test_weight_ordering(self):
        w = pure_weights(tasks_from_durations([1.0, 4.0, 2.0]), 3)
        assert w.assign > w.usage > w.load

    def test_quadratic_part_is_exact(self):
        tasks = tasks_from_durations([1.0, 2.0])
        m = 2
        _, qubo = build_pure_qubo(tasks, m)
        w = pure_weights(tasks, m)
        T = [1.0, 2.0]
        for bits in all_bitstrings(4):
            x = np.array(bits).reshape(2, 2)
            ref = w.assign * sum((x[i].sum() - 1) ** 2 for i in range(2))
            ref += w.load * sum((sum(T[i] * x[i, a] for i in range(2)) - sum(T) / m) ** 2 for a in range(m))
            assert qubo.evaluate(bits) == pytest.approx(ref)

    def test_budget(self):
        with pytest.raises(CapacityError, match="budget is 24"):
            build_pure_qubo(tasks_from_durations([1.0] * 10), 4)

    def test_decode_invalid_rows(self):
        assert decode_pure((1, 1, 0, 0, 0, 1), 3, 2) == [None, None, 1]


class TestHybridQubo:
    def test_two_drones_one_route(self):
        enc, cost = build_hybrid_qubo(tasks_from_durations([2.0]), 2)
        assert enc.bits_per_route == 1 and enc.n_vars == 1
        # both assignments are valid and mirror each other
        assert cost.evaluate([0]) == pytest.approx(cost.evaluate([1]))

    def test_invalid_index_penalty(self):
        tasks = tasks_from_durations([1.0, 1.0])
        enc, cost = build_hybrid_qubo(tasks, 3)
        assert enc.bits_per_route == 2
        # routes decode to (3, 0): one invalid index, P = 10 * 2; drone 0 holds one
        # route of the two, so count and time deviations are (1/3, -2/3, -2/3), squares sum to 1
        assert cost.evaluate([1, 1, 0, 0]) == pytest.approx(20.0 + 1.0 + 1.0)

    def test_four_equal_routes_one_each(self):
        tasks = tasks_from_durations([1.0] * 4)
        enc, cost = build_hybrid_qubo(tasks, 4)
        bits, _ = brute_force_minimize(cost)
        assert sorted(decode_hybrid(enc, bits)) == [0, 1, 2, 3]

    def test_weights(self):
        enc, _ = build_hybrid_qubo(tasks_from_durations([1.0, 2.0, 3.0]), 2)
        assert enc.invalid_penalty == pytest.approx(60.0)
        assert enc.count_weight == pytest.approx(4.0)
        assert enc.time_weight == 1.0

    def test_needs_two_drones(self):
        with pytest.raises(ValueError):
            build_hybrid_qubo(tasks_from_durations([1.0]), 1)

    def test_batch_matches_direct_formula(self):
        tasks = tasks_from_durations([0.5, 1.5, 2.0])
        m = 3
        enc, cost = build_hybrid_qubo(tasks, m)
        T = [0.5, 1.5, 2.0]
        for bits in all_bitstrings(enc.n_vars):
            idx = decode_hybrid(enc, bits)
            ref = enc.invalid_penalty * sum(a >= m for a in idx)
            for a in range(m):
                count = sum(1 for i in idx if i == a)
                load = sum(t for t, i in zip(T, idx) if i == a)
                ref += enc.count_weight * (count - 3 / m) ** 2 + enc.time_weight * (load - sum(T) / m) ** 2
            assert cost.evaluate(bits) == pytest.approx(ref)


class TestDecodeHybrid:
    def test_binary(self):
        enc, _ = build_hybrid_qubo(tasks_from_durations([1.0]), 4)
        assert decode_hybrid(enc, (1, 0)) == [1]

    def test_invalid_raw_index(self):
        enc, _ = build_hybrid_qubo(tasks_from_durations([1.0]), 3)
        assert decode_hybrid(enc, (1, 1)) == [3]

    def test_all_zero(self):
        enc, _ = build_hybrid_qubo(tasks_from_durations([1.0, 2.0, 3.0]), 3)
        assert decode_hybrid(enc, (0,) * 6) == [0, 0, 0]

    def test_length(self):
        enc, _ = build_hybrid_qubo(tasks_from_durations([1.0]), 3)
        with pytest.raises(ValueError):
            decode_hybrid(enc, (1,))


class TestRepair:
    def test_all_invalid(self):
        tasks = tasks_from_durations([1, 1, 1])
        out = repair([None, 5, 7], tasks, 2)
        counts = [out.count(k) for k in range(2)]
        assert abs(counts[0] - counts[1]) <= 1
        assert out == [0, 1, 0]

    def test_fixed_point(self):
        tasks = tasks_from_durations([1, 2, 3, 1])
        assert repair([0, 1, 2, 0], tasks, 3) == [0, 1, 2, 0]

    def test_pigeonhole_idle(self):
        out = repair([0, 0], tasks_from_durations([1, 2]), 3)
        assert sorted(out) == [0, 1]

    def test_fills_empty_drones(self):
        tasks = tasks_from_durations([3, 1, 2, 0.5])
        out = repair([0, 0, 0, 0], tasks, 3)
        assert set(out) == {0, 1, 2}
        # shortest routes leave first
        assert out[3] == 1 and out[1] == 2

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(0.1, 5), min_size=1, max_size=7),
        st.integers(1, 4),
        st.data(),
    )
    def test_total_and_no_idle(self, d, m, data):
        raw = data.draw(st.lists(st.one_of(st.none(), st.integers(0, 5)), min_size=len(d), max_size=len(d)))
        out = repair(raw, tasks_from_durations(d), m)
        assert len(out) == len(d) and all(0 <= a < m for a in out)
        if len(d) >= m:
            assert set(out) == set(range(m))


class TestSchedule:
    def test_three_routes_hybrid_bounded_by_oracle(self):
        tasks = tasks_from_durations([2, 3, 4])
        report = schedule(tasks, 2, "hybrid")
        assert report.makespan >= brute_force_schedule(tasks, 2)[1] - 1e-12

    def test_single_route(self):
        for m in (1, 2, 3):
            assert schedule(tasks_from_durations([2.5]), m).makespan == 2.5

    def test_single_drone_bypass(self):
        report = schedule(tasks_from_durations([1.0, 2.0]), 1, "pure")
        assert report.solver == "single-drone"
        assert report.makespan == pytest.approx(3.0 + TAU_C)

    def test_pure_budget(self):
        with pytest.raises(CapacityError, match="n\\*m"):
            schedule(tasks_from_durations([1.0] * 10), 4, "pure")

    def test_pure_and_hybrid_valid(self):
        tasks = tasks_from_durations([2.0, 1.0, 3.5, 1.5])
        for mode in ("pure", "hybrid"):
            report = schedule(tasks, 2, mode)
            assert len(report.assignment) == 4
            assert set(report.assignment) == {0, 1}
            assert report.makespan >= brute_force_schedule(tasks, 2)[1] - 1e-12

    def test_pure_uses_fallback_above_qubit_cap(self):
        tasks = tasks_from_durations([1.0] * 7)
        report = schedule(tasks, 3, "pure")
        assert report.solver == "classical-fallback:brute-force"

    def test_empty(self):
        assert schedule([], 3).makespan == 0.0

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            schedule(tasks_from_durations([1.0]), 0)
        with pytest.raises(ValueError):
            schedule(tasks_from_durations([1.0]), 2, "annealer")

    def test_deterministic(self):
        tasks = tasks_from_durations([1.2, 0.7, 2.2, 1.9, 0.4])
        cfg = ScheduleConfig(QaoaConfig(seed=3))
        assert schedule(tasks, 3, "hybrid", cfg) == schedule(tasks, 3, "hybrid", cfg)

    def test_recharge_accounting(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            d = rng.uniform(0.5, 3, size=6).tolist()
            report = schedule(tasks_from_durations(d), 3)
            for k, tl in enumerate(report.timelines):
                mine = [d[int(e.route)] for e in tl]
                if mine:
                    assert tl[-1].end == pytest.approx(sum(mine) + TAU_C * (len(mine) - 1))
