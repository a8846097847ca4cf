from fractions import Fraction

import pytest

from lll_workbench.graphs import InputError
from lll_workbench.mt_engine import (
    Event,
    EventSystem,
    FiniteVariable,
    IntervalUnion,
    RunStats,
    Uniform01,
    ValueSet,
    estimate_expected_steps,
    extremal_cycle_instance,
    measure_pair_intersections,
    pair_intersection,
    run_mt,
    witness_dag_of_run,
)
from lll_workbench.shearer import ProbabilityVector, q_empty
from lll_workbench.tables import ResamplingTable
from lll_workbench.wdag import (
    consistent_with_table,
    single_sink_prefix_count,
    validate_wdag,
)

HALF = IntervalUnion(((Fraction(0), Fraction(1, 2)),))
QUARTER = IntervalUnion(((Fraction(0), Fraction(1, 4)),))


def single_event_system(allowed=HALF):
    return EventSystem((Uniform01(),), (Event(vbl=(1,), allowed=((1, allowed),)),))


class TestSystems:
    def test_event_probability_box(self):
        sys1 = single_event_system()
        assert sys1.event_probability(1) == Fraction(1, 2)

    def test_predicate_probability_exhaustive(self):
        fair = FiniteVariable((Fraction(1, 2), Fraction(1, 2)))
        system = EventSystem(
            (fair, fair),
            (Event(vbl=(1, 2), predicate=lambda a: a[1] == a[2]),),
        )
        assert system.event_probability(1) == Fraction(1, 2)

    def test_extremal_probabilities(self):
        system = extremal_cycle_instance(4)
        assert [system.event_probability(i) for i in range(1, 5)] == [Fraction(1, 4)] * 4
        system = extremal_cycle_instance(5, Fraction(1, 3))
        assert system.event_probability(1) == Fraction(2, 9)

    def test_extremal_adjacent_events_exclusive(self):
        inter = measure_pair_intersections(extremal_cycle_instance(4))
        assert set(inter.values()) == {Fraction(0)}

    def test_extremal_avoidance_probability_matches_q(self):
        # only the monotone threshold patterns avoid every event: q_0 at the
        # quarter point equals the count 2*(l+... of safe half-space patterns
        for length in (4, 5, 6):
            system = extremal_cycle_instance(length)
            patterns = 0
            for bits in range(1 << length):
                low = [bool(bits >> k & 1) for k in range(length)]
                bad = any(
                    low[i] and not low[(i + 1) % length] for i in range(length)
                )
                if not bad:
                    patterns += 1
            avoid = Fraction(patterns, 1 << length)
            assert avoid == q_empty(
                system.dependency_graph(),
                ProbabilityVector.uniform(length, Fraction(1, 4)),
            )

    def test_pair_intersection_examples(self):
        u = Uniform01()
        system = EventSystem(
            (u,),
            (
                Event(vbl=(1,), allowed=((1, HALF),)),
                Event(vbl=(1,), allowed=((1, QUARTER),)),
            ),
        )
        assert pair_intersection(system, 1, 2) == Fraction(1, 4)
        three_quarters = IntervalUnion(((Fraction(0), Fraction(3, 4)),))
        system = EventSystem(
            (u, u, u),
            (
                Event(vbl=(1, 2), allowed=((1, HALF), (2, HALF))),
                Event(vbl=(2, 3), allowed=((2, three_quarters), (3, HALF))),
            ),
        )
        assert pair_intersection(system, 1, 2) == Fraction(1, 8)


class TestRuns:
    def test_probability_zero_event_stops_immediately(self):
        system = single_event_system(IntervalUnion(()))
        stats = run_mt(system, "lowest-index", 0)
        assert stats.t == 0 and not stats.truncated

    def test_geometric_mean_near_one(self):
        est = estimate_expected_steps(single_event_system(), "lowest-index", 100_000, 7)
        assert est.truncated_runs == 0
        assert 0.97 <= est.mean <= 1.03

    def test_determinism(self):
        system = extremal_cycle_instance(4)
        a = run_mt(system, "uniform-violated", 99)
        b = run_mt(system, "uniform-violated", 99)
        assert a == b

    def test_extremal_terminates_in_constant_pattern(self):
        system = extremal_cycle_instance(4)
        for seed in range(25):
            stats = run_mt(system, "lowest-index", seed)
            assert not stats.truncated
            low = [stats.final_assignment[j] < Fraction(1, 2) for j in range(1, 5)]
            assert all(low) or not any(low)

    def test_replay_with_fresh_table_matches(self):
        system = extremal_cycle_instance(5)
        online = run_mt(system, "lowest-index", 123)
        replay = run_mt(
            system, "lowest-index", 123, table=ResamplingTable(system.variables, 123)
        )
        assert online == replay

    def test_selected_events_were_violated(self):
        # replay the run from its own table and recheck every selection
        system = extremal_cycle_instance(4)
        for rule in ("lowest-index", "uniform-violated", "recent-neighbor"):
            stats = run_mt(system, rule, 5)
            table = ResamplingTable(system.variables, 5)
            cursor = {j: 1 for j in range(1, 6 - 1)}
            assignment = {j: table.entry(j, 1) for j in cursor}
            for step in stats.sequence:
                assert system.holds(step, assignment)
                for j in system.events[step - 1].vbl:
                    cursor[j] += 1
                    assignment[j] = table.entry(j, cursor[j])
            assert not any(
                system.holds(i, assignment) for i in range(1, system.m + 1)
            )

    def test_bad_rule_rejected(self):
        always = IntervalUnion(((Fraction(0), Fraction(1)),))
        system = single_event_system(always)
        with pytest.raises(InputError):
            run_mt(system, lambda violated, history, rng: 999, 0, step_cap=3)

    def test_truncation_flagged(self):
        always = IntervalUnion(((Fraction(0), Fraction(1)),))
        system = single_event_system(always)
        stats = run_mt(system, "lowest-index", 0, step_cap=5)
        assert stats.truncated and stats.t == 5
        est = estimate_expected_steps(system, "lowest-index", 4, 0, step_cap=5)
        assert est.truncated_runs == 4

    def test_worker_split_is_stable(self):
        system = extremal_cycle_instance(4)
        seq = estimate_expected_steps(system, "lowest-index", 60, 11, workers=1)
        par = estimate_expected_steps(system, "lowest-index", 60, 11, workers=2)
        assert seq.per_trial == par.per_trial

    def test_null_event_estimate_is_zero(self):
        system = single_event_system(IntervalUnion(()))
        est = estimate_expected_steps(system, "lowest-index", 200, 3)
        assert est.mean == 0.0 and est.stderr == 0.0 and est.truncated_runs == 0

    def test_extremal_mean_within_scaled_bound(self):
        # thresholds 1/3 put each event at 2/9 = boundary/(1+eps) for some
        # eps > 0.3, so the mean must stay under m/eps with room to spare
        from lll_workbench.shearer import boundary_scale

        system = extremal_cycle_instance(4, Fraction(1, 3))
        g = system.dependency_graph()
        scale = boundary_scale(g, ProbabilityVector.uniform(4, 1), Fraction(1, 1 << 20))
        eps = scale.lo / Fraction(2, 9) - 1
        assert eps > Fraction(3, 10)
        est = estimate_expected_steps(system, "lowest-index", 3000, 17)
        assert est.truncated_runs == 0
        assert est.mean + 3 * est.stderr <= float(4 / eps)


class TestWitnessDags:
    def test_single_step(self):
        system = single_event_system()
        stats = run_mt(system, "lowest-index", 1)
        if stats.t:
            dag = witness_dag_of_run(system, stats)
            assert dag.labels == stats.sequence

    def test_same_label_chain(self):
        # two resamples of the same event force an arc
        system = single_event_system()
        stats = RunStats((1, 1), False, {}, {1: 2})
        dag = witness_dag_of_run(system, stats)
        assert dag.arcs == frozenset({(1, 2)})

    def test_path_system_arc_pattern(self):
        # events 1-2 share a variable, 2-3 share a variable, 1 and 3 do not
        u = Uniform01()
        system = EventSystem(
            (u, u, u, u),
            (
                Event(vbl=(1, 2), allowed=((1, HALF), (2, HALF))),
                Event(vbl=(2, 3), allowed=((2, HALF), (3, HALF))),
                Event(vbl=(3, 4), allowed=((3, HALF), (4, HALF))),
            ),
        )
        stats = RunStats((1, 3, 2, 1), False, {}, {1: 2, 2: 1, 3: 1})
        dag = witness_dag_of_run(system, stats)
        assert validate_wdag(dag, system.dependency_graph())
        assert dag.arcs == frozenset({(1, 3), (1, 4), (2, 3), (3, 4)})

    def test_occurred_dag_is_table_consistent(self):
        system = extremal_cycle_instance(4)
        hits = 0
        for seed in range(40):
            stats = run_mt(system, "lowest-index", seed)
            if stats.truncated or not stats.t:
                continue
            dag = witness_dag_of_run(system, stats)
            table = ResamplingTable(system.variables, seed)
            assert consistent_with_table(dag, system, table)
            hits += 1
        assert hits > 5

    def test_prefix_count_identity_small(self):
        system = extremal_cycle_instance(4)
        checked = 0
        for seed in range(60):
            stats = run_mt(system, "lowest-index", f"pfx/{seed}")
            if stats.truncated or stats.t > 8:
                continue
            dag = witness_dag_of_run(system, stats)
            assert single_sink_prefix_count(dag) == stats.t
            checked += 1
        assert checked >= 30


class TestValueSets:
    def test_interval_union_merges(self):
        iu = IntervalUnion(
            ((Fraction(0), Fraction(1, 4)), (Fraction(1, 8), Fraction(1, 2)))
        )
        assert iu.intervals == ((Fraction(0), Fraction(1, 2)),)
        assert iu.measure() == Fraction(1, 2)

    def test_value_set(self):
        vs = ValueSet(frozenset({0, 2}))
        assert vs.contains(0) and not vs.contains(1)
        assert vs.intersect(ValueSet(frozenset({2, 3}))).values == frozenset({2})

    def test_finite_variable_sampling(self):
        var = FiniteVariable((Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)))
        assert var.value_from_unit(Fraction(0)) == 0
        assert var.value_from_unit(Fraction(1, 4)) == 1
        assert var.value_from_unit(Fraction(99, 100)) == 2
