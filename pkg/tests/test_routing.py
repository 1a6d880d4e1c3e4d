"""Routing instance construction, timing incidence and rounding.

Frozen timing values below are hand-derived from the entry schedule:
horizontal streets release platoons at k*T, vertical ones at (k+1/2)*T,
and a platoon passes a point at its entry epoch plus distance over speed.
"""

import itertools
import math

import numpy as np
import pytest

from gridrhythm.network import GridNetwork, ShortestPathSet, build_grid
from gridrhythm.rhythm import RhythmConfig, build_schedule
from gridrhythm.routing import (
    MPR,
    SPR,
    Reservations,
    RoundingReport,
    RoutingContext,
    RoutingError,
    RoutingInstance,
    TimedPath,
    build_mpr,
    build_spr,
    commit_reservations,
    compute_incidence,
    escalate_penalties,
    reservation_horizon_intervals,
    shift_timed_path,
    solve_rounding,
)

# -- oracles -----------------------------------------------------------------


def enumerate_paths_within(net, origin, dest, max_len):
    """Every link path origin->dest with total length <= max_len.

    Plain recursion with no pruning or caching; paths end at the first
    arrival at dest.  Independent of the implementation under test.
    """
    found = []

    def rec(node, used, acc):
        for link_id in net.out_links(node):
            link = net.link(link_id)
            length = used + link.length
            if length > max_len + 1e-6:
                continue
            acc.append(link_id)
            if link.head == dest:
                found.append(tuple(acc))
            else:
                rec(link.head, length, acc)
            acc.pop()

    rec(origin, 0.0, [])
    return found


def brute_force_optimum(instance):
    """Exact integer optimum by exhaustive enumeration (small instances)."""
    npaths = len(instance.paths)
    demands = [instance.demands[instance.od_order[oi]] for oi in instance.od_of_col]
    best = math.inf
    for flows in itertools.product(*[range(d + 1) for d in demands]):
        per_od = {od: 0 for od in instance.od_order}
        for col, f in enumerate(flows):
            per_od[instance.od_order[instance.od_of_col[col]]] += f
        if any(per_od[od] > instance.demands[od] for od in instance.od_order):
            continue
        used = {}
        for col, f in enumerate(flows):
            for te in instance.paths[col].temporal_links:
                used[te] = used.get(te, 0) + f
        if any(used.get(te, 0) > cap for te, cap in zip(instance.binding, instance.row_caps)):
            continue
        x = np.zeros(instance.n_columns)
        x[:npaths] = flows
        if instance.kind == MPR:
            for oi, od in enumerate(instance.od_order):
                x[instance.slack_column(oi)] = instance.demands[od] - per_od[od]
        best = min(best, instance.objective_value(x))
    return best


def fake_path(od, temporal_links, cost_s=10.0):
    """Minimal TimedPath for synthetic instances (timing fields nominal)."""
    k = len(temporal_links)
    epochs = tuple(10.0 * i for i in range(k))
    return TimedPath(
        od=od,
        links=tuple(a for a, _ in temporal_links),
        travel_times=(10.0,) * k,
        start_epoch=0.0,
        start_interval=0,
        epochs=epochs,
        temporal_links=tuple(temporal_links),
        cost_s=cost_s,
        exit_epoch=epochs[-1] + 10.0,
    )


def make_instance(kind, od_paths, caps, demands, penalties, costs=None):
    """Synthetic RoutingInstance from (od -> list of temporal-link lists)."""
    od_order = sorted(od_paths)
    paths, od_of_col = [], []
    min_cost = {}
    for oi, od in enumerate(od_order):
        for pi, tls in enumerate(od_paths[od]):
            cost = costs[od][pi] if costs else 10.0
            paths.append(fake_path(od, tls, cost_s=cost))
            od_of_col.append(oi)
            min_cost[od] = min(min_cost.get(od, math.inf), cost)
    binding = sorted({te for tp in paths for te in tp.temporal_links},
                     key=lambda te: (te[1], te[0]))
    return RoutingInstance(
        kind=kind,
        interval=0,
        paths=paths,
        od_order=od_order,
        od_of_col=od_of_col,
        demands=dict(demands),
        penalties=dict(penalties),
        counters={od: 0 for od in od_order},
        binding=binding,
        row_caps=[caps[te] for te in binding],
        od_min_cost=min_cost if kind == MPR else None,
    )


# -- fixtures ----------------------------------------------------------------


def grid4(jps=0):
    return build_grid(4, 4, 150.0, junctions_per_segment=jps)


def cfg10():
    return RhythmConfig(rhythm_s=10.0, speed_mps=15.0)


def ctx4(jps=0):
    net = grid4(jps)
    cfg = cfg10()
    return RoutingContext(net, cfg, build_schedule(cfg, net, horizon_s=3600.0))


def ent(net, street_id):
    return net.street(street_id).nodes[0]


def ext(net, street_id):
    return net.street(street_id).nodes[-1]


# -- incidence timing --------------------------------------------------------


class TestComputeIncidence:
    def test_straight_three_links_one_interval_each(self):
        ctx = ctx4()
        tp = compute_incidence([0, 1, 2], 0, ctx)
        assert tp.temporal_links == ((0, 0), (1, 1), (2, 2))
        assert tp.epochs == (0.0, 10.0, 20.0)
        assert tp.start_epoch == 0.0
        assert tp.cost_s == pytest.approx(30.0)
        assert tp.exit_epoch == pytest.approx(30.0)

    def test_straight_later_interval_shifts_wholesale(self):
        ctx = ctx4()
        tp = compute_incidence([0, 1, 2], 3, ctx)
        assert tp.temporal_links == ((0, 3), (1, 4), (2, 5))
        assert tp.epochs == (30.0, 40.0, 50.0)

    def test_turn_onto_vertical_waits_for_offset_platoon(self):
        # east on the bottom street, then north at the second crossroads;
        # the vertical platoon passes that crossroads at k*10 + 15, so the
        # arrival at epoch 20 waits until 25
        ctx = ctx4()
        tp = compute_incidence([0, 1, 26], 0, ctx)
        assert tp.epochs == (0.0, 10.0, 25.0)
        assert tp.temporal_links == ((0, 0), (1, 1), (26, 2))
        assert tp.cost_s == pytest.approx(30.0)  # free-flow, waits excluded
        assert tp.exit_epoch == pytest.approx(35.0)

    def test_turn_onto_horizontal_crosses_interval_boundary(self):
        # north on the second vertical street, turn east at row 2: arrival
        # epoch 35 snaps to the horizontal lattice at 40, pushing the
        # post-turn link from interval 3 to interval 4
        ctx = ctx4()
        tp = compute_incidence([25, 26, 27, 12], 0, ctx)
        assert tp.epochs == (5.0, 15.0, 25.0, 40.0)
        assert tp.temporal_links == ((25, 0), (26, 1), (27, 2), (12, 4))
        assert tp.cost_s == pytest.approx(40.0)
        assert tp.exit_epoch == pytest.approx(50.0)

    def test_junction_origin_boards_mid_street(self):
        ctx = ctx4(jps=1)
        junction = ctx.net.street(0).nodes[2]
        assert ctx.net.node(junction).kind == "junction"
        first_out = ctx.net.out_links(junction)[0]
        tp = compute_incidence([first_out, first_out + 1, first_out + 2], 0, ctx)
        # raw pass time at 225 m is 15 s, but the schedule is periodic:
        # the platoon already running mid-street passes at 15 mod 10 = 5 s
        assert tp.start_epoch == pytest.approx(5.0)
        assert tp.temporal_links[0][1] == 0
        # consecutive half-segment links can share an interval label
        intervals = [e for _, e in tp.temporal_links]
        assert intervals == sorted(intervals)
        assert intervals[1] == intervals[2] == 1

    def test_empty_path_rejected(self):
        with pytest.raises(RoutingError):
            compute_incidence([], 0, ctx4())

    def test_crossroads_origin_rejected(self):
        with pytest.raises(RoutingError, match="entrance or junction"):
            compute_incidence([1, 2], 0, ctx4())

    def test_non_chaining_links_rejected(self):
        with pytest.raises(RoutingError, match="chain"):
            compute_incidence([0, 2], 0, ctx4())

    def test_delta_determinism_against_fresh_context(self):
        # recomputing through an independent context reproduces every path
        # bit-exactly, across rhythms and junction layouts
        for jps, rhythm, blocks in [(0, 10.0, 1), (1, 10.0, 1), (0, 5.0, 2)]:
            net = build_grid(4, 4, 150.0, junctions_per_segment=jps)
            speed = 150.0 / (blocks * rhythm)
            cfg = RhythmConfig(rhythm_s=rhythm, speed_mps=speed, blocks_per_rhythm=blocks)
            ctx_a = RoutingContext(net, cfg)
            ctx_b = RoutingContext(net, cfg)
            sps = ShortestPathSet(net, ent(net, 0))
            for dest in (ext(net, 0), ext(net, 5), ext(net, 2)):
                path = sps.extract(dest)
                for interval in (0, 1, 7):
                    got = ctx_a.timed_path(path, interval)
                    ref = compute_incidence(path, interval, ctx_b)
                    assert got == ref

    def test_whole_block_paths_strictly_increase_intervals(self):
        ctx = ctx4()
        sps = ShortestPathSet(ctx.net, ent(ctx.net, 0))
        for dest in (ext(ctx.net, 0), ext(ctx.net, 5), ext(ctx.net, 3)):
            tp = ctx.timed_path(sps.extract(dest), 2)
            intervals = [e for _, e in tp.temporal_links]
            assert all(b > a for a, b in zip(intervals, intervals[1:]))

    def test_shift_backwards_rejected(self):
        ctx = ctx4()
        tp = compute_incidence([0, 1, 2], 3, ctx)
        with pytest.raises(RoutingError):
            shift_timed_path(tp, 1, 10.0)


# -- single-path instances -----------------------------------------------------


class TestBuildSpr:
    def test_empty_queues_zero_columns(self):
        ctx = ctx4()
        inst = build_spr(ctx, 0, {}, Reservations(ctx))
        assert inst.n_columns == 0
        report = solve_rounding(inst)
        assert report.lower_bound == report.upper_bound == 0.0
        assert report.admitted == {}

    def test_single_od_uncapacitated(self):
        ctx = ctx4()
        od = (ent(ctx.net, 0), ext(ctx.net, 0))
        inst = build_spr(ctx, 0, {od: 5}, Reservations(ctx))
        report = solve_rounding(inst)
        assert report.admitted == {od: 5}
        assert report.upper_bound == 0.0  # nobody delayed
        assert report.rounding_steps == 0
        assert report.gap == 0.0

    def test_two_ods_share_links_split_favors_larger_penalty(self):
        ctx = ctx4()
        a = (ent(ctx.net, 0), ext(ctx.net, 0))
        b = (ent(ctx.net, 0), ext(ctx.net, 5))
        queues = {a: 10, b: 10}
        inst = build_spr(
            ctx, 0, queues, Reservations(ctx), penalties={a: 40.0, b: 10.0}
        )
        # both shortest paths ride the same first two platoons, capacity 16
        shared = set(inst.paths[0].temporal_links) & set(inst.paths[1].temporal_links)
        assert len(shared) == 2
        report = solve_rounding(inst)
        assert report.admitted == {a: 10, b: 6}
        assert report.upper_bound == pytest.approx(brute_force_optimum(inst))

    def test_rows_limited_to_touched_links(self):
        ctx = ctx4()
        od = (ent(ctx.net, 0), ext(ctx.net, 0))
        inst = build_spr(ctx, 4, {od: 3}, Reservations(ctx))
        assert inst.binding == list(inst.paths[0].temporal_links)
        assert all(cap == 16 or cap == 18 for cap in inst.row_caps)

    def test_negative_demand_rejected(self):
        ctx = ctx4()
        with pytest.raises(RoutingError):
            build_spr(ctx, 0, {(0, 1): -2}, Reservations(ctx))

    def test_rng_seed_reproducible_and_varied(self):
        net = build_grid(6, 6, 150.0)
        cfg = cfg10()
        ctx = RoutingContext(net, cfg)
        od = (ent(net, 0), ext(net, 9))  # many shortest paths
        assert ShortestPathSet(net, od[0]).path_count(od[1]) > 2
        res = Reservations(ctx)
        first = build_spr(ctx, 0, {od: 1}, res, rng_seed=7)
        again = build_spr(ctx, 0, {od: 1}, res, rng_seed=7)
        assert first.paths[0].links == again.paths[0].links
        seen = {
            build_spr(ctx, 0, {od: 1}, res, rng_seed=s).paths[0].links
            for s in range(12)
        }
        assert len(seen) > 1

    def test_incidence_matrix_columns_match_delta(self):
        ctx = ctx4()
        a = (ent(ctx.net, 0), ext(ctx.net, 0))
        b = (ent(ctx.net, 0), ext(ctx.net, 5))
        inst = build_spr(ctx, 0, {a: 4, b: 2}, Reservations(ctx))
        mat = inst.incidence_matrix()
        assert set(np.unique(mat)) <= {0.0, 1.0}
        ncap = len(inst.binding)
        for col, tp in enumerate(inst.paths):
            expect = np.zeros(ncap)
            for te in tp.temporal_links:
                expect[inst.binding.index(te)] = 1.0
            assert np.array_equal(mat[:ncap, col], expect)
        text = inst.dump_text()
        assert "kind SPR" in text and "matrix" in text


# -- multi-path instances ------------------------------------------------------


class TestBuildMpr:
    def test_budget_zero_yields_all_shortest_paths(self):
        ctx = ctx4()
        od = (ent(ctx.net, 0), ext(ctx.net, 7))
        count = ShortestPathSet(ctx.net, od[0]).path_count(od[1])
        assert count > 1
        inst = build_mpr(ctx, 0, {od: 2}, Reservations(ctx), detour_budget_s=0.0)
        assert len(inst.paths) == count
        dist = ShortestPathSet(ctx.net, od[0]).distance(od[1])
        for tp in inst.paths:
            assert tp.cost_s == pytest.approx(dist / 15.0)

    def test_budget_enumeration_matches_oracle_with_loops(self):
        net = build_grid(2, 2, 150.0)
        cfg = cfg10()
        ctx = RoutingContext(net, cfg)
        od = (ent(net, 0), ext(net, 3))
        shortest = ShortestPathSet(net, od[0]).distance(od[1])
        got = set(ctx.eligible_link_paths(od[0], od[1], 40.0))
        want = set(enumerate_paths_within(net, od[0], od[1], shortest + 40.0 * 15.0))
        assert got == want
        assert len(got) > 1
        looped = [
            p for p in got
            if len(set(net.link(l).tail for l in p)) < len(p)
        ]
        assert looped  # detour budget admits paths revisiting a node

    def test_overloaded_demand_absorbed_by_slack(self):
        net = build_grid(2, 2, 150.0)
        ctx = RoutingContext(net, cfg10())
        od = (ent(net, 0), ext(net, 0))
        inst = build_mpr(ctx, 0, {od: 40}, Reservations(ctx), detour_budget_s=0.0)
        report = solve_rounding(inst)
        assert report.admitted[od] + report.slack[od] == 40
        assert report.admitted[od] == 16  # tightest platoon on the way out

    def test_shortest_slot_beats_waiting_at_base_penalty(self):
        # detour-priced objective: an empty network admits everyone
        # immediately even though path travel exceeds one period
        ctx = ctx4()
        od = (ent(ctx.net, 0), ext(ctx.net, 5))
        inst = build_mpr(ctx, 0, {od: 6}, Reservations(ctx), detour_budget_s=40.0)
        report = solve_rounding(inst)
        assert report.admitted[od] == 6
        assert report.slack[od] == 0

    def test_entry_platoon_caps_single_origin_regardless_of_detours(self):
        # every eligible path boards the same entrance platoon, so one OD
        # cannot admit more than that platoon holds in a single interval
        ctx = ctx4()
        od = (ent(ctx.net, 0), ext(ctx.net, 7))
        inst = build_mpr(ctx, 0, {od: 20}, Reservations(ctx), detour_budget_s=40.0)
        report = solve_rounding(inst)
        assert report.admitted[od] == 16
        assert report.slack[od] == 4

    def test_detour_taken_once_waiting_cost_overtakes_it(self):
        # mid-street platoon saturated; a fresh queue prefers to wait one
        # interval (penalty 10) over a 40 s detour, but a queue starved
        # long enough for its penalty to pass the detour cost gets routed
        # around the blockage
        ctx = ctx4()
        od = (ent(ctx.net, 0), ext(ctx.net, 0))
        res = Reservations(ctx)
        res.commit(2, 2, ctx.capacity(2))
        fresh = solve_rounding(
            build_mpr(ctx, 0, {od: 10}, res, detour_budget_s=40.0)
        )
        assert fresh.admitted[od] == 0 and fresh.slack[od] == 10
        starved = solve_rounding(
            build_mpr(ctx, 0, {od: 10}, res, detour_budget_s=40.0,
                      counters={od: 4})
        )
        assert starved.admitted[od] == 10
        assert starved.slack[od] == 0
        inst = build_mpr(ctx, 0, {od: 10}, res, detour_budget_s=40.0,
                         counters={od: 4})
        report = solve_rounding(inst)
        for col, tp in enumerate(inst.paths):
            if report.x[col] > 0:
                assert (2, 2) not in tp.temporal_links


# -- rounding ------------------------------------------------------------------


class TestSolveRounding:
    def test_interconnection_loop_admits_one(self):
        # three unit-demand ODs, three unit-capacity temporal links, each
        # path using two of them in a cycle: the relaxation sits at
        # (1/2, 1/2, 1/2) with value 1.5 admitted, and rounding lands on an
        # integer point admitting exactly one vehicle
        inst = make_instance(
            SPR,
            od_paths={
                (0, 1): [[(100, 0), (101, 0)]],
                (2, 3): [[(101, 0), (102, 0)]],
                (4, 5): [[(102, 0), (100, 0)]],
            },
            caps={(100, 0): 1, (101, 0): 1, (102, 0): 1},
            demands={(0, 1): 1, (2, 3): 1, (4, 5): 1},
            penalties={(0, 1): 1.0, (2, 3): 1.0, (4, 5): 1.0},
        )
        report = solve_rounding(inst)
        assert report.lower_bound == pytest.approx(1.5)
        assert sum(report.admitted.values()) == 1
        assert report.upper_bound == pytest.approx(2.0)
        assert report.gap == pytest.approx(1.0 / 3.0)
        assert report.rounding_steps >= 1

    def test_gap_nonnegative_and_bracket_contains_exact(self):
        rng = np.random.default_rng(42)
        link_pool = [(200 + i, 0) for i in range(4)] + [(200 + i, 1) for i in range(4)]
        for trial in range(40):
            kind = SPR if trial % 2 == 0 else MPR
            n_ods = int(rng.integers(1, 4))
            od_paths, demands, penalties, costs = {}, {}, {}, {}
            for k in range(n_ods):
                od = (10 * k, 10 * k + 1)
                n_paths = int(rng.integers(1, 4)) if kind == MPR else 1
                paths = []
                for _ in range(n_paths):
                    size = int(rng.integers(1, 4))
                    picks = rng.choice(len(link_pool), size=size, replace=False)
                    paths.append([link_pool[i] for i in sorted(picks)])
                od_paths[od] = paths
                demands[od] = int(rng.integers(1, 5))
                penalties[od] = float(rng.choice([10.0, 20.0, 40.0]))
                costs[od] = [float(30 + 10 * rng.integers(0, 4)) for _ in paths]
            caps = {te: int(rng.integers(0, 6)) for te in link_pool}
            inst = make_instance(kind, od_paths, caps, demands, penalties, costs)
            report = solve_rounding(inst)
            exact = brute_force_optimum(inst)
            assert report.gap >= 0.0
            assert report.lower_bound <= exact + 1e-7
            assert exact <= report.upper_bound + 1e-7
            assert np.allclose(report.x, np.rint(report.x))

    def test_monotone_admission_priority(self):
        # one seat left on the shared first platoon: the OD starved for
        # three intervals outbids an identical fresh competitor, whichever
        # of the two it is
        ctx = ctx4()
        a = (ent(ctx.net, 0), ext(ctx.net, 0))
        b = (ent(ctx.net, 0), ext(ctx.net, 5))
        for starved, other in [(a, b), (b, a)]:
            res = Reservations(ctx)
            res.commit(0, 0, 15)  # shared entrance platoon: one slot left
            inst = build_spr(
                ctx, 0, {a: 1, b: 1}, res, counters={starved: 3}
            )
            report = solve_rounding(inst)
            assert report.admitted[starved] == 1
            assert report.admitted[other] == 0


# -- penalties and reservations -------------------------------------------------


class TestEscalation:
    def test_cleared_queue_resets(self):
        pen, cnt = escalate_penalties({(0, 1): 4}, {(0, 1): 4}, {(0, 1): 5}, 10.0)
        assert cnt[(0, 1)] == 0
        assert pen[(0, 1)] == 10.0

    def test_three_starved_intervals_quadruple_penalty(self):
        counters = {}
        od = (0, 1)
        for _ in range(3):
            pen, counters = escalate_penalties({od: 5}, {od: 2}, counters, 10.0)
        assert counters[od] == 3
        assert pen[od] == 40.0

    def test_no_demand_keeps_base_penalty(self):
        pen, cnt = escalate_penalties({(0, 1): 0}, {}, {}, 10.0)
        assert pen[(0, 1)] == 10.0
        assert cnt[(0, 1)] == 0

    def test_served_above_demand_rejected(self):
        with pytest.raises(RoutingError):
            escalate_penalties({(0, 1): 1}, {(0, 1): 2}, {}, 10.0)


class TestReservations:
    def test_commit_decrements_every_traversed_link(self):
        ctx = ctx4()
        od = (ent(ctx.net, 0), ext(ctx.net, 0))
        res = Reservations(ctx)
        inst = build_spr(ctx, 0, {od: 5}, res)
        report = solve_rounding(inst)
        commit_reservations(report, inst, res)
        for a, e in inst.paths[0].temporal_links:
            assert res.remaining(a, e) == ctx.capacity(a) - 5

    def test_shared_link_sums_to_capacity(self):
        # link 1 ends at a crossroads: capacity 16, filled exactly
        inst = make_instance(
            SPR,
            od_paths={(0, 1): [[(1, 0)]], (2, 3): [[(1, 0)]]},
            caps={(1, 0): 16},
            demands={(0, 1): 7, (2, 3): 9},
            penalties={(0, 1): 10.0, (2, 3): 10.0},
        )
        ctx = ctx4()
        res = Reservations(ctx)
        commit_reservations(np.array([7, 9]), inst, res)
        assert ctx.capacity(1) == 16
        assert res.remaining(1, 0) == 0

    def test_over_commit_aborts_without_mutation(self):
        ctx = ctx4()
        res = Reservations(ctx)
        res.commit(0, 0, 10)
        inst = make_instance(
            SPR,
            od_paths={(0, 1): [[(0, 0)]]},
            caps={(0, 0): 16},
            demands={(0, 1): 10},
            penalties={(0, 1): 10.0},
        )
        with pytest.raises(RoutingError, match="over-commit"):
            commit_reservations(np.array([10]), inst, res)
        assert res.remaining(0, 0) == 6

    def test_fractional_assignment_rejected(self):
        ctx = ctx4()
        inst = make_instance(
            SPR,
            od_paths={(0, 1): [[(0, 0)]]},
            caps={(0, 0): 16},
            demands={(0, 1): 2},
            penalties={(0, 1): 10.0},
        )
        with pytest.raises(RoutingError):
            commit_reservations(np.array([0.5]), inst, Reservations(ctx))

    def test_junction_headed_links_get_segment_capacity(self):
        ctx = ctx4(jps=1)
        res = Reservations(ctx)
        into_junction = next(
            l.id for l in ctx.net.links if ctx.net.node(l.head).kind == "junction"
        )
        into_cross = next(
            l.id for l in ctx.net.links if ctx.net.node(l.head).kind == "crossroads"
        )
        assert res.remaining(into_junction, 0) == 18
        assert res.remaining(into_cross, 0) == 16

    def test_trim_drops_state_keeps_audit(self):
        ctx = ctx4()
        res = Reservations(ctx)
        res.commit(0, 0, 3)
        res.commit(0, 5, 2)
        res.trim(before_interval=4)
        assert res.remaining(0, 0) == ctx.capacity(0)  # forgotten
        assert res.remaining(0, 5) == ctx.capacity(0) - 2
        assert res.committed() == {(0, 0): 3, (0, 5): 2}

    def test_horizon_covers_longest_trip(self):
        ctx = ctx4()
        horizon = reservation_horizon_intervals(ctx)
        longest = max(
            ShortestPathSet(ctx.net, ent(ctx.net, s)).distance(ext(ctx.net, t))
            for s in range(8)
            for t in range(8)
        )
        assert horizon >= longest / 15.0 / 10.0


# -- capacity safety across a run ----------------------------------------------


class TestCapacitySafety:
    def test_multi_interval_run_never_exceeds_caps(self):
        net = build_grid(4, 4, 150.0)
        cfg = cfg10()
        ctx = RoutingContext(net, cfg)
        res = Reservations(ctx)
        rng = np.random.default_rng(3)
        origins = [ent(net, s) for s in range(8)]
        exits = [ext(net, s) for s in range(8)]
        queues: dict = {}
        counters: dict = {}
        for interval in range(8):
            for _ in range(6):
                o = origins[rng.integers(0, 8)]
                d = exits[rng.integers(0, 8)]
                if o != d:
                    queues[(o, d)] = queues.get((o, d), 0) + int(rng.integers(1, 5))
            builder = build_spr if interval % 2 == 0 else build_mpr
            inst = builder(ctx, interval, queues, res, counters=counters)
            report = solve_rounding(inst)
            commit_reservations(report, inst, res)
            _, counters = escalate_penalties(queues, report.admitted, counters, 10.0)
            for od, got in report.admitted.items():
                queues[od] -= got
                if queues[od] == 0:
                    del queues[od]
            res.trim(interval - 1)
        for (a, e), total in res.committed().items():
            assert 0 <= total <= ctx.capacity(a)
