"""Speed profiles for irregular blocks: feasibility, construction, chaining."""

import math
import random

import pytest

from gridrhythm.network import build_grid
from gridrhythm.rhythm import RhythmConfig, build_schedule, verify_conflict_free
from gridrhythm.speedcurve import (
    CurveError,
    SpeedCurveSpec,
    construct_curve,
    covered_distance,
    crossroads_travel_offsets,
    feasibility_check,
    generate_profile,
    max_reach_m,
    min_integer_travel,
)

KIN = dict(v_max=15.0, accel_max=2.5, decel_max=3.0, v_cross_min=12.0)


def spec_for(lengths=(150.0,), v0=15.0, rhythm=10.0, **kw):
    params = dict(KIN, **kw)
    return SpeedCurveSpec(lengths=tuple(lengths), v0=v0, rhythm_s=rhythm, **params)


# -- feasibility thresholds ------------------------------------------------


def test_threshold_values():
    spec = spec_for()
    assert spec.min_rhythm_s == pytest.approx(9.8, abs=1e-9)
    assert spec.min_length_m == pytest.approx(66.3, abs=1e-9)


def test_feasible_at_reference_kinematics():
    spec = spec_for(lengths=(150.0, 200.0, 120.0))
    assert feasibility_check(spec) == [True, True, True]


def test_rhythm_below_threshold_infeasible():
    spec = spec_for(lengths=(150.0,), rhythm=9.7)
    assert feasibility_check(spec) == [False]


def test_boundary_length_inclusive():
    spec = spec_for(lengths=(66.3, 66.2), rhythm=9.8)
    assert feasibility_check(spec) == [True, False]


# -- minimum period count --------------------------------------------------


def test_cruise_block_needs_one_period():
    spec = spec_for()
    assert min_integer_travel(spec, 150.0, 15.0) == 1


def test_one_meter_over_needs_two():
    spec = spec_for()
    assert min_integer_travel(spec, 151.0, 15.0) == 2


def test_reach_from_reduced_entry_speed():
    # oracle: forward-integrate accelerate-at-limit capped at v_max with
    # dt=1e-6 over one 10 s period starting from 12 m/s -> 148.200015 m
    spec = spec_for()
    assert max_reach_m(spec, 12.0, 1) == pytest.approx(148.2, abs=1e-4)
    assert min_integer_travel(spec, 150.0, 12.0) == 2
    assert min_integer_travel(spec, 148.0, 12.0) == 1


def test_reach_boundary_counts_as_covered():
    spec = spec_for()
    assert max_reach_m(spec, 15.0, 1) == pytest.approx(150.0)
    assert min_integer_travel(spec, 150.0, 15.0) == 1


def test_entry_speed_outside_band_rejected():
    spec = spec_for()
    with pytest.raises(CurveError):
        min_integer_travel(spec, 150.0, 11.0)
    with pytest.raises(CurveError):
        construct_curve(spec, 150.0, 15.5)


# -- single-segment construction --------------------------------------------


def test_constant_speed_curve():
    spec = spec_for()
    seg = construct_curve(spec, 150.0, 15.0)
    assert seg.multiples == 1
    assert seg.duration_s == pytest.approx(10.0)
    assert seg.hold_speed == pytest.approx(15.0, abs=1e-6)
    assert seg.exit_speed == pytest.approx(15.0, abs=1e-6)
    for t in (0.0, 3.3, 7.1, 10.0):
        assert seg.speed_at(t) == pytest.approx(15.0, abs=1e-6)


def test_full_brake_v_profile():
    # the shortest admissible block forces hold speed down to zero
    spec = spec_for(lengths=(66.3,))
    seg = construct_curve(spec, 66.3, 15.0)
    assert seg.multiples == 1
    assert seg.hold_speed == pytest.approx(0.0, abs=1e-4)
    assert seg.exit_speed == pytest.approx(12.0, abs=1e-6)
    assert seg.distance_m() == pytest.approx(66.3, abs=1e-6)


def test_distance_matched_to_tolerance():
    spec = spec_for()
    for length in (66.3, 90.0, 120.0, 148.0, 150.0, 199.9, 260.0):
        entry = 15.0
        seg = construct_curve(spec, length, entry)
        assert abs(seg.distance_m() - length) <= 1e-6


def test_mid_block_dip_below_crossing_speed_allowed():
    # 200 m in two periods forces the hold below the crossing minimum;
    # the exit ramp still restores it by the block boundary
    spec = spec_for()
    seg = construct_curve(spec, 200.0, 15.0)
    assert seg.multiples == 2
    assert seg.hold_speed < 12.0
    assert seg.exit_speed == pytest.approx(12.0, abs=1e-6)


def test_requested_period_count_too_small():
    spec = spec_for()
    with pytest.raises(CurveError):
        construct_curve(spec, 200.0, 15.0, multiples=1)


def test_curve_respects_kinematic_bounds():
    spec = spec_for()
    for length in (66.3, 100.0, 150.0, 200.0, 290.0):
        seg = construct_curve(spec, length, 15.0)
        for (t1, v1), (t2, v2) in zip(seg.points, seg.points[1:]):
            assert -1e-9 <= v1 <= spec.v_max + 1e-9
            if t2 > t1:
                slope = (v2 - v1) / (t2 - t1)
                assert -spec.decel_max - 1e-9 <= slope <= spec.accel_max + 1e-9
        assert seg.exit_speed >= spec.v_cross_min - 1e-9


def test_covered_distance_monotone_and_lipschitz():
    # distance responds to the hold speed at most linearly with the window
    spec = spec_for()
    window = 2 * spec.rhythm_s
    thetas = [k * spec.v_max / 200 for k in range(201)]
    values = [covered_distance(spec, 15.0, th, 2) for th in thetas]
    for (t1, d1), (t2, d2) in zip(
        zip(thetas, values), zip(thetas[1:], values[1:])
    ):
        assert d2 >= d1 - 1e-9
        assert abs(d2 - d1) <= window * (t2 - t1) + 1e-9


def test_speed_at_tracks_sample_table():
    spec = spec_for()
    seg = construct_curve(spec, 200.0, 15.0)
    table = seg.sample(0.25)
    assert table[0][0] == pytest.approx(0.0)
    assert table[-1][0] == pytest.approx(seg.duration_s)
    ts = [t for t, _ in table]
    assert ts == sorted(ts)
    for t, v in table:
        assert v == pytest.approx(seg.speed_at(t), abs=1e-9)


# -- chained streets ---------------------------------------------------------


def test_mixed_blocks_chain():
    spec = spec_for(lengths=(150.0, 200.0, 120.0))
    prof = generate_profile(spec)
    assert [seg.multiples for seg in prof.segments] == [1, 2, 1]
    assert prof.arrival_epochs == pytest.approx((0.0, 10.0, 30.0, 40.0))
    for seg in prof.segments:
        assert abs(seg.distance_m() - seg.length_m) <= 1e-6
        assert seg.duration_s == seg.multiples * spec.rhythm_s
        assert seg.exit_speed >= spec.v_cross_min - 1e-9
    # exit of each block feeds the next block's entry
    for prev, nxt in zip(prof.segments, prof.segments[1:]):
        assert nxt.entry_speed == pytest.approx(prev.exit_speed, abs=1e-9)


def test_street_sample_continuous():
    spec = spec_for(lengths=(150.0, 200.0, 120.0))
    prof = generate_profile(spec)
    table = prof.sample(0.5)
    ts = [t for t, _ in table]
    assert ts == sorted(ts)
    assert len(ts) == len(set(ts))
    assert table[-1][0] == pytest.approx(prof.duration_s)


def test_random_feasible_specs_chain_clean():
    rng = random.Random(20240817)
    for _ in range(60):
        v_max = rng.uniform(10.0, 20.0)
        accel = rng.uniform(1.0, 3.0)
        decel = rng.uniform(1.0, 3.5)
        v_min = rng.uniform(0.5 * v_max, 0.9 * v_max)
        floor_len = v_max**2 / (2 * decel) + v_min**2 / (2 * accel)
        floor_rhythm = v_max / decel + v_min / accel
        rhythm = floor_rhythm * rng.uniform(1.0, 1.5)
        lengths = tuple(
            floor_len * rng.uniform(1.0, 4.0) for _ in range(rng.randint(1, 5))
        )
        v0 = rng.uniform(v_min, v_max)
        spec = SpeedCurveSpec(
            v_max=v_max, accel_max=accel, decel_max=decel, v_cross_min=v_min,
            lengths=lengths, v0=v0, rhythm_s=rhythm,
        )
        assert all(feasibility_check(spec))
        prof = generate_profile(spec)
        for seg in prof.segments:
            assert abs(seg.distance_m() - seg.length_m) <= 1e-6
            assert seg.duration_s == seg.multiples * spec.rhythm_s
            assert seg.exit_speed >= spec.v_cross_min - 1e-6
            for (t1, v1), (t2, v2) in zip(seg.points, seg.points[1:]):
                assert -1e-9 <= v1 <= spec.v_max + 1e-9
                if t2 > t1:
                    slope = (v2 - v1) / (t2 - t1)
                    assert -decel - 1e-6 <= slope <= accel + 1e-6


# -- conflict-freedom on a heterogeneous grid --------------------------------


def het_grid():
    blocks = [150.0, 200.0, 120.0]
    return build_grid(
        4, 4, h_spacings=blocks, v_spacings=blocks,
        entrance_span=150.0, exit_span=150.0,
    )


def test_heterogeneous_grid_schedule_conflict_free():
    net = het_grid()
    spec = spec_for(lengths=(150.0, 200.0, 120.0))
    prof = generate_profile(spec)
    curves = {street.id: prof for street in net.streets}
    # platoons sized to clear a crossroads within a half-window even at the
    # minimum crossing speed: 60 m / 12 m/s = 5 s
    cfg = RhythmConfig(rhythm_s=10.0, speed_mps=12.0, platoon_length_m=60.0)
    sched = build_schedule(cfg, net, horizon_s=300.0)
    offsets = crossroads_travel_offsets(net, curves, entry_travel_s=150.0 / 15.0)
    assert verify_conflict_free(cfg, net, sched, travel_s=offsets) == []


def test_heterogeneous_grid_constant_speed_conflicts():
    # the control: without per-block profiles the mixed block lengths knock
    # arrivals off the half-period stagger and the scan reports overlaps
    net = het_grid()
    cfg = RhythmConfig(rhythm_s=10.0, speed_mps=12.0, platoon_length_m=60.0)
    sched = build_schedule(cfg, net, horizon_s=300.0)
    assert verify_conflict_free(cfg, net, sched) != []


def test_offsets_cover_every_crossroads():
    net = het_grid()
    spec = spec_for(lengths=(150.0, 200.0, 120.0))
    prof = generate_profile(spec)
    offsets = crossroads_travel_offsets(
        net, {s.id: prof for s in net.streets}, entry_travel_s=10.0
    )
    per_street = {}
    for (street_id, _node), _t in offsets.items():
        per_street[street_id] = per_street.get(street_id, 0) + 1
    assert set(per_street) == {s.id for s in net.streets}
    assert all(count == 4 for count in per_street.values())


def test_profile_mismatched_street_rejected():
    net = het_grid()
    spec = spec_for(lengths=(150.0, 200.0))  # one block short
    prof = generate_profile(spec)
    with pytest.raises(CurveError):
        crossroads_travel_offsets(
            net, {s.id: prof for s in net.streets}, entry_travel_s=10.0
        )


# -- spec validation ---------------------------------------------------------


def test_invalid_spec_params_rejected():
    with pytest.raises(ValueError):
        spec_for(v_max=-1.0)
    with pytest.raises(ValueError):
        spec_for(v_cross_min=16.0)  # above v_max
    with pytest.raises(ValueError):
        spec_for(v0=11.0)  # below crossing minimum
    with pytest.raises(ValueError):
        spec_for(lengths=())
    with pytest.raises(ValueError):
        spec_for(rhythm=0.0)
