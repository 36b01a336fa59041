import math

import numpy as np
import pytest

from relaystab import (
    AccessProbabilities,
    CapacityExceededError,
    ChannelProbabilities,
    CooperationPolicy,
    DegenerateThresholdError,
    R1Case,
    R2Case,
    RatePoint,
    SubregionId,
    SystemParams,
    boundary_lambda2,
    boundary_trace,
    closure_case,
    closure_contains,
    dominant1_q2_busy_prob,
    optimal_pa,
    r1_pa_contains,
    r2_pa_contains,
    region_fixed_pa_contains,
    region_lambda1_max,
)
from relaystab.region import _piece_lambda2_bound

from gridoracle import fixed_pa_union_mask, union_over_pa

PARAMS = SystemParams(ChannelProbabilities(0.5, 0.9, 0.8),
                      AccessProbabilities(0.2, 0.3))

# baseline landmarks, all closed-form:
#   q1(1-q2)p13 = 0.07          pa*-onset source rate
#   q1(1-q2)[p13+(1-p13)p12] = 0.133   full-cooperation onset
#   q2 p23 = 0.24               relay-only axis intercept
#   q2 p23 (1-q1) = 0.192       relay rate under source interference
#   0.07 + 0.192 = 0.262        split-piece sum line
LAM1_ONSET = 0.07
LAM1_FULL = 0.133
LAM1_MAX = 304.0 / 1825.0  # 0.19 * (1-q1) p23 / (q1 p12 (1-p13) + (1-q1) p23)


def test_closure_case_baseline():
    case = closure_case(PARAMS)
    assert case.r1_case is R1Case.PA1
    assert case.r2_case is R2Case.SPLIT
    assert case.thresholds[0] == pytest.approx(8 / 13, abs=1e-12)
    assert case.thresholds[1] == pytest.approx(5 / 13, abs=1e-12)


def test_closure_case_other_branches():
    aggressive = SystemParams(ChannelProbabilities(0.5, 0.9, 0.5),
                              AccessProbabilities(0.9, 0.3))
    assert closure_case(aggressive).r1_case is R1Case.PA0

    busy_relay = SystemParams(ChannelProbabilities(0.5, 0.9, 0.5),
                              AccessProbabilities(0.2, 0.5))
    # threshold tie goes to the always-cooperate branch
    assert closure_case(busy_relay).r2_case is R2Case.PA1


def test_closure_case_degenerate():
    dead = SystemParams(ChannelProbabilities(0.0, 0.9, 0.0),
                        AccessProbabilities(0.2, 0.3))
    with pytest.raises(DegenerateThresholdError):
        closure_case(dead)


def test_optimal_pa_three_regimes():
    assert optimal_pa(PARAMS, 0.0) == 0.0
    assert optimal_pa(PARAMS, 0.05) == 0.0
    assert optimal_pa(PARAMS, LAM1_ONSET) == pytest.approx(0.0, abs=1e-9)
    assert optimal_pa(PARAMS, 0.1015) == pytest.approx(0.5, abs=1e-9)
    assert optimal_pa(PARAMS, 0.12) == pytest.approx((0.12 - 0.07) / 0.063, abs=1e-9)
    assert optimal_pa(PARAMS, LAM1_FULL) == 1.0
    assert optimal_pa(PARAMS, 0.15) == 1.0
    assert optimal_pa(PARAMS, 0.166) == 1.0


def test_optimal_pa_capacity_error():
    with pytest.raises(CapacityExceededError):
        optimal_pa(PARAMS, LAM1_MAX + 1e-9)
    with pytest.raises(CapacityExceededError):
        optimal_pa(PARAMS, 0.5)
    with pytest.raises(ValueError):
        optimal_pa(PARAMS, -0.01)
    with pytest.raises(ValueError):
        optimal_pa(PARAMS, 1.01)


def test_optimal_pa_monotone_in_lambda1():
    grid = np.linspace(0.0, LAM1_MAX - 1e-6, 200)
    values = [optimal_pa(PARAMS, float(l)) for l in grid]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_optimal_pa_nonincreasing_in_q1():
    # inside the split regime a more talkative source needs less relaying
    lam1 = 0.1015
    q1_grid = np.linspace(0.18, 0.24, 13)
    values = []
    for q1 in q1_grid:
        p = SystemParams(PARAMS.channel, AccessProbabilities(float(q1), 0.3))
        values.append(optimal_pa(p, lam1))
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_dominant1_busy_probability():
    busy = dominant1_q2_busy_prob(RatePoint(0.05, 0.05), PARAMS,
                                  CooperationPolicy(1.0))
    assert busy == pytest.approx(175 / 456, abs=1e-12)


def test_fixed_pa_membership_examples():
    full = CooperationPolicy(1.0)
    assert r1_pa_contains(RatePoint(0.05, 0.10), PARAMS, full).inside
    assert not r1_pa_contains(RatePoint(0.05, 0.20), PARAMS, full).inside
    assert r2_pa_contains(RatePoint(0.10, 0.10), PARAMS, full).inside
    # 0.10 exceeds the relay-padded source capacity bound 0.133? no: inside
    assert r2_pa_contains(RatePoint(0.132, 0.01), PARAMS, full).inside
    assert not r2_pa_contains(RatePoint(0.14, 0.01), PARAMS, full).inside
    # union: the source-rate reach of the pa=1 region passes 0.14 via R1
    assert region_fixed_pa_contains(RatePoint(0.14, 0.0), PARAMS, full).inside


def test_closure_membership_examples():
    v = closure_contains(RatePoint(0.10, 0.12), PARAMS)
    assert v.inside
    assert v.margin == pytest.approx(0.042, abs=1e-9)

    v = closure_contains(RatePoint(0.10, 0.20), PARAMS)
    assert not v.inside
    assert v.margin == pytest.approx(-0.038, abs=1e-9)

    assert closure_contains(RatePoint(0.0, 0.0), PARAMS).inside
    assert closure_contains(RatePoint(0.14, 0.0), PARAMS).inside
    assert not closure_contains(RatePoint(0.17, 0.0), PARAMS).inside


def test_partial_cooperation_wedge():
    # between the fixed-extreme regions and the closure boundary
    wedge = RatePoint(0.10, 0.158)
    assert not region_fixed_pa_contains(wedge, PARAMS, CooperationPolicy(0.0)).inside
    assert not region_fixed_pa_contains(wedge, PARAMS, CooperationPolicy(1.0)).inside
    assert closure_contains(wedge, PARAMS).inside


def test_margin_sign_matches_inside():
    points = [RatePoint(0.02, 0.05), RatePoint(0.12, 0.10), RatePoint(0.05, 0.30),
              RatePoint(0.19, 0.01), RatePoint(0.10, 0.158)]
    for point in points:
        v = closure_contains(point, PARAMS)
        assert (v.margin > 0) == v.inside
        for pa in (0.0, 0.5, 1.0):
            w = region_fixed_pa_contains(point, PARAMS, CooperationPolicy(pa))
            assert (w.margin > 0) == w.inside


def test_witness_tags():
    v = closure_contains(RatePoint(0.05, 0.05), PARAMS)
    assert {tag for tag, _ in v.witnesses} == {SubregionId.R11, SubregionId.R221,
                                               SubregionId.R222}
    assert v.inside == any(sat for _, sat in v.witnesses)

    w = region_fixed_pa_contains(RatePoint(0.05, 0.05), PARAMS, CooperationPolicy(0.5))
    assert {tag for tag, _ in w.witnesses} == {SubregionId.R1_PA, SubregionId.R2_PA}


def test_membership_is_pure():
    point = RatePoint(0.11, 0.13)
    first = closure_contains(point, PARAMS)
    second = closure_contains(point, PARAMS)
    assert first == second


def test_boundary_lambda2_landmarks():
    # corner of the no-cooperation piece
    assert boundary_lambda2(PARAMS, None, LAM1_ONSET) == pytest.approx(0.192, abs=1e-6)
    # corner where full cooperation takes over: 0.262 - 0.133
    assert boundary_lambda2(PARAMS, None, LAM1_FULL) == pytest.approx(0.129, abs=1e-6)
    assert boundary_lambda2(PARAMS, None, 0.0) == pytest.approx(0.24, abs=1e-8)
    assert boundary_lambda2(PARAMS, None, 0.2) == 0.0


def test_region_lambda1_max():
    assert region_lambda1_max(PARAMS, None) == pytest.approx(LAM1_MAX, abs=1e-8)
    # the closure's source-rate reach is attained by full cooperation
    assert region_lambda1_max(PARAMS, CooperationPolicy(1.0)) == pytest.approx(
        LAM1_MAX, abs=1e-8)
    # without relaying the source keeps only its direct-link capacity q1 p13
    assert region_lambda1_max(PARAMS, CooperationPolicy(0.0)) == pytest.approx(
        0.1, abs=1e-8)


def test_boundary_trace_closure_structure():
    trace = boundary_trace(PARAMS, None, 60)
    lam1 = [p.lambda1 for p in trace.points]
    lam2 = [p.lambda2 for p in trace.points]
    assert len(trace.points) == 60
    assert lam1 == sorted(lam1)
    assert lam1[0] == 0.0
    assert lam1[-1] == pytest.approx(LAM1_MAX, abs=1e-8)
    assert lam2[0] == pytest.approx(0.24, abs=1e-8)
    assert lam2[-1] == pytest.approx(0.0, abs=1e-8)
    # baseline boundary falls monotonically
    assert all(b <= a + 1e-9 for a, b in zip(lam2, lam2[1:]))
    # segment labels move through the three governing pieces in order
    labels = trace.segment_labels
    seen = [labels[0]]
    for label in labels[1:]:
        if label is not seen[-1]:
            seen.append(label)
    assert seen == [SubregionId.R221, SubregionId.R222, SubregionId.R11]
    # the attaining admission probability follows the three regimes
    for point, label, pa_star in zip(trace.points, labels, trace.pa_star_values):
        if label is SubregionId.R221:
            assert pa_star <= 1e-9
        elif label is SubregionId.R11:
            assert pa_star == pytest.approx(1.0, abs=1e-9)
        else:
            assert pa_star == pytest.approx(
                (point.lambda1 - 0.07) / 0.063, abs=1e-6)


def test_boundary_trace_points_lie_on_segment():
    trace = boundary_trace(PARAMS, None, 40)
    for point, label in zip(trace.points, trace.segment_labels):
        bound = _piece_lambda2_bound(label, point.lambda1, PARAMS, None)
        assert point.lambda2 == pytest.approx(max(bound, 0.0), abs=2e-9)


def test_boundary_trace_separates_membership():
    trace = boundary_trace(PARAMS, None, 25)
    for point in trace.points[1:-1]:
        below = RatePoint(point.lambda1, max(point.lambda2 - 1e-6, 0.0))
        above = RatePoint(point.lambda1, point.lambda2 + 1e-6)
        assert closure_contains(below, PARAMS).inside
        assert not closure_contains(above, PARAMS).inside


def test_boundary_trace_fixed_pa():
    policy = CooperationPolicy(0.5)
    trace = boundary_trace(PARAMS, policy, 15)
    assert all(label in (SubregionId.R1_PA, SubregionId.R2_PA)
               for label in trace.segment_labels)
    assert all(pa == 0.5 for pa in trace.pa_star_values)
    for point in trace.points[1:-1]:
        below = RatePoint(point.lambda1, max(point.lambda2 - 1e-6, 0.0))
        assert region_fixed_pa_contains(below, PARAMS, policy).inside


def test_fixed_pa_contained_in_closure():
    rng = np.random.default_rng(7)
    for _ in range(300):
        point = RatePoint(float(rng.uniform(0, 0.25)), float(rng.uniform(0, 0.3)))
        for pa in (0.0, 0.25, 0.5, 0.75, 1.0):
            if region_fixed_pa_contains(point, PARAMS, CooperationPolicy(pa)).inside:
                assert closure_contains(point, PARAMS).inside, (point, pa)


def test_closure_boundary_dominates_fixed_pa():
    for lam1 in np.linspace(0.0, LAM1_MAX - 1e-6, 9):
        closure_bound = boundary_lambda2(PARAMS, None, float(lam1))
        for pa in (0.0, 0.25, 0.5, 0.75, 1.0):
            fixed_bound = boundary_lambda2(PARAMS, CooperationPolicy(pa), float(lam1))
            assert closure_bound >= fixed_bound - 1e-9


def test_optimal_pa_attains_the_boundary():
    for lam1 in np.linspace(0.005, 0.16, 12):
        lam2 = boundary_lambda2(PARAMS, None, float(lam1))
        probe = RatePoint(float(lam1), max(lam2 - 1e-4, 0.0))
        assert closure_contains(probe, PARAMS).inside
        policy = CooperationPolicy(optimal_pa(PARAMS, float(lam1)))
        assert region_fixed_pa_contains(probe, PARAMS, policy).inside, lam1


def test_closure_matches_pa_grid_oracle():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(400):
        point = RatePoint(float(rng.uniform(0, 0.25)), float(rng.uniform(0, 0.3)))
        v = closure_contains(point, PARAMS)
        if abs(v.margin) <= 1e-3:
            continue
        checked += 1
        assert v.inside == union_over_pa(point, PARAMS), point
    assert checked > 300


def test_fixed_pa_agrees_with_busy_prob_route():
    # the linearized inequalities against the load-over-service route
    rng = np.random.default_rng(13)
    pa_grid = np.linspace(0.0, 1.0, 101)
    for _ in range(60):
        point = RatePoint(float(rng.uniform(0, 0.2)), float(rng.uniform(0, 0.25)))
        mask = fixed_pa_union_mask(point, PARAMS, pa_grid)
        for pa, expect in zip(pa_grid, mask):
            got = region_fixed_pa_contains(point, PARAMS,
                                           CooperationPolicy(float(pa))).inside
            assert got == bool(expect), (point, pa)
