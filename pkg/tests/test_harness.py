import io

import numpy as np
import pytest

from relaystab import (
    AccessProbabilities,
    ChannelProbabilities,
    CooperationPolicy,
    RatePoint,
    RegionReport,
    ReportRow,
    SimConfig,
    SimMode,
    StabilityTag,
    StabilityVerdict,
    SweepSpec,
    SystemParams,
    classify_stability,
    closure_contains,
    compare_three_schemes,
    containment_violations,
    sweep,
)
from relaystab.harness import (
    _vote,
    analytic_report,
    closure_pa_for_point,
    window_means,
    write_report_csv,
)
from relaystab.simulation import run

PARAMS = SystemParams(ChannelProbabilities(0.5, 0.9, 0.8),
                      AccessProbabilities(0.2, 0.3))
# silent source: its queue grows at exactly lambda1 and the relay drains
# at exactly q2 p23, so both fitted drifts have known targets
SILENT_SOURCE = SystemParams(ChannelProbabilities(0.5, 0.9, 0.8),
                             AccessProbabilities(0.0, 0.3))


def sim_config(params, pa, lam1, lam2, n=200000, seed=1, stride=100):
    return SimConfig(params, CooperationPolicy(pa), RatePoint(lam1, lam2),
                     SimMode.ORIGINAL, n, seed, stride)


def test_classify_stable_point():
    v = classify_stability(sim_config(PARAMS, 0.5, 0.05, 0.05))
    assert v.tag is StabilityTag.STABLE
    assert abs(v.drift_q1) < 5e-5
    assert abs(v.drift_q2) < 5e-5
    assert v.margin_used == 1e-4


@pytest.mark.parametrize("delta", [0.01, 0.05])
def test_drift_estimate_tracks_known_excess(delta):
    cfg = sim_config(SILENT_SOURCE, 0.0, 0.3, 0.24 + delta)
    v = classify_stability(cfg)
    assert v.tag is StabilityTag.UNSTABLE
    assert v.drift_q1 == pytest.approx(0.3, rel=0.3)
    assert v.drift_q2 == pytest.approx(delta, rel=0.3)


def test_classify_indeterminate_on_large_final_queue():
    # drifts far under a huge threshold, but the queue clearly blew up
    cfg = sim_config(SILENT_SOURCE, 0.0, 0.3, 0.0)
    v = classify_stability(cfg, drift_threshold=1.0)
    assert v.tag is StabilityTag.INDETERMINATE


def test_classify_preconditions():
    with pytest.raises(ValueError):
        classify_stability(sim_config(PARAMS, 0.5, 0.05, 0.05, n=50), window_count=10)
    # stride so coarse that drift windows see no samples
    cfg = sim_config(PARAMS, 0.5, 0.05, 0.05, n=2000, stride=900)
    with pytest.raises(ValueError):
        classify_stability(cfg, window_count=10)


def test_window_means_shape():
    cfg = sim_config(PARAMS, 0.5, 0.05, 0.05, n=100000, stride=10)
    stats = run(cfg)
    q1_means, q2_means = window_means(stats, cfg.n_slots, 10)
    assert len(q1_means) == 10 and len(q2_means) == 10
    assert np.isfinite(q1_means).all() and np.isfinite(q2_means).all()


def verdict(tag):
    return StabilityVerdict(tag, 0.0, 0.0, 1e-4)


def test_vote_rules():
    S, U, I = StabilityTag.STABLE, StabilityTag.UNSTABLE, StabilityTag.INDETERMINATE
    assert _vote([verdict(S), verdict(S), verdict(U)], 1e-4).tag is S
    assert _vote([verdict(U), verdict(U), verdict(S)], 1e-4).tag is U
    assert _vote([verdict(S), verdict(S), verdict(I)], 1e-4).tag is S
    assert _vote([verdict(S), verdict(U), verdict(I)], 1e-4).tag is I
    assert _vote([verdict(I), verdict(I), verdict(I)], 1e-4).tag is I
    assert _vote([verdict(S)], 1e-4).tag is S
    averaged = _vote([StabilityVerdict(S, 0.1, 0.0, 1e-4),
                      StabilityVerdict(S, 0.3, 0.0, 1e-4)], 1e-4)
    assert averaged.drift_q1 == pytest.approx(0.2)


def test_closure_pa_for_point():
    assert closure_pa_for_point(PARAMS, 0.05) == 0.0
    assert closure_pa_for_point(PARAMS, 0.1015) == pytest.approx(0.5, abs=1e-9)
    # beyond the closure range: fall back to the governing branch endpoint
    assert closure_pa_for_point(PARAMS, 0.19) == 1.0
    shy_source = SystemParams(ChannelProbabilities(0.5, 0.9, 0.5),
                              AccessProbabilities(0.9, 0.3))
    assert closure_pa_for_point(shy_source, 0.9) == 0.0


def test_sweep_small_grid():
    spec = SweepSpec(PARAMS, None, (0.0, 0.2, 3), (0.0, 0.2, 3),
                     n_slots=100000, seeds=(1, 2, 3))
    report = sweep(spec)
    assert len(report.rows) == 9
    # lambda1-major ordering
    assert [r.point.lambda1 for r in report.rows[:3]] == [0.0, 0.0, 0.0]
    for row in report.rows:
        expected = closure_contains(row.point, PARAMS)
        assert row.analytic_inside == expected.inside
        assert row.analytic_margin == pytest.approx(expected.margin)
        if abs(row.analytic_margin) < spec.exclusion_band:
            assert row.verdict is None and row.agree is None
        else:
            assert row.verdict is not None
    assert report.agreement_rate == 1.0
    assert report.disagreements == ()


def test_sweep_is_deterministic():
    spec = SweepSpec(PARAMS, CooperationPolicy(0.5), (0.0, 0.15, 2),
                     (0.0, 0.15, 2), n_slots=50000, seeds=(1, 2, 3))
    assert sweep(spec) == sweep(spec)


def test_sweep_exclusion_band_skips_everything():
    spec = SweepSpec(PARAMS, None, (0.0, 0.2, 3), (0.0, 0.2, 3),
                     n_slots=10**9, seeds=(1,), exclusion_band=10.0)
    report = sweep(spec)  # would take hours if any point were simulated
    assert all(r.verdict is None for r in report.rows)
    assert report.agreement_rate == 1.0


def test_sweep_pa_used():
    fixed = SweepSpec(PARAMS, CooperationPolicy(0.3), (0.0, 0.2, 3),
                      (0.0, 0.2, 2), n_slots=50000, seeds=(1,))
    for row in sweep(fixed).rows:
        assert row.pa_used == 0.3
    closure = SweepSpec(PARAMS, None, (0.0, 0.2, 3), (0.0, 0.1, 2),
                        n_slots=50000, seeds=(1,))
    rows = sweep(closure).rows
    by_lam1 = {round(r.point.lambda1, 3): r.pa_used for r in rows}
    assert by_lam1[0.0] == 0.0
    assert by_lam1[0.1] == pytest.approx((0.1 - 0.07) / 0.063, abs=1e-9)
    assert by_lam1[0.2] == 1.0  # beyond capacity: branch-endpoint fallback


def test_compare_three_schemes_and_containment():
    spec = SweepSpec(PARAMS, None, (0.0, 0.2, 6), (0.0, 0.25, 6))
    pa0, pa1, closure = compare_three_schemes(spec)
    assert len(pa0.rows) == len(pa1.rows) == len(closure.rows) == 36
    assert all(r.verdict is None for r in pa0.rows)
    assert containment_violations(pa0, closure) == ()
    assert containment_violations(pa1, closure) == ()
    n_pa0 = sum(r.analytic_inside for r in pa0.rows)
    n_closure = sum(r.analytic_inside for r in closure.rows)
    assert n_closure >= n_pa0

    # sanity of the detector itself
    flipped = RegionReport(tuple(
        ReportRow(r.point, False, r.analytic_margin, r.pa_used, None, None)
        for r in closure.rows))
    assert len(containment_violations(pa0, flipped)) == n_pa0


def test_report_csv_format():
    inside = ReportRow(RatePoint(0.1, 0.2), True, 0.042, 0.5,
                       StabilityVerdict(StabilityTag.STABLE, 1e-5, -2e-6, 1e-4),
                       True)
    skipped = ReportRow(RatePoint(0.05, 0.01), False, -0.003, 1.0, None, None)
    report = RegionReport((inside, skipped))
    buf = io.StringIO()
    write_report_csv(report, buf)
    assert buf.getvalue() == (
        "lambda1,lambda2,analytic_inside,analytic_margin,pa_used,verdict,"
        "drift_q1,drift_q2,agree\n"
        "0.100000000,0.200000000,true,0.042000000,0.500000000,STABLE,"
        "0.000010000,-0.000002000,true\n"
        "0.050000000,0.010000000,false,-0.003000000,1.000000000,SKIPPED,,,\n")
    assert report.to_csv is not None


def test_report_statistics():
    rows = (
        ReportRow(RatePoint(0.0, 0.0), True, 0.5, 0.0,
                  verdict_row(StabilityTag.STABLE), True),
        ReportRow(RatePoint(0.1, 0.0), True, 0.5, 0.0,
                  verdict_row(StabilityTag.UNSTABLE), False),
        ReportRow(RatePoint(0.2, 0.0), False, -0.5, 0.0, None, None),
        ReportRow(RatePoint(0.3, 0.0), False, -0.5, 0.0,
                  verdict_row(StabilityTag.INDETERMINATE), None),
    )
    report = RegionReport(rows)
    assert report.agreement_rate == 0.5
    assert len(report.disagreements) == 1
    assert report.disagreements[0].point.lambda1 == 0.1


def verdict_row(tag):
    return StabilityVerdict(tag, 0.0, 0.0, 1e-4)


def test_analytic_report_matches_membership():
    report = analytic_report(PARAMS, CooperationPolicy(1.0), (0.0, 0.2, 4),
                             (0.0, 0.2, 4))
    assert len(report.rows) == 16
    assert all(r.pa_used == 1.0 for r in report.rows)
    assert report.agreement_rate == 1.0
