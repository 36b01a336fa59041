"""Analytic-versus-simulation validation over rate grids.

A rate point's simulated stability is judged from queue drift: after a 20%
burn-in the run is cut into equal windows, the per-window mean queue
lengths are fitted with an ordinary least-squares slope, and a clearly
positive slope on either queue marks the point UNSTABLE.  Points whose
analytic margin puts them inside the exclusion band around the boundary
are skipped, since no finite run can classify them reliably.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, TextIO

import numpy as np

from .model import CapacityExceededError, CooperationPolicy, RatePoint, SystemParams
from .region import (
    R1Case,
    closure_case,
    closure_contains,
    optimal_pa,
    region_fixed_pa_contains,
)
from .simulation import SimConfig, SimMode, SimStats, run

DEFAULT_DRIFT_THRESHOLD = 1e-4
DEFAULT_WINDOW_COUNT = 10
DEFAULT_EXCLUSION_BAND = 0.01


class StabilityTag(enum.Enum):
    STABLE = "STABLE"
    UNSTABLE = "UNSTABLE"
    INDETERMINATE = "INDETERMINATE"


@dataclass(frozen=True)
class StabilityVerdict:
    """Drift-based classification of one simulated run (or a seed vote).

    drift_q1 and drift_q2 are fitted queue growth rates in packets per
    slot; margin_used echoes the drift threshold the decision used.
    """

    tag: StabilityTag
    drift_q1: float
    drift_q2: float
    margin_used: float


@dataclass(frozen=True)
class SweepSpec:
    """Grid description for a validation sweep.

    policy None means closure mode: each point is simulated with the
    admission probability that is optimal for its lambda1.  Grids are
    (start, stop, count) over inclusive endpoints.  seeds should have odd
    length so the majority vote cannot tie between STABLE and UNSTABLE.
    """

    params: SystemParams
    policy: CooperationPolicy | None
    lambda1_grid: tuple[float, float, int]
    lambda2_grid: tuple[float, float, int]
    n_slots: int = 10**6
    seeds: tuple[int, ...] = (1, 2, 3)
    exclusion_band: float = DEFAULT_EXCLUSION_BAND
    window_count: int = DEFAULT_WINDOW_COUNT
    drift_threshold: float = DEFAULT_DRIFT_THRESHOLD
    sample_stride: int = 100


@dataclass(frozen=True)
class ReportRow:
    point: RatePoint
    analytic_inside: bool
    analytic_margin: float
    pa_used: float
    verdict: StabilityVerdict | None   # None when the point was skipped
    agree: bool | None                 # None when skipped or indeterminate


@dataclass(frozen=True)
class RegionReport:
    rows: tuple[ReportRow, ...]

    @property
    def evaluated_rows(self) -> tuple[ReportRow, ...]:
        return tuple(r for r in self.rows if r.agree is not None)

    @property
    def disagreements(self) -> tuple[ReportRow, ...]:
        return tuple(r for r in self.evaluated_rows if not r.agree)

    @property
    def agreement_rate(self) -> float:
        evaluated = self.evaluated_rows
        if not evaluated:
            return 1.0
        return sum(1 for r in evaluated if r.agree) / len(evaluated)

    def to_csv(self, stream: TextIO) -> None:
        write_report_csv(self, stream)


def _fmt9(value: float) -> str:
    return f"{value:.9f}"


def _fmt_bool(value: bool) -> str:
    return "true" if value else "false"


REPORT_COLUMNS = ("lambda1", "lambda2", "analytic_inside", "analytic_margin",
                  "pa_used", "verdict", "drift_q1", "drift_q2", "agree")


def write_report_csv(report: RegionReport, stream: TextIO) -> None:
    """Fixed-format report serialization: 9-decimal floats, LF endings."""
    stream.write(",".join(REPORT_COLUMNS) + "\n")
    for row in report.rows:
        if row.verdict is None:
            verdict, d1, d2 = "SKIPPED", "", ""
        else:
            verdict = row.verdict.tag.value
            d1 = _fmt9(row.verdict.drift_q1)
            d2 = _fmt9(row.verdict.drift_q2)
        agree = "" if row.agree is None else _fmt_bool(row.agree)
        stream.write(",".join((
            _fmt9(row.point.lambda1), _fmt9(row.point.lambda2),
            _fmt_bool(row.analytic_inside), _fmt9(row.analytic_margin),
            _fmt9(row.pa_used), verdict, d1, d2, agree)) + "\n")


def window_means(stats: SimStats, n_slots: int, window_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-window mean sampled queue lengths after a 20% burn-in."""
    burn = n_slots // 5
    window_slots = (n_slots - burn) // window_count
    if window_slots < 1:
        raise ValueError("n_slots too small for the requested window count")
    idx = (stats.sample_slots >= burn) & (stats.sample_slots < burn + window_count * window_slots)
    slots = stats.sample_slots[idx]
    window = (slots - burn) // window_slots
    if len(np.unique(window)) < window_count:
        raise ValueError("sample_stride too coarse: some drift windows hold no samples")
    means_q1 = np.array([stats.sample_q1[idx][window == w].mean()
                         for w in range(window_count)])
    means_q2 = np.array([stats.sample_q2[idx][window == w].mean()
                         for w in range(window_count)])
    return means_q1, means_q2


def _ols_slope(values: np.ndarray) -> float:
    x = np.arange(len(values), dtype=float)
    x = x - x.mean()
    return float(np.dot(x, values - values.mean()) / np.dot(x, x))


def classify_stability(config: SimConfig,
                       window_count: int = DEFAULT_WINDOW_COUNT,
                       drift_threshold: float = DEFAULT_DRIFT_THRESHOLD) -> StabilityVerdict:
    """Run the simulation and classify each queue's long-run drift.

    UNSTABLE when either fitted drift exceeds drift_threshold packets per
    slot; STABLE when both drifts stay below half the threshold and the
    final queue lengths are no larger than 10 * sqrt(n_slots); otherwise
    INDETERMINATE.
    """
    if config.n_slots < 10 * window_count:
        raise ValueError("n_slots must be at least 10 * window_count")
    stats = run(config)
    means_q1, means_q2 = window_means(stats, config.n_slots, window_count)
    window_slots = (config.n_slots - config.n_slots // 5) // window_count
    drift_q1 = _ols_slope(means_q1) / window_slots
    drift_q2 = _ols_slope(means_q2) / window_slots
    if drift_q1 > drift_threshold or drift_q2 > drift_threshold:
        tag = StabilityTag.UNSTABLE
    else:
        cap = 10.0 * math.sqrt(config.n_slots)
        small = stats.final_q1_len <= cap and stats.final_q2_len <= cap
        calm = drift_q1 < drift_threshold / 2 and drift_q2 < drift_threshold / 2
        tag = StabilityTag.STABLE if calm and small else StabilityTag.INDETERMINATE
    return StabilityVerdict(tag, drift_q1, drift_q2, drift_threshold)


def _vote(verdicts: Iterable[StabilityVerdict], threshold: float) -> StabilityVerdict:
    verdicts = list(verdicts)
    counts = {tag: 0 for tag in StabilityTag}
    for v in verdicts:
        counts[v.tag] += 1
    stable, unstable = counts[StabilityTag.STABLE], counts[StabilityTag.UNSTABLE]
    indet = counts[StabilityTag.INDETERMINATE]
    if indet >= max(stable, unstable):
        tag = StabilityTag.INDETERMINATE
    elif stable > unstable:
        tag = StabilityTag.STABLE
    elif unstable > stable:
        tag = StabilityTag.UNSTABLE
    else:
        tag = StabilityTag.INDETERMINATE
    drift_q1 = sum(v.drift_q1 for v in verdicts) / len(verdicts)
    drift_q2 = sum(v.drift_q2 for v in verdicts) / len(verdicts)
    return StabilityVerdict(tag, drift_q1, drift_q2, threshold)


def _grid(axis: tuple[float, float, int]) -> np.ndarray:
    start, stop, count = axis
    if count < 1:
        raise ValueError("grid count must be at least 1")
    return np.linspace(start, stop, count)


def closure_pa_for_point(params: SystemParams, lambda1: float) -> float:
    """Admission probability a closure-mode sweep simulates at this lambda1.

    Beyond the closure's source-rate range no pa can win; the sweep then
    uses the first-branch case's endpoint policy so the simulated collapse
    is at least as graceful as any other choice.
    """
    try:
        return optimal_pa(params, lambda1)
    except CapacityExceededError:
        return 1.0 if closure_case(params).r1_case is R1Case.PA1 else 0.0


def _analytic_row(params: SystemParams, policy: CooperationPolicy | None,
                  point: RatePoint) -> tuple[bool, float, float]:
    if policy is None:
        verdict = closure_contains(point, params)
        pa_used = closure_pa_for_point(params, point.lambda1)
    else:
        verdict = region_fixed_pa_contains(point, params, policy)
        pa_used = policy.pa
    return verdict.inside, verdict.margin, pa_used


def sweep(spec: SweepSpec) -> RegionReport:
    """Validate analytic membership against simulated drift over a grid.

    Rows are produced lambda1-major.  Near-boundary points, those with
    |analytic margin| below the exclusion band, are reported as skipped.
    Each remaining point is simulated once per seed and the verdicts are
    majority-voted; an indeterminate plurality leaves the row out of the
    agreement statistics.  Fully deterministic for a fixed spec.
    """
    rows = []
    for lam1 in _grid(spec.lambda1_grid):
        for lam2 in _grid(spec.lambda2_grid):
            point = RatePoint(float(lam1), float(lam2))
            inside, margin, pa_used = _analytic_row(spec.params, spec.policy, point)
            if abs(margin) < spec.exclusion_band:
                rows.append(ReportRow(point, inside, margin, pa_used, None, None))
                continue
            policy = CooperationPolicy(pa_used)
            verdicts = []
            for seed in spec.seeds:
                config = SimConfig(spec.params, policy, point, SimMode.ORIGINAL,
                                   spec.n_slots, seed, spec.sample_stride)
                verdicts.append(classify_stability(config, spec.window_count,
                                                   spec.drift_threshold))
            verdict = _vote(verdicts, spec.drift_threshold)
            if verdict.tag is StabilityTag.INDETERMINATE:
                agree = None
            else:
                agree = inside == (verdict.tag is StabilityTag.STABLE)
            rows.append(ReportRow(point, inside, margin, pa_used, verdict, agree))
    return RegionReport(tuple(rows))


def analytic_report(params: SystemParams, policy: CooperationPolicy | None,
                    lambda1_grid: tuple[float, float, int],
                    lambda2_grid: tuple[float, float, int]) -> RegionReport:
    """Membership-only report over a grid, no simulation."""
    rows = []
    for lam1 in _grid(lambda1_grid):
        for lam2 in _grid(lambda2_grid):
            point = RatePoint(float(lam1), float(lam2))
            inside, margin, pa_used = _analytic_row(params, policy, point)
            rows.append(ReportRow(point, inside, margin, pa_used, None, None))
    return RegionReport(tuple(rows))


def compare_three_schemes(spec: SweepSpec) -> tuple[RegionReport, RegionReport, RegionReport]:
    """Analytic inside-sets for pa=0, pa=1 and the closure on one grid.

    The fixed schemes must be contained in the closure; callers can verify
    with containment_violations.
    """
    reports = tuple(
        analytic_report(spec.params, policy, spec.lambda1_grid, spec.lambda2_grid)
        for policy in (CooperationPolicy(0.0), CooperationPolicy(1.0), None))
    return reports


def containment_violations(fixed: RegionReport, closure: RegionReport) -> tuple[RatePoint, ...]:
    """Grid points inside a fixed scheme but outside the closure (should be none)."""
    closure_by_point = {(r.point.lambda1, r.point.lambda2): r.analytic_inside
                        for r in closure.rows}
    return tuple(r.point for r in fixed.rows
                 if r.analytic_inside
                 and not closure_by_point[(r.point.lambda1, r.point.lambda2)])
