"""Exact stable-throughput regions for the relay network.

Stability of the two interacting queues is settled through two dominant
configurations in which one node pads its empty queue with dummy packets.
Each configuration yields a pair of linear constraints on the arrival
rates for a fixed admission probability ``pa``; the achievable region is
the union of the two.  Sweeping ``pa`` and keeping, at every source rate,
the best admission probability produces the closure region, which splits
into closed-form subregions selected by two thresholds on the access
probabilities.

Membership predicates report signed slacks so callers can tell how far a
rate point sits from the boundary, and the boundary itself can be traced
numerically by bisecting the membership predicate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .model import (
    CapacityExceededError,
    CooperationPolicy,
    DegenerateSourceError,
    DegenerateThresholdError,
    DerivedRates,
    RatePoint,
    SystemParams,
    UnstableQueueError,
    ZeroServiceError,
    branch_probability,
    departure_success_rate,
)

# Bisection runs to a fixed iteration count; 60 halvings of a unit bracket
# leave an interval far below the documented 1e-9 tolerance.
BISECTION_TOLERANCE = 1e-9
_BISECTION_ITERATIONS = 60


class SubregionId(enum.Enum):
    """Which closed-form piece of a region a witness refers to."""

    R1_PA = "R1_PA"      # dummy-source dominant region, fixed pa
    R2_PA = "R2_PA"      # dummy-relay dominant region, fixed pa
    R11 = "R11"          # closure, first branch, pa* = 1
    R12 = "R12"          # closure, first branch, pa* = 0
    R21 = "R21"          # closure, second branch, pa* = 1
    R221 = "R221"        # closure, second branch split, pa* = 0 piece
    R222 = "R222"        # closure, second branch split, interior-pa piece


class R1Case(enum.Enum):
    PA1 = "PA1"
    PA0 = "PA0"


class R2Case(enum.Enum):
    PA1 = "PA1"
    SPLIT = "SPLIT"


@dataclass(frozen=True)
class MembershipVerdict:
    """Result of a region test.

    witnesses lists, per evaluated subregion, whether that subregion alone
    contains the point.  margin is the best subregion's minimum signed
    slack over its stability inequalities, in the units those inequalities
    are stated in; it is positive exactly for interior points.
    """

    inside: bool
    witnesses: tuple[tuple[SubregionId, bool], ...]
    margin: float


@dataclass(frozen=True)
class ClosureCase:
    """Which closed forms apply, with the access-probability thresholds."""

    r1_case: R1Case
    r2_case: R2Case
    thresholds: tuple[float, float]


@dataclass(frozen=True)
class BoundaryTrace:
    """Sampled upper boundary of a region, sorted by lambda1."""

    points: tuple[RatePoint, ...]
    segment_labels: tuple[SubregionId, ...]
    pa_star_values: tuple[float, ...]


def source_service_rate(params: SystemParams, policy: CooperationPolicy,
                        prob_q2_nonempty: float) -> float:
    """Source service rate given the relay-queue busy probability.

    A lone source transmission happens with probability q1 times the chance
    the relay is silent: certain when its queue is empty, 1 - q2 otherwise.
    """
    q1, q2 = params.access.q1, params.access.q2
    silent = (1.0 - q2) * prob_q2_nonempty + (1.0 - prob_q2_nonempty)
    return silent * q1 * departure_success_rate(params.channel, policy)


def relay_service_rate(params: SystemParams, prob_q1_nonempty: float) -> float:
    """Relay service rate given the source-queue busy probability."""
    q1, q2 = params.access.q1, params.access.q2
    return q2 * (1.0 - q1 * prob_q1_nonempty) * params.channel.p23


def relay_total_arrival_rate(rates: RatePoint, params: SystemParams,
                             policy: CooperationPolicy) -> float:
    """Total relay-queue load: own arrivals plus the admitted source share."""
    branch = branch_probability(params.channel, policy)
    return rates.lambda2 + branch * rates.lambda1


def dominant1_q2_busy_prob(rates: RatePoint, params: SystemParams,
                           policy: CooperationPolicy) -> float:
    """Relay-queue busy probability in the dummy-source configuration.

    With the source padded to transmit in every slot with probability q1,
    the relay queue serves at q2 * (1 - q1) * p23 and its occupancy equals
    load over service.
    """
    service = relay_service_rate(params, 1.0)
    if service == 0.0:
        raise ZeroServiceError("relay service rate q2 * (1 - q1) * p23 is 0")
    load = relay_total_arrival_rate(rates, params, policy)
    ratio = load / service
    if ratio >= 1.0:
        raise UnstableQueueError(
            f"relay queue load {load!r} is not below its service rate {service!r}")
    return ratio


def dominant1_derived_rates(rates: RatePoint, params: SystemParams,
                            policy: CooperationPolicy) -> DerivedRates:
    """Equilibrium rate bundle of the dummy-source configuration."""
    busy = dominant1_q2_busy_prob(rates, params, policy)
    return DerivedRates(
        mu1=source_service_rate(params, policy, busy),
        mu2_q=relay_service_rate(params, 1.0),
        lambda_q2=relay_total_arrival_rate(rates, params, policy),
        branch_prob=branch_probability(params.channel, policy),
    )


# ---------------------------------------------------------------------------
# Subregion slack evaluation.
#
# Each subregion is a conjunction of strict "stability" inequalities, plus
# for the closure split pieces some lambda1 range bounds that only say which
# closed form applies there.  Range bounds gate membership (the lower one
# non-strictly, matching the printed case split) but stay out of the margin
# unless violated: the seam between two adjacent pieces is interior to the
# union, so only genuine stability slack should count.


@dataclass(frozen=True)
class _SubregionSlacks:
    stability: tuple[float, ...]
    ranges_ok: bool
    range_violation: float  # most negative violated range slack, 0.0 if none

    @property
    def satisfied(self) -> bool:
        return self.ranges_ok and all(s > 0.0 for s in self.stability)

    @property
    def margin(self) -> float:
        # For an unsatisfied piece the distance-to-satisfy is set by its
        # worst violated condition, range bounds included.
        if not self.ranges_ok:
            return min(self.range_violation, min(self.stability))
        return min(self.stability)


def _stability_only(*slacks: float) -> _SubregionSlacks:
    return _SubregionSlacks(tuple(slacks), True, 0.0)


def _r1_pa_slacks(point: RatePoint, params: SystemParams,
                  policy: CooperationPolicy) -> _SubregionSlacks:
    ch, ac = params.channel, params.access
    x = departure_success_rate(ch, policy)
    den = (1.0 - ac.q1) * ch.p23
    lam1, lam2 = point.lambda1, point.lambda2
    if den > 0.0 and x > 0.0:
        coef1 = 1.0 + ac.q1 * (x - ch.p13) / den
        coef2 = ac.q1 * x / den
        s_source = ac.q1 * x - coef1 * lam1 - coef2 * lam2
        branch = (x - ch.p13) / x
    else:
        # Relay service or every source exit path is gone; the subregion is
        # empty apart from the origin boundary point.
        s_source = 0.0 if lam1 == 0.0 and lam2 == 0.0 else -math.inf
        branch = 0.0
    s_relay = ac.q2 * (1.0 - ac.q1) * ch.p23 - (lam2 + branch * lam1)
    return _stability_only(s_source, s_relay)


def _r2_pa_slacks(point: RatePoint, params: SystemParams,
                  policy: CooperationPolicy) -> _SubregionSlacks:
    ch, ac = params.channel, params.access
    x = departure_success_rate(ch, policy)
    den = (1.0 - ac.q2) * x
    lam1, lam2 = point.lambda1, point.lambda2
    if den > 0.0:
        coef = ((1.0 - ac.q2) * (x - ch.p13) + ac.q2 * ch.p23) / den
        s_relay = ac.q2 * ch.p23 - (lam2 + coef * lam1)
    else:
        s_relay = 0.0 if lam1 == 0.0 and lam2 == 0.0 else -math.inf
    s_source = ac.q1 * (1.0 - ac.q2) * x - lam1
    return _stability_only(s_relay, s_source)


def _r11_slacks(point: RatePoint, params: SystemParams) -> _SubregionSlacks:
    ch, ac = params.channel, params.access
    x1 = ch.p13 + (1.0 - ch.p13) * ch.p12
    lam1, lam2 = point.lambda1, point.lambda2
    if ac.q1 * x1 > 0.0:
        coef = (ac.q1 * ch.p12 * (1.0 - ch.p13) + (1.0 - ac.q1) * ch.p23) / (ac.q1 * x1)
        s_source = (1.0 - ac.q1) * ch.p23 - (coef * lam1 + lam2)
        s_relay = (ac.q2 * (1.0 - ac.q1) * ch.p23
                   - (ch.p12 * (1.0 - ch.p13) / x1 * lam1 + lam2))
    else:
        s_source = 0.0 if lam1 == 0.0 and lam2 == 0.0 else -math.inf
        s_relay = ac.q2 * (1.0 - ac.q1) * ch.p23 - lam2
    return _stability_only(s_source, s_relay)


def _r12_slacks(point: RatePoint, params: SystemParams) -> _SubregionSlacks:
    ch, ac = params.channel, params.access
    lam1, lam2 = point.lambda1, point.lambda2
    if ac.q1 * ch.p13 > 0.0 and (1.0 - ac.q1) * ch.p23 > 0.0:
        s_source = 1.0 - (lam1 / (ac.q1 * ch.p13) + lam2 / ((1.0 - ac.q1) * ch.p23))
    else:
        s_source = 0.0 if lam1 == 0.0 and lam2 == 0.0 else -math.inf
    s_relay = ac.q2 * (1.0 - ac.q1) * ch.p23 - lam2
    return _stability_only(s_source, s_relay)


def _r21_slacks(point: RatePoint, params: SystemParams) -> _SubregionSlacks:
    ch, ac = params.channel, params.access
    x1 = ch.p13 + (1.0 - ch.p13) * ch.p12
    lam1, lam2 = point.lambda1, point.lambda2
    den = (1.0 - ac.q2) * x1
    if den > 0.0:
        coef = ((1.0 - ac.q2) * ch.p12 * (1.0 - ch.p13) + ac.q2 * ch.p23) / den
        s_relay = ac.q2 * ch.p23 - (coef * lam1 + lam2)
    else:
        s_relay = 0.0 if lam1 == 0.0 and lam2 == 0.0 else -math.inf
    s_source = ac.q1 * (1.0 - ac.q2) * x1 - lam1
    return _stability_only(s_relay, s_source)


def _r221_slacks(point: RatePoint, params: SystemParams) -> _SubregionSlacks:
    ch, ac = params.channel, params.access
    lam1, lam2 = point.lambda1, point.lambda2
    if (1.0 - ac.q2) * ch.p13 > 0.0 and ac.q2 * ch.p23 > 0.0:
        s_relay = 1.0 - (lam1 / ((1.0 - ac.q2) * ch.p13) + lam2 / (ac.q2 * ch.p23))
    else:
        s_relay = 0.0 if lam1 == 0.0 and lam2 == 0.0 else -math.inf
    range_slack = ac.q1 * (1.0 - ac.q2) * ch.p13 - lam1  # strict upper bound
    if range_slack <= 0.0:
        return _SubregionSlacks((s_relay,), False, min(range_slack, 0.0))
    return _stability_only(s_relay)


def _r222_slacks(point: RatePoint, params: SystemParams) -> _SubregionSlacks:
    ch, ac = params.channel, params.access
    x1 = ch.p13 + (1.0 - ch.p13) * ch.p12
    lam1, lam2 = point.lambda1, point.lambda2
    low = ac.q1 * (1.0 - ac.q2) * ch.p13
    high = ac.q1 * (1.0 - ac.q2) * x1
    s_sum = low + ac.q2 * ch.p23 * (1.0 - ac.q1) - (lam1 + lam2)
    lower_slack = lam1 - low       # non-strict: the seam belongs to this piece
    upper_slack = high - lam1      # strict
    if lower_slack < 0.0 or upper_slack <= 0.0:
        violation = min(min(lower_slack, 0.0), min(upper_slack, 0.0))
        return _SubregionSlacks((s_sum,), False, violation)
    return _stability_only(s_sum)


def _verdict(slack_list: list[tuple[SubregionId, _SubregionSlacks]]) -> MembershipVerdict:
    witnesses = tuple((tag, s.satisfied) for tag, s in slack_list)
    margin = max(s.margin for _, s in slack_list)
    return MembershipVerdict(any(sat for _, sat in witnesses), witnesses, margin)


def r1_pa_contains(point: RatePoint, params: SystemParams,
                   policy: CooperationPolicy) -> MembershipVerdict:
    """Membership in the dummy-source dominant region at fixed pa."""
    return _verdict([(SubregionId.R1_PA, _r1_pa_slacks(point, params, policy))])


def r2_pa_contains(point: RatePoint, params: SystemParams,
                   policy: CooperationPolicy) -> MembershipVerdict:
    """Membership in the dummy-relay dominant region at fixed pa."""
    return _verdict([(SubregionId.R2_PA, _r2_pa_slacks(point, params, policy))])


def region_fixed_pa_contains(point: RatePoint, params: SystemParams,
                             policy: CooperationPolicy) -> MembershipVerdict:
    """Membership in the full fixed-pa stability region (union of the two)."""
    return _verdict([
        (SubregionId.R1_PA, _r1_pa_slacks(point, params, policy)),
        (SubregionId.R2_PA, _r2_pa_slacks(point, params, policy)),
    ])


def closure_case(params: SystemParams) -> ClosureCase:
    """Select the closed forms that make up the closure region.

    The first branch keeps pa* = 1 while q1 < p23 / (p13 + p23); at or above
    that threshold admission stops paying and pa* = 0.  The second branch
    keeps pa* = 1 when q2 >= p13 / (p13 + p23) and otherwise splits along
    lambda1 into a pa* = 0 piece and an interior-pa piece.
    """
    ch, ac = params.channel, params.access
    total = ch.p13 + ch.p23
    if total == 0.0:
        raise DegenerateThresholdError("p13 + p23 = 0: case thresholds undefined")
    t1 = ch.p23 / total
    t2 = ch.p13 / total
    r1 = R1Case.PA0 if ac.q1 >= t1 else R1Case.PA1
    r2 = R2Case.PA1 if ac.q2 >= t2 else R2Case.SPLIT
    return ClosureCase(r1, r2, (t1, t2))


def _closure_pieces(params: SystemParams, case: ClosureCase):
    if case.r1_case is R1Case.PA1:
        pieces = [(SubregionId.R11, _r11_slacks)]
    else:
        pieces = [(SubregionId.R12, _r12_slacks)]
    if case.r2_case is R2Case.PA1:
        pieces.append((SubregionId.R21, _r21_slacks))
    else:
        pieces.append((SubregionId.R221, _r221_slacks))
        pieces.append((SubregionId.R222, _r222_slacks))
    return pieces


def closure_contains(point: RatePoint, params: SystemParams) -> MembershipVerdict:
    """Membership in the closure over all admission probabilities."""
    case = closure_case(params)
    return _verdict([(tag, fn(point, params)) for tag, fn in _closure_pieces(params, case)])


# ---------------------------------------------------------------------------
# Boundary geometry.  Every subregion's lambda2 boundary at a given lambda1
# is a line (or the min of two), so the region boundary is the upper
# envelope over its subregions.  The envelope identifies the governing
# segment and the admission probability that attains it; the traced lambda2
# values themselves are re-derived by bisecting the membership predicate so
# the two routes cross-check each other.


def _piece_lambda2_bound(tag: SubregionId, lam1: float, params: SystemParams,
                         policy: CooperationPolicy | None = None) -> float:
    """Supremum lambda2 of one subregion at fixed lambda1, -inf if unreachable."""
    ch, ac = params.channel, params.access
    q1, q2, p13, p12, p23 = ac.q1, ac.q2, ch.p13, ch.p12, ch.p23
    x1 = p13 + (1.0 - p13) * p12
    if tag is SubregionId.R1_PA:
        x = departure_success_rate(ch, policy)
        den = (1.0 - q1) * p23
        if den <= 0.0 or x <= 0.0 or q1 <= 0.0:
            return -math.inf
        coef1 = 1.0 + q1 * (x - p13) / den
        coef2 = q1 * x / den
        line_source = (q1 * x - coef1 * lam1) / coef2
        line_relay = q2 * den - (x - p13) / x * lam1
        return min(line_source, line_relay)
    if tag is SubregionId.R2_PA:
        x = departure_success_rate(ch, policy)
        den = (1.0 - q2) * x
        if den <= 0.0 or lam1 >= q1 * den:
            return -math.inf
        coef = ((1.0 - q2) * (x - p13) + q2 * p23) / den
        return q2 * p23 - coef * lam1
    if tag is SubregionId.R11:
        if q1 * x1 <= 0.0:
            return -math.inf
        coef = (q1 * p12 * (1.0 - p13) + (1.0 - q1) * p23) / (q1 * x1)
        return min((1.0 - q1) * p23 - coef * lam1,
                   q2 * (1.0 - q1) * p23 - p12 * (1.0 - p13) / x1 * lam1)
    if tag is SubregionId.R12:
        if q1 * p13 <= 0.0 or (1.0 - q1) * p23 <= 0.0:
            return -math.inf
        return min((1.0 - q1) * p23 * (1.0 - lam1 / (q1 * p13)),
                   q2 * (1.0 - q1) * p23)
    if tag is SubregionId.R21:
        den = (1.0 - q2) * x1
        if den <= 0.0 or lam1 >= q1 * den:
            return -math.inf
        coef = ((1.0 - q2) * p12 * (1.0 - p13) + q2 * p23) / den
        return q2 * p23 - coef * lam1
    if tag is SubregionId.R221:
        if (1.0 - q2) * p13 <= 0.0 or lam1 >= q1 * (1.0 - q2) * p13:
            return -math.inf
        return q2 * p23 * (1.0 - lam1 / ((1.0 - q2) * p13))
    if tag is SubregionId.R222:
        low = q1 * (1.0 - q2) * p13
        high = q1 * (1.0 - q2) * x1
        if not (low <= lam1 < high):
            return -math.inf
        return low + q2 * p23 * (1.0 - q1) - lam1
    raise ValueError(f"unknown subregion {tag!r}")


def _interior_pa(params: SystemParams, lam1: float) -> float:
    """Admission probability at which lambda1 exactly saturates the
    dummy-relay source service rate."""
    ch, ac = params.channel, params.access
    den = ac.q1 * (1.0 - ac.q2) * (1.0 - ch.p13) * ch.p12
    if den == 0.0:
        raise DegenerateSourceError(
            "interior admission probability undefined: q1*(1-q2)*(1-p13)*p12 = 0")
    pa = (lam1 - ac.q1 * (1.0 - ac.q2) * ch.p13) / den
    return min(1.0, max(0.0, pa))


def _piece_pa_star(tag: SubregionId, params: SystemParams, lam1: float) -> float:
    if tag in (SubregionId.R11, SubregionId.R21):
        return 1.0
    if tag in (SubregionId.R12, SubregionId.R221):
        return 0.0
    return _interior_pa(params, lam1)


def _closure_envelope(params: SystemParams, lam1: float):
    """Best (bound, tag) over the applicable closure pieces at lambda1.

    Ties prefer the second-branch pieces, whose pa* the split formula
    describes; the attained boundary value is identical either way.
    """
    case = closure_case(params)
    order = [SubregionId.R221, SubregionId.R222, SubregionId.R21,
             SubregionId.R11, SubregionId.R12]
    applicable = {tag for tag, _ in _closure_pieces(params, case)}
    best = (-math.inf, None)
    for tag in order:
        if tag not in applicable:
            continue
        bound = _piece_lambda2_bound(tag, lam1, params)
        if bound > best[0]:
            best = (bound, tag)
    return best


def optimal_pa(params: SystemParams, lambda1: float) -> float:
    """Admission probability whose fixed-pa region reaches the closure
    boundary at this lambda1.

    Below the first split threshold q1*(1-q2)*p13 no admission is needed;
    between the thresholds the interior formula
    (lambda1 - q1*(1-q2)*p13) / (q1*(1-q2)*(1-p13)*p12) applies; beyond the
    second threshold only full admission keeps up.  The returned value is
    clamped to [0, 1].

    Raises CapacityExceededError when lambda1 is outside the closure for
    every lambda2, i.e. no admission probability can stabilize the source.
    """
    if not (0.0 <= lambda1 <= 1.0):
        raise ValueError(f"lambda1={lambda1!r} outside [0, 1]")
    bound, tag = _closure_envelope(params, lambda1)
    if tag is None or bound <= 0.0:
        raise CapacityExceededError(
            f"lambda1={lambda1!r} exceeds the closure's source-rate range")
    return _piece_pa_star(tag, params, lambda1)


def _region_predicate(params: SystemParams, policy: CooperationPolicy | None):
    if policy is None:
        case = closure_case(params)  # fail fast on degenerate thresholds
        del case
        return lambda point: closure_contains(point, params).inside
    return lambda point: region_fixed_pa_contains(point, params, policy).inside


def _bisect_sup(predicate, lo: float, hi: float) -> float:
    """Largest t in [lo, hi] with predicate(t) true, assuming an interval."""
    if not predicate(lo):
        return lo
    if predicate(hi):
        return hi
    for _ in range(_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def boundary_lambda2(params: SystemParams, policy: CooperationPolicy | None,
                     lambda1: float) -> float:
    """Supremum lambda2 still inside the region at this lambda1, by bisection."""
    inside = _region_predicate(params, policy)
    return _bisect_sup(lambda lam2: inside(RatePoint(lambda1, lam2)), 0.0, 1.0)


def region_lambda1_max(params: SystemParams,
                       policy: CooperationPolicy | None = None) -> float:
    """Supremum lambda1 of the region along the lambda2 = 0 axis, by bisection."""
    inside = _region_predicate(params, policy)
    return _bisect_sup(lambda lam1: inside(RatePoint(lam1, 0.0)), 0.0, 1.0)


def _fixed_pa_envelope(params: SystemParams, policy: CooperationPolicy, lam1: float):
    best = (-math.inf, SubregionId.R1_PA)
    for tag in (SubregionId.R2_PA, SubregionId.R1_PA):
        bound = _piece_lambda2_bound(tag, lam1, params, policy)
        if bound > best[0]:
            best = (bound, tag)
    return best


def boundary_trace(params: SystemParams, policy: CooperationPolicy | None,
                   resolution: int) -> BoundaryTrace:
    """Trace the region's upper boundary at `resolution` evenly spaced
    lambda1 values from 0 to the region's source-rate supremum.

    policy None traces the closure; a CooperationPolicy traces that fixed
    region.  Each lambda2 is bisected out of the membership predicate, and
    the governing segment plus attaining admission probability come from
    the analytic envelope, so the trace doubles as a consistency check
    between the two routes.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    lam1_max = region_lambda1_max(params, policy)
    points = []
    labels = []
    pa_values = []
    for i in range(resolution):
        lam1 = lam1_max * i / (resolution - 1)
        lam2 = boundary_lambda2(params, policy, lam1)
        # The envelope is evaluated a hair inside the end point, where every
        # piece has already vanished.
        probe = min(lam1, math.nextafter(lam1_max, 0.0))
        if policy is None:
            _, tag = _closure_envelope(params, probe)
            pa_star = _piece_pa_star(tag, params, probe) if tag is not None else 0.0
        else:
            _, tag = _fixed_pa_envelope(params, policy, probe)
            pa_star = policy.pa
        points.append(RatePoint(lam1, lam2))
        labels.append(tag if tag is not None else SubregionId.R1_PA)
        pa_values.append(pa_star)
    return BoundaryTrace(tuple(points), tuple(labels), tuple(pa_values))
