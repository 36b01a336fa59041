"""Core parameter types for the slotted relay network.

A source S and a relay R share a collision channel toward a destination D.
Time is slotted; in each slot a backlogged node transmits with its access
probability, simultaneous transmissions collide, and a lone transmission
survives each link erasure independently.  The relay runs a flow controller
that admits an overheard source packet with probability ``pa``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class ModelError(ValueError):
    """Request that is analytically meaningless for the given parameters."""


class DegenerateSourceError(ModelError):
    """The source can never deliver a packet (every exit path has rate 0)."""


class DegenerateThresholdError(ModelError):
    """Case thresholds are undefined because p13 + p23 = 0."""


class ZeroServiceError(ModelError):
    """A queue with a zero service rate was asked for a busy probability."""


class UnstableQueueError(ModelError):
    """A queue-occupancy formula was evaluated outside its stability range."""


class CapacityExceededError(ModelError):
    """The requested source rate exceeds the reach of every admission policy."""


@dataclass(frozen=True)
class ChannelProbabilities:
    """Per-link success probabilities for a lone transmission.

    p13: source to destination, p12: source to relay, p23: relay to
    destination.  The relay is only useful when its outbound link beats the
    direct one, so p23 <= p13 is flagged as a warning by validate_params
    rather than rejected.
    """

    p13: float
    p12: float
    p23: float


@dataclass(frozen=True)
class AccessProbabilities:
    """Slotted-access transmission probabilities of the source and relay."""

    q1: float
    q2: float


@dataclass(frozen=True)
class CooperationPolicy:
    """Flow-controller setting: probability of admitting an overheard packet."""

    pa: float


@dataclass(frozen=True)
class RatePoint:
    """Exogenous Bernoulli arrival rates of the two flows, packets per slot."""

    lambda1: float
    lambda2: float


@dataclass(frozen=True)
class SystemParams:
    channel: ChannelProbabilities
    access: AccessProbabilities


@dataclass(frozen=True)
class DerivedRates:
    """Equilibrium rates of the dummy-source dominant configuration.

    mu1 is the source service rate with the relay occupancy eliminated via
    the occupancy identity, mu2_q the relay service rate seen by its queue,
    lambda_q2 the total relay-queue arrival rate, and branch_prob the share
    of departing source packets that leave through the relay.
    """

    mu1: float
    mu2_q: float
    lambda_q2: float
    branch_prob: float


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of a parameter check: hard violations and advisory warnings."""

    violations: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_params(params: SystemParams) -> ValidationResult:
    """Check that all probabilities lie in [0, 1].

    Returns a result object instead of raising so callers can surface every
    problem at once.  A channel with p23 <= p13 is legal but pointless for
    cooperation, hence a warning.
    """
    violations = []
    ch, ac = params.channel, params.access
    for name, value in (("p13", ch.p13), ("p12", ch.p12), ("p23", ch.p23),
                        ("q1", ac.q1), ("q2", ac.q2)):
        if not (0.0 <= value <= 1.0):
            violations.append(f"{name}={value!r} outside [0, 1]")
    warnings = []
    if not violations and ch.p23 <= ch.p13:
        warnings.append(
            f"p23={ch.p23!r} <= p13={ch.p13!r}: relay link does not beat the direct link")
    return ValidationResult(tuple(violations), tuple(warnings))


def validate_policy(policy: CooperationPolicy) -> ValidationResult:
    if not (0.0 <= policy.pa <= 1.0):
        return ValidationResult((f"pa={policy.pa!r} outside [0, 1]",))
    return ValidationResult()


def validate_rates(rates: RatePoint) -> ValidationResult:
    violations = tuple(
        f"{name}={value!r} outside [0, 1]"
        for name, value in (("lambda1", rates.lambda1), ("lambda2", rates.lambda2))
        if not (0.0 <= value <= 1.0))
    return ValidationResult(violations)


def departure_success_rate(channel: ChannelProbabilities, policy: CooperationPolicy) -> float:
    """Probability that a lone source transmission exits the source queue.

    Either the destination decodes it directly (p13) or, failing that, the
    relay both decodes (p12) and admits (pa) it.
    """
    return channel.p13 + (1.0 - channel.p13) * channel.p12 * policy.pa


def branch_probability(channel: ChannelProbabilities, policy: CooperationPolicy) -> float:
    """Fraction of departing source packets that leave via the relay queue.

    Conditioning on a departure cancels the relay-occupancy factor, leaving
    (1-p13)*p12*pa / (p13 + (1-p13)*p12*pa).  With pa = 0 and a usable
    direct link this is exactly 0.

    Raises DegenerateSourceError when the denominator is 0, i.e. p13 = 0
    and no relay path exists either; the split of a departure that can
    never happen is undefined.
    """
    total = departure_success_rate(channel, policy)
    if total == 0.0:
        raise DegenerateSourceError(
            "source packets can never depart: p13 = 0 and (1 - p13) * p12 * pa = 0")
    return (1.0 - channel.p13) * channel.p12 * policy.pa / total


def finite_or(value: float, fallback: float = -math.inf) -> float:
    """Map NaN (from 0/0 corner parameters) to a fallback slack."""
    return value if not math.isnan(value) else fallback
