"""Slot-level Monte Carlo simulation of the relay network queues.

Every slot consumes exactly eight uniform draws in a fixed order: source
attempt, relay attempt, source-to-destination erasure, source-to-relay
erasure, admission, relay-to-destination erasure, source arrival, relay
arrival.  An event fires when its draw is strictly below the probability.
All eight are drawn whether or not the slot needs them, so runs with the
same seed stay aligned across modes and parameter changes.

Within a slot: transmission decisions use start-of-slot queue states; two
simultaneous transmissions collide; a lone source transmission reaches the
destination with p13, otherwise the silent relay may decode (p12) and
admit (pa) it; a lone relay transmission delivers its head-of-line packet
with p23.  Departures are removed, an admitted packet joins the relay
queue behind nothing (before any same-slot arrival), and exogenous
arrivals append last, becoming eligible the next slot.

Dominant modes pad one queue with dummy packets that occupy the channel
but never touch any queue, and the saturated mode replaces the source
queue with an infinite backlog for service-rate measurement.  The two
execution routes, a compiled kernel in `run` and the pure-Python `step`
used by `run_with_trace`, consume the same draw stream and must produce
bit-identical statistics.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import (
    CooperationPolicy,
    RatePoint,
    SystemParams,
    validate_params,
    validate_policy,
    validate_rates,
)


class SimMode(enum.Enum):
    ORIGINAL = "original"
    DOMINANT_SOURCE_DUMMY = "dominant-source"
    DOMINANT_RELAY_DUMMY = "dominant-relay"
    SOURCE_SATURATED = "saturated"


_MODE_CODES = {
    SimMode.ORIGINAL: 0,
    SimMode.DOMINANT_SOURCE_DUMMY: 1,
    SimMode.DOMINANT_RELAY_DUMMY: 2,
    SimMode.SOURCE_SATURATED: 3,
}

_RELAYED, _EXOGENOUS = 1, 0


@dataclass(frozen=True)
class SimConfig:
    params: SystemParams
    policy: CooperationPolicy
    rates: RatePoint
    mode: SimMode = SimMode.ORIGINAL
    n_slots: int = 10**6
    seed: int = 0
    sample_stride: int = 1


@dataclass
class SimState:
    """Mutable-by-step simulation state.

    The rng and relay_queue objects are shared with the successor state
    returned by step, so a consumed state must not be stepped again.
    relay_queue holds origin tags (1 admitted from the source, 0 exogenous)
    in FIFO order; q2_len mirrors its length.
    """

    q1_len: int
    q2_len: int
    slot: int
    rng: np.random.Generator
    relay_queue: deque = field(default_factory=deque)


@dataclass(frozen=True)
class SlotOutcome:
    s_transmitted: bool
    r_transmitted: bool
    collision: bool
    s_to_d: bool
    s_to_r_accepted: bool
    r_to_d: bool
    s_arrival: bool
    r_arrival: bool
    s_dummy: bool
    r_dummy: bool

    CSV_FIELDS = ("s_transmitted", "r_transmitted", "collision", "s_to_d",
                  "s_to_r_accepted", "r_to_d", "s_arrival", "r_arrival",
                  "s_dummy", "r_dummy")


@dataclass
class SimStats:
    """Counters and queue-length samples accumulated over a run.

    Deliveries distinguish packet origin: s_direct_delivered counts source
    packets decoded by the destination, relayed_delivered admitted source
    packets forwarded by the relay, r_exo_delivered the relay's own flow.
    Busy counters use start-of-slot occupancy.  sample_* arrays record the
    start-of-slot queue lengths every sample_stride slots.
    """

    n_slots: int
    s_real_arrivals: int
    r_real_arrivals: int
    s_dummy_tx: int
    r_dummy_tx: int
    s_direct_delivered: int
    relay_admissions: int
    relayed_delivered: int
    r_exo_delivered: int
    s_busy_slots: int
    r_busy_slots: int
    final_q1_len: int
    final_q2_len: int
    final_relayed_backlog: int
    sample_slots: np.ndarray
    sample_q1: np.ndarray
    sample_q2: np.ndarray

    @property
    def source_flow_delivery_rate(self) -> float:
        """Source-flow packets reaching the destination, per slot."""
        return (self.s_direct_delivered + self.relayed_delivered) / self.n_slots

    @property
    def relay_flow_delivery_rate(self) -> float:
        return self.r_exo_delivered / self.n_slots

    @property
    def source_departure_rate(self) -> float:
        """Rate at which packets exit the source queue by either path."""
        return (self.s_direct_delivered + self.relay_admissions) / self.n_slots

    @property
    def r_busy_fraction(self) -> float:
        return self.r_busy_slots / self.n_slots

    def equals(self, other: "SimStats") -> bool:
        for name in ("n_slots", "s_real_arrivals", "r_real_arrivals", "s_dummy_tx",
                     "r_dummy_tx", "s_direct_delivered", "relay_admissions",
                     "relayed_delivered", "r_exo_delivered", "s_busy_slots",
                     "r_busy_slots", "final_q1_len", "final_q2_len",
                     "final_relayed_backlog"):
            if getattr(self, name) != getattr(other, name):
                return False
        return (np.array_equal(self.sample_slots, other.sample_slots)
                and np.array_equal(self.sample_q1, other.sample_q1)
                and np.array_equal(self.sample_q2, other.sample_q2))


def _check_config(config: SimConfig) -> None:
    result = validate_params(config.params)
    if not result.ok:
        raise ValueError("invalid parameters: " + "; ".join(result.violations))
    for res in (validate_policy(config.policy), validate_rates(config.rates)):
        if not res.ok:
            raise ValueError("invalid configuration: " + "; ".join(res.violations))
    if config.n_slots < 1:
        raise ValueError(f"n_slots={config.n_slots!r} must be at least 1")
    if config.sample_stride < 1:
        raise ValueError(f"sample_stride={config.sample_stride!r} must be at least 1")
    if config.seed < 0:
        raise ValueError(f"seed={config.seed!r} must be a non-negative integer")


def initial_state(config: SimConfig) -> SimState:
    """Empty-queue start state with the seeded generator."""
    return SimState(0, 0, 0, np.random.default_rng(config.seed), deque())


def step(state: SimState, config: SimConfig) -> tuple[SimState, SlotOutcome]:
    """Advance one slot, returning the successor state and what happened.

    Reference implementation of the slot dynamics; `run` executes the same
    logic in compiled form.  Consumes exactly eight uniforms.
    """
    u = state.rng.random(8)
    mode = config.mode
    q1, q2 = config.params.access.q1, config.params.access.q2
    ch = config.params.channel
    pa = config.policy.pa

    saturated = mode is SimMode.SOURCE_SATURATED
    s_eligible = saturated or state.q1_len > 0 or mode is SimMode.DOMINANT_SOURCE_DUMMY
    s_tx = s_eligible and u[0] < q1
    s_dummy = s_tx and not saturated and state.q1_len == 0
    r_eligible = state.q2_len > 0 or mode is SimMode.DOMINANT_RELAY_DUMMY
    r_tx = r_eligible and u[1] < q2
    r_dummy = r_tx and state.q2_len == 0
    collision = s_tx and r_tx

    s_to_d = s_tx and not r_tx and not s_dummy and u[2] < ch.p13
    s_to_r_accepted = (s_tx and not r_tx and not s_dummy and not s_to_d
                       and u[3] < ch.p12 and u[4] < pa)
    r_to_d = r_tx and not s_tx and not r_dummy and u[5] < ch.p23

    q1_len = state.q1_len
    q2_len = state.q2_len
    if s_to_d and not saturated:
        q1_len -= 1
    if s_to_r_accepted:
        if not saturated:
            q1_len -= 1
        state.relay_queue.append(_RELAYED)
        q2_len += 1
    if r_to_d:
        state.relay_queue.popleft()
        q2_len -= 1

    s_arrival = u[6] < config.rates.lambda1
    r_arrival = u[7] < config.rates.lambda2
    if s_arrival and not saturated:
        q1_len += 1
    if r_arrival:
        state.relay_queue.append(_EXOGENOUS)
        q2_len += 1

    outcome = SlotOutcome(s_tx, r_tx, collision, s_to_d, s_to_r_accepted,
                          r_to_d, s_arrival, r_arrival, s_dummy, r_dummy)
    return SimState(q1_len, q2_len, state.slot + 1, state.rng, state.relay_queue), outcome


@njit(cache=True)
def _run_slots(u, q1, q2, p13, p12, p23, pa, lam1, lam2, mode, stride,
               sample_slots, sample_q1, sample_q2, tags):
    n = u.shape[0]
    q1_len = 0
    q2_len = 0
    head = 0
    tail = 0
    s_arrivals = 0
    r_arrivals = 0
    s_dummies = 0
    r_dummies = 0
    s_direct = 0
    admissions = 0
    relayed = 0
    exo = 0
    s_busy = 0
    r_busy = 0
    k = 0
    saturated = mode == 3
    for t in range(n):
        if t % stride == 0:
            sample_slots[k] = t
            sample_q1[k] = q1_len
            sample_q2[k] = q2_len
            k += 1
        if saturated or q1_len > 0:
            s_busy += 1
        if q2_len > 0:
            r_busy += 1

        s_eligible = saturated or q1_len > 0 or mode == 1
        s_tx = s_eligible and u[t, 0] < q1
        s_dummy = s_tx and not saturated and q1_len == 0
        r_eligible = q2_len > 0 or mode == 2
        r_tx = r_eligible and u[t, 1] < q2
        r_dummy = r_tx and q2_len == 0

        s_to_d = s_tx and not r_tx and not s_dummy and u[t, 2] < p13
        s_acc = (s_tx and not r_tx and not s_dummy and not s_to_d
                 and u[t, 3] < p12 and u[t, 4] < pa)
        r_to_d = r_tx and not s_tx and not r_dummy and u[t, 5] < p23

        if s_dummy:
            s_dummies += 1
        if r_dummy:
            r_dummies += 1
        if s_to_d:
            s_direct += 1
            if not saturated:
                q1_len -= 1
        if s_acc:
            admissions += 1
            if not saturated:
                q1_len -= 1
            tags[tail] = 1
            tail += 1
            q2_len += 1
        if r_to_d:
            if tags[head] == 1:
                relayed += 1
            else:
                exo += 1
            head += 1
            q2_len -= 1
        if u[t, 6] < lam1 and not saturated:
            q1_len += 1
            s_arrivals += 1
        if u[t, 7] < lam2:
            tags[tail] = 0
            tail += 1
            q2_len += 1
            r_arrivals += 1

    backlog = 0
    for i in range(head, tail):
        if tags[i] == 1:
            backlog += 1
    return (q1_len, q2_len, s_arrivals, r_arrivals, s_dummies, r_dummies,
            s_direct, admissions, relayed, exo, s_busy, r_busy, backlog)


def run(config: SimConfig) -> SimStats:
    """Run the configured number of slots from empty queues.

    Deterministic: identical configs give bit-identical SimStats.  The
    whole draw stream is materialized up front, (n_slots, 8) uniforms in
    slot-major order, exactly matching successive 8-draw calls by `step`.
    """
    _check_config(config)
    rng = np.random.default_rng(config.seed)
    u = rng.random((config.n_slots, 8))
    n_samples = 1 + (config.n_slots - 1) // config.sample_stride
    sample_slots = np.zeros(n_samples, dtype=np.int64)
    sample_q1 = np.zeros(n_samples, dtype=np.int64)
    sample_q2 = np.zeros(n_samples, dtype=np.int64)
    tags = np.zeros(2 * config.n_slots + 2, dtype=np.uint8)
    ch, ac = config.params.channel, config.params.access
    out = _run_slots(u, ac.q1, ac.q2, ch.p13, ch.p12, ch.p23,
                     config.policy.pa, config.rates.lambda1, config.rates.lambda2,
                     _MODE_CODES[config.mode], config.sample_stride,
                     sample_slots, sample_q1, sample_q2, tags)
    (q1_len, q2_len, s_arr, r_arr, s_dum, r_dum, s_direct, adm, relayed, exo,
     s_busy, r_busy, backlog) = out
    return SimStats(
        n_slots=config.n_slots,
        s_real_arrivals=int(s_arr), r_real_arrivals=int(r_arr),
        s_dummy_tx=int(s_dum), r_dummy_tx=int(r_dum),
        s_direct_delivered=int(s_direct), relay_admissions=int(adm),
        relayed_delivered=int(relayed), r_exo_delivered=int(exo),
        s_busy_slots=int(s_busy), r_busy_slots=int(r_busy),
        final_q1_len=int(q1_len), final_q2_len=int(q2_len),
        final_relayed_backlog=int(backlog),
        sample_slots=sample_slots, sample_q1=sample_q1, sample_q2=sample_q2,
    )


def run_with_trace(config: SimConfig) -> tuple[SimStats, list[SlotOutcome]]:
    """Step-by-step run returning every slot outcome.

    Much slower than `run`; used for per-slot traces and as the second
    route of the kernel-equivalence check.
    """
    _check_config(config)
    state = initial_state(config)
    saturated = config.mode is SimMode.SOURCE_SATURATED
    n_samples = 1 + (config.n_slots - 1) // config.sample_stride
    sample_slots = np.zeros(n_samples, dtype=np.int64)
    sample_q1 = np.zeros(n_samples, dtype=np.int64)
    sample_q2 = np.zeros(n_samples, dtype=np.int64)
    counters = dict(s_arr=0, r_arr=0, s_dum=0, r_dum=0, s_direct=0, adm=0,
                    relayed=0, exo=0, s_busy=0, r_busy=0)
    outcomes: list[SlotOutcome] = []
    k = 0
    for t in range(config.n_slots):
        if t % config.sample_stride == 0:
            sample_slots[k] = t
            sample_q1[k] = state.q1_len
            sample_q2[k] = state.q2_len
            k += 1
        if saturated or state.q1_len > 0:
            counters["s_busy"] += 1
        if state.q2_len > 0:
            counters["r_busy"] += 1
        head_tag = state.relay_queue[0] if state.relay_queue else None
        state, outcome = step(state, config)
        outcomes.append(outcome)
        counters["s_dum"] += outcome.s_dummy
        counters["r_dum"] += outcome.r_dummy
        counters["s_direct"] += outcome.s_to_d
        counters["adm"] += outcome.s_to_r_accepted
        if outcome.r_to_d:
            if head_tag == _RELAYED:
                counters["relayed"] += 1
            else:
                counters["exo"] += 1
        counters["s_arr"] += outcome.s_arrival and not saturated
        counters["r_arr"] += outcome.r_arrival
    backlog = sum(1 for tag in state.relay_queue if tag == _RELAYED)
    relayed = counters["relayed"]
    exo = counters["exo"]
    stats = SimStats(
        n_slots=config.n_slots,
        s_real_arrivals=counters["s_arr"], r_real_arrivals=counters["r_arr"],
        s_dummy_tx=counters["s_dum"], r_dummy_tx=counters["r_dum"],
        s_direct_delivered=counters["s_direct"], relay_admissions=counters["adm"],
        relayed_delivered=relayed, r_exo_delivered=exo,
        s_busy_slots=counters["s_busy"], r_busy_slots=counters["r_busy"],
        final_q1_len=state.q1_len, final_q2_len=state.q2_len,
        final_relayed_backlog=backlog,
        sample_slots=sample_slots, sample_q1=sample_q1, sample_q2=sample_q2,
    )
    return stats, outcomes


def measure_saturated_service_rate(params: SystemParams, policy: CooperationPolicy,
                                   lambda2: float, n_slots: int, seed: int) -> float:
    """Empirical source service rate with an always-backlogged source.

    Counts packets leaving the saturated source per slot, through either
    the direct link or relay admission, while the relay queue runs
    normally under its own arrival rate lambda2.
    """
    config = SimConfig(params, policy, RatePoint(0.0, lambda2),
                       SimMode.SOURCE_SATURATED, n_slots, seed,
                       sample_stride=max(1, n_slots // 1000))
    stats = run(config)
    return stats.source_departure_rate
