"""Stable throughput analysis for a slotted random-access relay network.

The package couples three views of the same system: closed-form stability
regions for a source assisted by a packet relay with a tunable admission
controller (`relaystab.region`), a slot-level Monte Carlo simulator of the
queue dynamics (`relaystab.simulation`), and a harness that sweeps rate
grids and checks the analytic verdicts against simulated queue drift
(`relaystab.harness`).  `relaystab.cli` exposes the lot as subcommands.
"""

from .model import (
    AccessProbabilities,
    CapacityExceededError,
    ChannelProbabilities,
    CooperationPolicy,
    DegenerateSourceError,
    DegenerateThresholdError,
    DerivedRates,
    ModelError,
    RatePoint,
    SystemParams,
    UnstableQueueError,
    ValidationResult,
    ZeroServiceError,
    branch_probability,
    validate_params,
)
from .region import (
    BoundaryTrace,
    ClosureCase,
    MembershipVerdict,
    R1Case,
    R2Case,
    SubregionId,
    boundary_lambda2,
    boundary_trace,
    closure_case,
    closure_contains,
    dominant1_derived_rates,
    dominant1_q2_busy_prob,
    optimal_pa,
    r1_pa_contains,
    r2_pa_contains,
    region_fixed_pa_contains,
    region_lambda1_max,
    relay_service_rate,
    relay_total_arrival_rate,
    source_service_rate,
)
from .simulation import (
    SimConfig,
    SimMode,
    SimState,
    SimStats,
    SlotOutcome,
    initial_state,
    measure_saturated_service_rate,
    run,
    run_with_trace,
    step,
)
from .harness import (
    RegionReport,
    ReportRow,
    StabilityTag,
    StabilityVerdict,
    SweepSpec,
    classify_stability,
    compare_three_schemes,
    containment_violations,
    sweep,
)

__version__ = "0.1.0"
