"""Two cross-checks of the analytic regions against queue simulations.

Part 1 sweeps a coarse rate grid under the optimal admission policy and
reports how often the simulated drift verdict matches analytic
membership.  Part 2 picks a rate point that no fixed admission setting
can stabilize but the closure claims, then shows the queues staying put
only under the intermediate pa*.

    python3 demos/simulation_crosscheck_demo.py   (about a minute)
"""

from relaystab import (
    AccessProbabilities,
    ChannelProbabilities,
    CooperationPolicy,
    RatePoint,
    SimConfig,
    SimMode,
    SweepSpec,
    SystemParams,
    classify_stability,
    closure_contains,
    optimal_pa,
    region_fixed_pa_contains,
    sweep,
)

BASE = SystemParams(ChannelProbabilities(p13=0.5, p12=0.9, p23=0.8),
                    AccessProbabilities(q1=0.2, q2=0.3))

spec = SweepSpec(BASE, None, (0.0, 0.2, 8), (0.0, 0.2, 8),
                 n_slots=200_000, seeds=(1, 2), exclusion_band=0.01)
report = sweep(spec)
n_eval = len(report.evaluated_rows)
print(f"grid rows {len(report.rows)}, evaluated {n_eval}, "
      f"skipped near the boundary {len(report.rows) - n_eval}")
print(f"agreement {report.agreement_rate:.3f}, "
      f"disagreements {len(report.disagreements)}")
for row in report.disagreements:
    print(f"  mismatch at ({row.point.lambda1:.4f}, {row.point.lambda2:.4f})"
          f" analytic_inside={row.analytic_inside} verdict={row.verdict.tag}")

# a wide wedge between the fixed extremes and the closure; the relay link
# matches the direct link here so full admission overloads the relay
PARAMS = SystemParams(ChannelProbabilities(p13=0.6, p12=0.9, p23=0.6),
                      AccessProbabilities(q1=0.3, q2=0.3))
POINT = RatePoint(0.15, 0.093)
pa_star = optimal_pa(PARAMS, POINT.lambda1)
print(f"\nwedge point ({POINT.lambda1}, {POINT.lambda2}):  pa*={pa_star:.4f}")
for pa in [0.0, pa_star, 1.0]:
    analytic = region_fixed_pa_contains(POINT, PARAMS, CooperationPolicy(pa))
    verdict = classify_stability(SimConfig(PARAMS, CooperationPolicy(pa),
                                           POINT, SimMode.ORIGINAL,
                                           1_000_000, seed=1,
                                           sample_stride=100))
    print(f"  pa={pa:.4f}  analytic inside={analytic.inside!s:5s}  "
          f"simulated {verdict.tag.name:12s} "
          f"drifts ({verdict.drift_q1:+.2e}, {verdict.drift_q2:+.2e})")
closure = closure_contains(POINT, PARAMS)
print(f"  closure inside={closure.inside} margin {closure.margin:+.4f}")
