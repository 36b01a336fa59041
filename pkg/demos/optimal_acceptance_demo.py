"""Sweep the throughput-optimal admission probability pa* against the
source arrival rate and show its three regimes: no admission while the
direct link alone can carry the load, a linear ramp, then full admission.

    python3 demos/optimal_acceptance_demo.py
"""

import numpy as np

from relaystab import (
    AccessProbabilities,
    CapacityExceededError,
    ChannelProbabilities,
    SystemParams,
    closure_case,
    optimal_pa,
    region_lambda1_max,
)

PARAMS = SystemParams(ChannelProbabilities(p13=0.5, p12=0.9, p23=0.8),
                      AccessProbabilities(q1=0.2, q2=0.3))

case = closure_case(PARAMS)
print(f"closure pieces for these parameters: {case.r1_case.name} / "
      f"{case.r2_case.name}, thresholds {case.thresholds[0]:.4f} "
      f"and {case.thresholds[1]:.4f}")

lam1_max = region_lambda1_max(PARAMS, None)
print(f"source rate supportable at lambda2=0: {lam1_max:.6f}\n")

print(" lambda1    pa*")
for lam1 in np.linspace(0.0, lam1_max - 1e-9, 23):
    pa = optimal_pa(PARAMS, float(lam1))
    bar = "#" * int(round(40 * pa))
    print(f"  {lam1:7.4f}  {pa:6.4f}  {bar}")

# ramp endpoints, in closed form for this parameter set
low = PARAMS.access.q1 * (1 - PARAMS.access.q2) * PARAMS.channel.p13
high = PARAMS.access.q1 * (1 - PARAMS.access.q2) * (
    PARAMS.channel.p13 + (1 - PARAMS.channel.p13) * PARAMS.channel.p12)
print(f"\nramp starts at {low:.6f} and saturates at {high:.6f}")

try:
    optimal_pa(PARAMS, lam1_max + 0.01)
except CapacityExceededError as exc:
    print(f"beyond the reach: {exc}")
