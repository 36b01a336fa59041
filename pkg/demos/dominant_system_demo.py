"""Check two analytical handles on the coupled queues against simulation.

First the relay occupancy under a dummy-padded source, which decouples the
relay queue and makes its load-over-service ratio exact.  Then the
saturated source's departure rate with the relay forced idle or busy,
which brackets the true service rate seen by the source queue.

    python3 demos/dominant_system_demo.py   (about 15 s)
"""

from relaystab import (
    AccessProbabilities,
    ChannelProbabilities,
    CooperationPolicy,
    RatePoint,
    SimConfig,
    SimMode,
    SystemParams,
    branch_probability,
    measure_saturated_service_rate,
    run,
)

PARAMS = SystemParams(ChannelProbabilities(p13=0.5, p12=0.9, p23=0.8),
                      AccessProbabilities(q1=0.2, q2=0.3))
POLICY = CooperationPolicy(1.0)
SLOTS = 400_000

rates = RatePoint(0.05, 0.05)
frac = branch_probability(PARAMS.channel, POLICY)
load = rates.lambda2 + frac * rates.lambda1
service = PARAMS.access.q2 * (1 - PARAMS.access.q1) * PARAMS.channel.p23
print(f"fraction of source traffic routed through the relay: {frac:.6f}")
print(f"relay load {load:.6f} over service {service:.6f} "
      f"-> predicted busy fraction {load / service:.6f}")

stats = run(SimConfig(PARAMS, POLICY, rates, SimMode.DOMINANT_SOURCE_DUMMY,
                      SLOTS, seed=1, sample_stride=1000))
print(f"simulated busy fraction over {SLOTS} padded slots: "
      f"{stats.r_busy_fraction:.6f}\n")

# source service bracket: relay never transmitting vs always transmitting
mu_hi = PARAMS.access.q1 * PARAMS.channel.p13
mu_lo = PARAMS.access.q1 * (1 - PARAMS.access.q2) * PARAMS.channel.p13
got_hi = measure_saturated_service_rate(PARAMS, CooperationPolicy(0.0),
                                        lambda2=0.0, n_slots=SLOTS, seed=1)
got_lo = measure_saturated_service_rate(PARAMS, CooperationPolicy(0.0),
                                        lambda2=1.0, n_slots=SLOTS, seed=1)
print(f"saturated source, idle relay : predicted {mu_hi:.4f}  "
      f"measured {got_hi:.4f}")
print(f"saturated source, busy relay : predicted {mu_lo:.4f}  "
      f"measured {got_lo:.4f}")
