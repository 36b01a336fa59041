"""Trace the stable-throughput boundary for the two fixed admission
extremes and for the closure over all admission probabilities, then print
the landmark points of the closure envelope.

Run from the repo root after installing the package:
    python3 demos/stability_regions_demo.py
Writes regions.png next to this script when matplotlib is available.
"""

import os

import numpy as np

from relaystab import (
    AccessProbabilities,
    ChannelProbabilities,
    CooperationPolicy,
    SystemParams,
    boundary_lambda2,
    boundary_trace,
    region_lambda1_max,
)

# baseline scenario: strong S-R and R-D links, weaker direct link
PARAMS = SystemParams(ChannelProbabilities(p13=0.5, p12=0.9, p23=0.8),
                      AccessProbabilities(q1=0.2, q2=0.3))
RESOLUTION = 400

traces = {}
for label, policy in [("pa=0", CooperationPolicy(0.0)),
                      ("pa=1", CooperationPolicy(1.0)),
                      ("closure", None)]:
    traces[label] = boundary_trace(PARAMS, policy, RESOLUTION)
    reach = region_lambda1_max(PARAMS, policy)
    print(f"{label:8s} lambda1 reach {reach:.6f}  "
          f"lambda2-axis intercept {traces[label].points[0].lambda2:.6f}")

print()
print("closure landmarks (lambda1, lambda2, active piece, pa*):")
tr = traces["closure"]
xs = np.array([p.lambda1 for p in tr.points])
for lam1 in [0.0, 0.07, 0.10, 0.133, 0.1665]:
    pt = boundary_lambda2(PARAMS, None, lam1)
    # re-probe the trace for the piece label nearest this abscissa
    k = int(np.argmin(np.abs(xs - lam1)))
    print(f"  {lam1:7.4f}  {pt:.6f}  {tr.segment_labels[k].value:5s}  "
          f"pa*={tr.pa_star_values[k]:.4f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed, skipping the figure")
else:
    fig, ax = plt.subplots(figsize=(6, 5))
    styles = {"pa=0": "C0--", "pa=1": "C1-.", "closure": "k-"}
    for label, trace in traces.items():
        ax.plot([p.lambda1 for p in trace.points],
                [p.lambda2 for p in trace.points], styles[label], label=label)
    ax.set_xlabel("source arrival rate")
    ax.set_ylabel("relay exogenous arrival rate")
    ax.set_title("stable-throughput boundaries")
    ax.legend()
    ax.grid(alpha=0.3)
    out = os.path.join(os.path.dirname(__file__), "regions.png")
    fig.savefig(out, dpi=120, bbox_inches="tight")
    print(f"\nwrote {out}")
