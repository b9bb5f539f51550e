"""Power of HC and the LLR test above, on and below the chimeric boundary.

Run: python notebooks/02_hc_versus_llr.py [reps]
At the boundary r = 2 beta - 1 the LLR keeps nontrivial power while HC stays
near the nominal level; above it both tests separate, HC much more slowly.
"""
import sys

from raredetect import Chimeric, DetectionModel
from raredetect.montecarlo import ExperimentConfig, estimate_power

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 400
beta = 0.75
for r, n in ((0.3, 1e4), (0.5, 1e5), (0.7, 1e4)):
    m = DetectionModel(n=n, beta=beta, r=r, signal=Chimeric())
    est = estimate_power(ExperimentConfig(m, "both", 0.05, reps, seed=1, threads=1))
    print(f"beta={beta} r={r} n={n:g}: "
          + "  ".join(f"{t} {e.estimate:.3f} [{e.wilson_lo:.3f}, {e.wilson_hi:.3f}]" for t, e in est.items()))
