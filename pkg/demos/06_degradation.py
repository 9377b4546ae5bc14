"""A degraded channel has pointwise larger Bhattacharyya parameters.

    python demos/06_degradation.py
"""
import numpy as np

from qpolar.construction import check_degradation_ordering, degrade_channel, symmetric_channel
from qpolar.gfq import make_field

better = symmetric_channel(2, 0.1)
worse = degrade_channel(better, symmetric_channel(2, 0.05).W)
print("BSC(0.1) followed by BSC(0.05):\n", np.round(worse.W, 4))
for r in check_degradation_ordering(make_field(2), worse, better, 4):
    print(f"i={r.index}: Z degraded {r.z_degraded:.5f} >= Z better {r.z_better:.5f}: {r.holds}")

ternary = symmetric_channel(3, 0.15)
rng = np.random.default_rng(3)
w = rng.dirichlet(np.ones(4), size=3)
reps = check_degradation_ordering(make_field(3), degrade_channel(ternary, w), ternary, 4)
print("random 3x4 post-processing, q=3, N=4:", all(r.holds for r in reps))
