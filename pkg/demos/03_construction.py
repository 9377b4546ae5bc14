"""Bhattacharyya parameters: exact enumeration versus Monte Carlo, then code selection.

    python demos/03_construction.py
"""
import numpy as np

from qpolar.construction import Criterion, estimate_z_mc, exact_z, select_info_set, symmetric_channel
from qpolar.gfq import make_field

f = make_field(3)
ch = symmetric_channel(3, 0.2)
exact = exact_z(f, ch, 4)
mc = estimate_z_mc(f, ch, 4, 20_000, seed=1)
for i in range(4):
    print(f"Z_{i}: exact {exact[i]:.5f}  MC {mc.z[i]:.5f} +- {mc.stderr[i]:.5f}")

# polarization at larger N
for N in (64, 512):
    z = estimate_z_mc(f, ch, N, 2000, seed=2).z
    print(f"N={N}: fraction of indices with Z < 1e-3: {np.mean(z < 1e-3):.3f}, "
          f"with Z > 0.9: {np.mean(z > 0.9):.3f}")

code = select_info_set(f, estimate_z_mc(f, ch, 256, 2000, seed=3), Criterion("sum-bound", 1e-3))
print(f"sum-bound 1e-3 at N=256: K={code.K}, rate {code.rate:.3f}, bound on P_e {code.bound_pe:.2e}")
