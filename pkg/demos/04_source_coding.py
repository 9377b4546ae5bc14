"""Compress a five-symbol source to its frozen symbols and recover it with side information.

    python demos/04_source_coding.py
"""
import math

import numpy as np

from qpolar.construction import Criterion, estimate_z_mc, select_info_set
from qpolar.gfq import make_field
from qpolar.simulation import simulate_source
from qpolar.source_codec import compress, decompress, paper_source

src = paper_source()
h = src.conditional_entropy()
print(f"P(Y) = {np.round(src.p_y, 5)}, H(X|Y) = {h:.5f} bits = {h / math.log2(5):.4f} q-ary units")

f = make_field(5)
N = 1024
z = estimate_z_mc(f, src, N, 4000, seed=11)
code = select_info_set(f, z, Criterion("sum-bound", 1e-3))
print(f"N={N}: |A^c| = {N - code.K}, R_s = {code.source_rate:.4f}, bound {code.bound_pe:.1e}")

rng = np.random.default_rng(0)
x, y = src.sample(rng, N)
block = compress(code, x)
x_hat = decompress(code, block, y, src)
print(f"one block: sent {block.values.size} symbols for {N}, {int((x_hat != x).sum())} symbol errors")

counts = simulate_source(code, src, 64, seed=5)
print(f"64 blocks: SER {counts.ser:.2e}, WER {counts.wer:.3f}")
