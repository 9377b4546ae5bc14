"""GF(q) arithmetic and the extended polar transform.

    python demos/01_field_and_transform.py
"""
import numpy as np

from qpolar import gfq
from qpolar.gfq import make_field
from qpolar.oracle import explicit_gn
from qpolar.transform import polar_decode_transform, polar_encode

for q in (5, 8, 9):
    f = make_field(q)
    print(f"F_{q}: p={f.p} m={f.m} modulus={f.modulus_poly or '-'} alpha={f.alpha}")

f4 = make_field(4)
print("in F_4, x * x =", gfq.mul(f4, 2, 2), "(the element x + 1)")

# u = x G_N; for q > 2 the inverse is not the transform itself
f = make_field(3)
x = np.array([1, 2, 0, 1, 2, 2, 0, 1])
u = polar_encode(f, x)
print("x         ", x)
print("u = x G_8 ", u)
print("inverse   ", polar_decode_transform(f, u))
print("re-encode ", polar_encode(f, u), "(not x)")

G, Ginv = explicit_gn(f, 4)
print("G_4 over F_3:\n", G)
