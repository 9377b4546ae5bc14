"""Finite field arithmetic over GF(q), q = p**m <= 1024.

Elements are dense integers in ``[0, q)``.  For extension fields the integer
``c_0 + c_1 p + ... + c_{m-1} p**(m-1)`` stands for the polynomial
``c_0 + c_1 x + ... + c_{m-1} x**(m-1)`` reduced modulo a fixed irreducible
polynomial from :data:`CANONICAL_MODULI`.

All arithmetic goes through precomputed ``q x q`` tables, so the module level
helpers accept scalars or numpy arrays alike.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

MAX_ORDER = 1024

# Smallest monic irreducible polynomial of degree m over F_p, scanning the
# integer encoding sum(c_k p**k) upwards.  Coefficients are listed from the
# constant term to the leading 1.
CANONICAL_MODULI: dict[int, tuple[int, ...]] = {
    4: (1, 1, 1),
    8: (1, 1, 0, 1),
    9: (1, 0, 1),
    16: (1, 1, 0, 0, 1),
    25: (2, 0, 1),
    27: (1, 2, 0, 1),
    32: (1, 0, 1, 0, 0, 1),
    49: (1, 0, 1),
    64: (1, 1, 0, 0, 0, 0, 1),
    81: (2, 1, 0, 0, 1),
    121: (1, 0, 1),
    125: (1, 1, 0, 1),
    128: (1, 1, 0, 0, 0, 0, 0, 1),
    169: (2, 0, 1),
    243: (1, 2, 0, 0, 0, 1),
    256: (1, 1, 0, 1, 1, 0, 0, 0, 1),
    289: (3, 0, 1),
    343: (2, 0, 0, 1),
    361: (1, 0, 1),
    512: (1, 1, 0, 0, 0, 0, 0, 0, 0, 1),
    529: (1, 0, 1),
    625: (2, 0, 0, 0, 1),
    729: (2, 1, 0, 0, 0, 0, 1),
    841: (2, 0, 1),
    961: (1, 0, 1),
    1024: (1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1),
}


class NotPrimePower(ValueError):
    pass


class NoPolynomial(ValueError):
    pass


class ZeroElement(ValueError):
    pass


def factor_prime_power(q: int) -> tuple[int, int]:
    """Return ``(p, m)`` with ``q == p**m``, or raise :class:`NotPrimePower`."""
    if q < 2:
        raise NotPrimePower(f"q={q} is not a prime power")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    m, r = 0, q
    while r % p == 0:
        r //= p
        m += 1
    if r != 1:
        raise NotPrimePower(f"q={q} is not a prime power")
    return p, m


def _poly_rem(a, b, p):
    a = list(a)
    inv_lead = pow(b[-1], -1, p)
    while len(a) >= len(b):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(b)
        for k, bk in enumerate(b):
            a[shift + k] = (a[shift + k] - c * bk) % p
        while a and a[-1] == 0:
            a.pop()
    return a


def is_irreducible(poly, p: int) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2."""
    m = len(poly) - 1
    if m < 1 or poly[-1] % p == 0:
        return False
    for d in range(1, m // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            if not _poly_rem(poly, list(low) + [1], p):
                return False
    return True


def _digits(a: int, p: int, m: int) -> list[int]:
    return [(a // p**k) % p for k in range(m)]


def _undigits(d, p: int) -> int:
    return sum(int(c) * p**k for k, c in enumerate(d))


def slow_add(p: int, m: int, a: int, b: int) -> int:
    """Digit-wise addition mod p, without tables."""
    return _undigits([(x + y) % p for x, y in zip(_digits(a, p, m), _digits(b, p, m))], p)


def slow_mul(p: int, m: int, modulus, a: int, b: int) -> int:
    """Schoolbook polynomial product reduced by ``modulus``, without tables."""
    if m == 1:
        return a * b % p
    da, db = _digits(a, p, m), _digits(b, p, m)
    prod = [0] * (2 * m - 1)
    for i, x in enumerate(da):
        for j, y in enumerate(db):
            prod[i + j] = (prod[i + j] + x * y) % p
    while prod and prod[-1] == 0:
        prod.pop()
    rem = _poly_rem(prod, list(modulus), p) if len(prod) > m else prod
    return _undigits(rem, p)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """Immutable description of GF(q) with its arithmetic tables."""

    q: int
    p: int
    m: int
    modulus_poly: tuple[int, ...]
    alpha: int
    add_table: np.ndarray = field(repr=False)
    mul_table: np.ndarray = field(repr=False)
    sub_table: np.ndarray = field(repr=False)
    neg: np.ndarray = field(repr=False)
    inv: np.ndarray = field(repr=False)

    @property
    def is_prime(self) -> bool:
        return self.m == 1

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and (self.q, self.modulus_poly, self.alpha) == (
            other.q, other.modulus_poly, other.alpha)

    def __hash__(self):
        return hash((self.q, self.modulus_poly, self.alpha))


def _tables(q, p, m, modulus):
    dt = np.int16 if q <= 2**15 else np.int32
    elems = np.arange(q)
    digits = np.stack([(elems // p**k) % p for k in range(m)], axis=-1)
    weights = p ** np.arange(m)
    add = ((digits[:, None, :] + digits[None, :, :]) % p) @ weights
    if m == 1:
        mul = np.outer(elems, elems) % p
    else:
        mul = np.empty((q, q), dtype=np.int64)
        # multiplication by x, one row at a time: row a*x^k built from row a*x^(k-1)
        xmul = np.array([slow_mul(p, m, modulus, a, p) for a in range(q)])
        # table for multiplying a by each basis monomial
        basis = [elems.copy()]
        for _ in range(1, m):
            basis.append(xmul[basis[-1]])
        for b in range(q):
            acc = np.zeros(q, dtype=np.int64)
            for k, c in enumerate(_digits(b, p, m)):
                for _ in range(c):
                    acc = add[acc, basis[k]]
            mul[:, b] = acc
    neg = np.array([int(np.flatnonzero(add[a] == 0)[0]) for a in range(q)])
    inv = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        inv[a] = int(np.flatnonzero(mul[a] == 1)[0])
    sub = add[:, neg]
    return (add.astype(dt), mul.astype(dt), sub.astype(dt), neg.astype(dt), inv.astype(dt))


def multiplicative_order(mul_table: np.ndarray, a: int) -> int:
    if a == 0:
        raise ZeroElement("0 has no multiplicative order")
    k, x = 1, int(a)
    while x != 1:
        x = int(mul_table[x, a])
        k += 1
    return k


_CACHE: dict[int, FieldSpec] = {}


def make_field(q: int) -> FieldSpec:
    """Build GF(q) with the canonical modulus and transform constant.

    For prime q the constant is 1; otherwise it is the smallest integer whose
    multiplicative order is q - 1.  Results are cached per q.
    """
    q = int(q)
    if q in _CACHE:
        return _CACHE[q]
    p, m = factor_prime_power(q)
    if q > MAX_ORDER:
        raise NoPolynomial(f"fields larger than {MAX_ORDER} are not supported")
    modulus: tuple[int, ...] = ()
    if m > 1:
        modulus = CANONICAL_MODULI[q]
        if not is_irreducible(modulus, p):
            raise NoPolynomial(f"canonical modulus for q={q} is reducible")
    add, mul, sub, neg, inv = _tables(q, p, m, modulus)
    if m == 1:
        alpha = 1
    else:
        alpha = next(a for a in range(2, q) if multiplicative_order(mul, a) == q - 1)
    f = FieldSpec(q, p, m, modulus, alpha, *(_readonly(t) for t in (add, mul, sub, neg, inv)))
    _CACHE[q] = f
    return f


def add(f: FieldSpec, a, b):
    return f.add_table[a, b]


def sub(f: FieldSpec, a, b):
    return f.sub_table[a, b]


def mul(f: FieldSpec, a, b):
    return f.mul_table[a, b]


def neg(f: FieldSpec, a):
    return f.neg[a]


def inverse(f: FieldSpec, a):
    if np.any(np.asarray(a) == 0):
        raise ZeroElement("0 has no inverse")
    return f.inv[a]


def is_primitive(f: FieldSpec, a: int) -> bool:
    """True iff ``a`` generates the multiplicative group (exhaustive powering)."""
    if a == 0:
        raise ZeroElement("is_primitive is undefined for 0")
    return multiplicative_order(f.mul_table, a) == f.q - 1


def matvec(f: FieldSpec, x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Row vector(s) ``x`` times matrix ``g`` over GF(q)."""
    x = np.asarray(x)
    out = np.zeros(x.shape[:-1] + (g.shape[1],), dtype=np.int64)
    for k in range(g.shape[0]):
        out = f.add_table[out, f.mul_table[x[..., k, None], g[k]]]
    return out
