"""Compiled inner loops for the decoder."""
import math

import numpy as np
from numba import njit

LLR_CLAMP = 500.0
FLUSH = 300.0
PASS_OFFSETS = (0.0, 250.0, 500.0)


@njit(cache=True, inline="always")
def _exact_term(a, b, table, u):
    q = a.size
    m = -np.inf
    for v in range(q):
        t = a[table[u, v]] + b[v]
        if t > m:
            m = t
    s = 0.0
    for v in range(q):
        s += math.exp(a[table[u, v]] + b[v] - m)
    return math.log(s) + m


@njit(cache=True, fastmath={"reassoc", "contract"})
def _dot_sums(ea, eb, table, cyclic, ea2, ebr, todo, sums):
    """``sums[u] = sum_v ea[u - alpha v] eb[v]`` wherever ``todo[u]``."""
    q = ea.size
    if cyclic:
        for j in range(q):
            ea2[j] = ea[j]
            ea2[j + q] = ea[j]
            ebr[j] = eb[(q - j) % q]
        for u in range(q):
            if todo[u]:
                s = 0.0
                for j in range(q):
                    s += ea2[u + j] * ebr[j]
                sums[u] = s
    else:
        for u in range(q):
            if todo[u]:
                s = 0.0
                for v in range(q):
                    s += ea[table[u, v]] * eb[v]
                sums[u] = s


@njit(cache=True, nogil=True)
def odd_combine_rows(left, right, table, out, cyclic=False):
    """Log-domain ``sum_v L_left(u - a v) L_right(v)`` normalised to ``u = 0``.

    ``left``/``right``/``out`` are ``(R, q-1)``; ``table[u, v] = u - alpha*v``.
    ``cyclic`` asserts ``table[u, v] == (u - v) % q`` (prime field, alpha = 1).

    Inputs are shifted by their maxima and exponentiated once per pass, so
    the q^2 inner loop is multiply-add only.  Each pass scales both factors
    by ``e^c`` and flushes factors below e^-300 (after scaling) to zero, so
    products stay normal doubles.  A sum is accepted when the flushed mass
    cannot reach 1e-16 of it; unresolved outputs move to the next, larger
    ``c``, and anything left after the last pass gets an exact two-pass
    log-sum-exp.
    """
    R, k = left.shape
    q = k + 1
    a = np.empty(q)
    b = np.empty(q)
    ea = np.empty(q)
    eb = np.empty(q)
    acc = np.empty(q)
    sums = np.empty(q)
    ea2 = np.empty(2 * q)
    ebr = np.empty(q)
    todo = np.empty(q, dtype=np.bool_)
    for r in range(R):
        a[0] = 0.0
        b[0] = 0.0
        amax = 0.0
        bmax = 0.0
        for j in range(k):
            a[j + 1] = left[r, j]
            b[j + 1] = right[r, j]
            if left[r, j] > amax:
                amax = left[r, j]
            if right[r, j] > bmax:
                bmax = right[r, j]
        shift = amax + bmax
        for u in range(q):
            todo[u] = True
        left_over = q
        for c in PASS_OFFSETS:
            for j in range(q):
                d = a[j] - amax + c
                ea[j] = math.exp(d) if d > -FLUSH else 0.0
                d = b[j] - bmax + c
                eb[j] = math.exp(d) if d > -FLUSH else 0.0
            _dot_sums(ea, eb, table, cyclic, ea2, ebr, todo, sums)
            # flushed terms are < e^(c - FLUSH) each in scaled units
            accept = math.exp(c - FLUSH + 40.0)
            for u in range(q):
                if todo[u] and sums[u] > accept:
                    acc[u] = math.log(sums[u]) + shift - 2.0 * c
                    todo[u] = False
                    left_over -= 1
            if left_over == 0:
                break
        if left_over:
            for u in range(q):
                if todo[u]:
                    acc[u] = _exact_term(a, b, table, u)
        # clamp relative to the most likely symbol (see sc_decoder.clamp)
        top = acc[0]
        for u in range(1, q):
            if acc[u] > top:
                top = acc[u]
        ref = max(acc[0] - top, -LLR_CLAMP)
        for j in range(k):
            out[r, j] = max(acc[j + 1] - top, -LLR_CLAMP) - ref
    return out


@njit(cache=True, nogil=True)
def log_bhattacharyya_rows(llr, out):
    """``log sum_{a != a'} sqrt(L_a L_a')`` per row, implicit ``L_0 = 1``.

    Leave-one-out sums come from prefix/suffix log-sum-exp, so no
    cancellation happens when one component dominates.
    """
    R, k = llr.shape
    q = k + 1
    h = np.empty(q)
    pre = np.empty(q + 1)
    suf = np.empty(q + 1)
    for r in range(R):
        h[0] = 0.0
        for j in range(k):
            h[j + 1] = 0.5 * llr[r, j]
        pre[0] = -np.inf
        for j in range(q):
            pre[j + 1] = _lae(pre[j], h[j])
        suf[q] = -np.inf
        for j in range(q - 1, -1, -1):
            suf[j] = _lae(suf[j + 1], h[j])
        tot = -np.inf
        for j in range(q):
            tot = _lae(tot, h[j] + _lae(pre[j], suf[j + 1]))
        out[r] = tot
    return out


@njit(cache=True, inline="always")
def _lae(x, y):
    if x == -np.inf:
        return y
    if y == -np.inf:
        return x
    if x > y:
        return x + math.log1p(math.exp(y - x))
    return y + math.log1p(math.exp(x - y))
