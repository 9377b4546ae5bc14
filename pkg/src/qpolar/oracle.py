"""Brute-force reference computations used to check the fast paths.

Nothing here calls into :mod:`qpolar.transform` or :mod:`qpolar.sc_decoder`:
the transform matrix is built from its defining recursion, inverted by
Gauss-Jordan elimination, and posteriors come from full enumeration of
``x`` in ``F_q^N``.
"""
from __future__ import annotations

import numpy as np

from .gfq import FieldSpec, matvec

DEFAULT_BUDGET = 2_000_000


class TooLarge(ValueError):
    pass


def _check_pow2(N):
    if N < 1 or N & (N - 1):
        raise ValueError(f"length {N} is not a power of two")


def reversed_bits(N: int) -> np.ndarray:
    _check_pow2(N)
    n = N.bit_length() - 1
    if n == 0:
        return np.zeros(1, dtype=np.int64)
    return np.array([int(format(i, f"0{n}b")[::-1], 2) for i in range(N)])


def gn_matrix(f: FieldSpec, N: int) -> np.ndarray:
    """G_N with ``u = x G_N`` from the two-half recursion.

    ``u[2i] = s[i] + alpha t[i]``, ``u[2i+1] = t[i]`` where ``s``/``t`` are the
    half-length transforms of the first/second half of ``x``.
    """
    _check_pow2(N)
    if N == 1:
        return np.ones((1, 1), dtype=np.int64)
    g = gn_matrix(f, N // 2)
    h = N // 2
    G = np.zeros((N, N), dtype=np.int64)
    G[:h, 0::2] = g
    G[h:, 0::2] = f.mul_table[f.alpha, g]
    G[h:, 1::2] = g
    return G


def gf_inverse_matrix(f: FieldSpec, A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    M = np.concatenate([A.astype(np.int64), np.eye(n, dtype=np.int64)], axis=1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r, c] != 0), None)
        if piv is None:
            raise np.linalg.LinAlgError("matrix is singular over the field")
        M[[c, piv]] = M[[piv, c]]
        M[c] = f.mul_table[f.inv[M[c, c]], M[c]]
        for r in range(n):
            if r != c and M[r, c] != 0:
                M[r] = f.sub_table[M[r], f.mul_table[M[r, c], M[c]]]
    return M[:, n:]


def explicit_gn(f: FieldSpec, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(G_N, G_N^{-1})`` and check their product is the identity."""
    if N > 64:
        raise TooLarge("explicit matrices are limited to N <= 64")
    G = gn_matrix(f, N)
    Ginv = gf_inverse_matrix(f, G)
    if not np.array_equal(matvec(f, G, Ginv), np.eye(N, dtype=np.int64)):
        raise AssertionError("G_N G_N^{-1} != I")
    return G, Ginv


def all_words(q: int, N: int) -> np.ndarray:
    """Every vector of F_q^N, first coordinate varying slowest."""
    return np.indices((q,) * N).reshape(N, -1).T.copy()


class Enumeration:
    """Exact joint posterior of ``x`` (and ``u = x G_N``) for one observation.

    ``logp[j, a]`` is ``log P(x_j = a, y_j)`` up to a per-position constant.
    """

    def __init__(self, f: FieldSpec, logp, budget: int = DEFAULT_BUDGET):
        logp = np.asarray(logp, dtype=float)
        N = logp.shape[0]
        if f.q**N > budget:
            raise TooLarge(f"q^N = {f.q**N} exceeds budget {budget}")
        self.f, self.N = f, N
        self.x = all_words(f.q, N)
        lw = logp[np.arange(N), self.x].sum(axis=1)
        w = np.exp(lw - lw.max())
        self.prob = w / w.sum()
        self.G, self.Ginv = explicit_gn(f, N)
        self.u = matvec(f, self.x, self.G)
        self._v = {}

    def _prefix_mask(self, prefix):
        prefix = np.asarray(prefix, dtype=np.int64)
        if prefix.size == 0:
            return np.ones(len(self.prob), dtype=bool)
        return np.all(self.u[:, :prefix.size] == prefix, axis=1)

    def posterior(self, i: int, prefix) -> np.ndarray:
        """``P(u_i | y, u_0..u_{i-1} = prefix)`` over F_q (0-based ``i``)."""
        m = self._prefix_mask(prefix)
        p = np.bincount(self.u[m, i], weights=self.prob[m], minlength=self.f.q)
        return p / p.sum()

    def _channel_side(self, level: int) -> np.ndarray:
        """``rev(u_block G_M^{-1})`` for every size-``2**level`` block, side by side."""
        if level not in self._v:
            M = 1 << level
            _, Ginv = explicit_gn(self.f, M)
            blocks = self.u.reshape(len(self.u), self.N // M, M)
            self._v[level] = matvec(self.f, blocks, Ginv)[..., reversed_bits(M)].reshape(len(self.u), self.N)
        return self._v[level]

    def node_posterior(self, level: int, lo: int, prefix) -> np.ndarray:
        """Marginals of the sub-block channel-side symbols seen by the decoder.

        The block covers ``u[lo:lo+M]``, ``M = 2**level``; its channel-side
        vector is ``v = rev(u_block G_M^{-1})``.  Returns ``(M, q)``
        probabilities conditioned on ``u[:lo] = prefix``.
        """
        M = 1 << level
        q = self.f.q
        m = self._prefix_mask(np.asarray(prefix)[:lo])
        v = self._channel_side(level)[m, lo:lo + M]
        key = (np.arange(M) * q + v).ravel()
        w = np.repeat(self.prob[m], M)
        out = np.bincount(key, weights=w, minlength=M * q).reshape(M, q)
        return out / out.sum(axis=1, keepdims=True)


def exact_posterior(f: FieldSpec, logp, i: int, u_prefix, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """``P_N^{(i)}(. | y, u_prefix)`` by enumerating every ``x``."""
    return Enumeration(f, logp, budget).posterior(i, u_prefix)


def posterior_llr(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lp = np.log(p)
    return lp[..., 1:] - lp[..., :1]


def _boxplus(a, b):
    return (np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
            + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b))))


def binary_reference_sc(init_llrs, frozen_mask, frozen_values=None) -> np.ndarray:
    """Textbook binary SC decoder with scalar LLRs and the exact box-plus rule.

    ``init_llrs[..., j] = log P(x_j = 1) / P(x_j = 0)`` (the q=2 LLR vector
    convention).  Internally works with ``log P0/P1``.  Returns ``u_hat``.
    """
    llr = np.asarray(init_llrs, dtype=float)
    single = llr.ndim == 1
    llr = np.atleast_2d(llr)
    B, N = llr.shape
    frozen_mask = np.asarray(frozen_mask, dtype=bool)
    fv = np.zeros((B, N), dtype=np.int64)
    if frozen_values is not None:
        fv[:] = np.asarray(frozen_values, dtype=np.int64)
    u = np.zeros((B, N), dtype=np.int64)

    def rec(L, lo):
        M = L.shape[1]
        if M == 1:
            d = fv[:, lo] if frozen_mask[lo] else (L[:, 0] < 0).astype(np.int64)
            u[:, lo] = d
            return d[:, None]
        h = M // 2
        a, b = L[:, :h], L[:, h:]
        w = rec(_boxplus(a, b), lo)
        z = rec(b + (1 - 2 * w) * a, lo + h)
        return np.concatenate([w ^ z, z], axis=1)

    rec(-llr[:, reversed_bits(N)], 0)
    return u[0] if single else u
