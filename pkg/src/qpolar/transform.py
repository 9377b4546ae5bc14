"""Extended polar transform ``u = x G_N`` and its inverse as butterfly networks.

Convention: ``u`` is in natural order.  The channel side ``x`` is in natural
codeword order as well; internally both directions route ``x`` through a
bit-reversal permutation, after which the butterflies pair entries ``j`` and
``j + h`` for ``h = N/2, N/4, ..., 1`` with the kernel

    u1 = x1 + alpha * x2,    u2 = x2.

This is the same wiring the SC decoder walks, so the decoder consumes
per-position channel LLRs in plain codeword order.
"""
from __future__ import annotations

import numpy as np

from .gfq import FieldSpec


class LengthNotPowerOfTwo(ValueError):
    pass


def log2_exact(N: int) -> int:
    N = int(N)
    if N < 1 or N & (N - 1):
        raise LengthNotPowerOfTwo(f"length {N} is not a power of two")
    return N.bit_length() - 1


_BR_CACHE: dict[int, np.ndarray] = {}


def bit_reversal(N: int) -> np.ndarray:
    """Permutation mapping index ``i`` to the n-bit reversal of ``i``."""
    n = log2_exact(N)
    if N not in _BR_CACHE:
        perm = np.zeros(N, dtype=np.int64)
        idx = np.arange(N)
        for k in range(n):
            perm |= ((idx >> k) & 1) << (n - 1 - k)
        perm.setflags(write=False)
        _BR_CACHE[N] = perm
    return _BR_CACHE[N]


def _butterflies(f: FieldSpec, v: np.ndarray, inverse: bool) -> np.ndarray:
    N = v.shape[-1]
    lead = v.shape[:-1]
    h = N // 2
    a_scaled = f.mul_table[f.alpha]
    while h >= 1:
        blocks = v.reshape(lead + (N // (2 * h), 2, h))
        top, bot = blocks[..., 0, :], blocks[..., 1, :]
        if inverse:
            blocks[..., 0, :] = f.sub_table[top, a_scaled[bot]]
        else:
            blocks[..., 0, :] = f.add_table[top, a_scaled[bot]]
        h //= 2
    return v


def polar_encode(f: FieldSpec, x) -> np.ndarray:
    """Return ``u = x G_N``; works on the last axis of ``x``."""
    x = np.asarray(x)
    perm = bit_reversal(x.shape[-1])
    return _butterflies(f, x[..., perm].astype(np.int64), inverse=False)


def polar_decode_transform(f: FieldSpec, u) -> np.ndarray:
    """Return ``x = u G_N^{-1}`` by running the inverse kernels.

    For q > 2 this differs from re-encoding.
    """
    u = np.asarray(u)
    perm = bit_reversal(u.shape[-1])
    v = _butterflies(f, u.astype(np.int64, copy=True), inverse=True)
    return v[..., perm]


def half_transform_inverse(f: FieldSpec, u) -> np.ndarray:
    """Inverse butterflies without the output permutation (decoder-internal order)."""
    u = np.asarray(u)
    log2_exact(u.shape[-1])
    return _butterflies(f, u.astype(np.int64, copy=True), inverse=True)
