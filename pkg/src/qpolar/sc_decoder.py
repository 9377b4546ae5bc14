"""Successive-cancellation decoding over GF(q) with log-domain LR vectors.

An LLR vector has ``q - 1`` entries; entry ``k - 1`` is
``log P(k | .) / P(0 | .)`` for the field element with integer code ``k``.
The zero element's entry is implicitly 0.  Every function here works on the
last axis and broadcasts over any leading batch axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .gfq import FieldSpec
from .transform import bit_reversal, log2_exact

LLR_CLAMP = _kernels.LLR_CLAMP


class FrozenSetInvalid(ValueError):
    pass


def clamp(llr: np.ndarray) -> np.ndarray:
    """Bound every component to +-500 without moving the decision.

    The full vector (with the implicit 0) is shifted so its maximum is 0,
    floored at -500 and re-referenced to symbol 0.  Clipping each component
    on its own would turn large, distinct LLRs into ties.
    """
    llr = np.asarray(llr, dtype=float)
    top = np.maximum(llr.max(axis=-1, keepdims=True), 0.0)
    ref = np.maximum(-top, -LLR_CLAMP)
    return np.maximum(llr - top, -LLR_CLAMP) - ref


def with_zero(llr: np.ndarray) -> np.ndarray:
    """Prepend the implicit 0 entry so index == field element."""
    llr = np.asarray(llr, dtype=float)
    return np.concatenate([np.zeros(llr.shape[:-1] + (1,)), llr], axis=-1)


_ODD_TABLES: dict[FieldSpec, np.ndarray] = {}


def _odd_table(f: FieldSpec) -> np.ndarray:
    t = _ODD_TABLES.get(f)
    if t is None:
        u = np.arange(f.q)
        t = f.sub_table[u[:, None], f.mul_table[f.alpha, u][None, :]].astype(np.int64)
        _ODD_TABLES[f] = t
    return t


def lr_combine_odd(f: FieldSpec, left, right) -> np.ndarray:
    """LR vector of ``a + alpha*b`` from independent LR vectors of ``a`` and ``b``.

    ``out[u] = log sum_v L_left(u - alpha v) L_right(v) - (same at u = 0)``,
    exact log-sum-exp over the q terms, clamped to +-500.
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    shape = np.broadcast_shapes(left.shape, right.shape)
    k = f.q - 1
    lf = np.ascontiguousarray(np.broadcast_to(left, shape)).reshape(-1, k)
    rf = np.ascontiguousarray(np.broadcast_to(right, shape)).reshape(-1, k)
    out = np.empty_like(lf)
    _kernels.odd_combine_rows(lf, rf, _odd_table(f), out, f.m == 1 and f.alpha == 1)
    return out.reshape(shape)


def lr_combine_even(f: FieldSpec, left, right, u_prev) -> np.ndarray:
    """LR vector of ``b`` once ``a + alpha*b = u_prev`` has been decided.

    ``out[u] = l_left(u_prev - alpha u) - l_left(u_prev) + l_right(u)``.
    """
    full = with_zero(left)
    u_prev = np.broadcast_to(np.asarray(u_prev, dtype=np.int64), full.shape[:-1])
    nz = f.mul_table[f.alpha, np.arange(1, f.q)]
    idx = f.sub_table[u_prev[..., None], nz].astype(np.int64)
    ref = np.take_along_axis(full, u_prev[..., None], -1)
    out = np.take_along_axis(full, idx, -1) - ref + np.asarray(right, dtype=float)
    return clamp(out)


def detect(llr) -> np.ndarray:
    """Hard decision: element of the largest entry if that entry is > 0, else 0.

    Ties go to the lowest element; a maximum of exactly 0 yields 0.
    """
    llr = np.asarray(llr, dtype=float)
    best = np.argmax(llr, axis=-1)
    top = np.take_along_axis(llr, best[..., None], -1)[..., 0]
    return np.where(top > 0, best + 1, 0).astype(np.int64)


@dataclass
class FrozenPolicy:
    """Frozen positions and the values to use there.

    ``values`` has shape ``(..., len(frozen_set))``; entry ``j`` is the value
    at ``frozen_set[j]``.  ``source`` records where values came from
    (``"explicit"``, ``"stream"`` or ``"genie"``).
    """

    N: int
    frozen_set: np.ndarray
    values: np.ndarray
    source: str = "explicit"

    def __post_init__(self):
        fs = np.asarray(self.frozen_set, dtype=np.int64).reshape(-1)
        if fs.size and (fs.min() < 0 or fs.max() >= self.N):
            raise FrozenSetInvalid("frozen index out of range")
        if np.any(np.diff(fs) <= 0):
            raise FrozenSetInvalid("frozen indices must be strictly increasing")
        vals = np.asarray(self.values, dtype=np.int64)
        if vals.shape[-1:] != (fs.size,) and not (fs.size == 0 and vals.size == 0):
            raise FrozenSetInvalid(
                f"{fs.size} frozen positions but {vals.shape[-1] if vals.ndim else 0} values")
        self.frozen_set = fs
        self.values = vals

    @classmethod
    def genie(cls, u) -> "FrozenPolicy":
        u = np.asarray(u, dtype=np.int64)
        return cls(u.shape[-1], np.arange(u.shape[-1]), u, source="genie")

    @property
    def info_set(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[self.frozen_set] = False
        return np.flatnonzero(mask)

    def full_values(self, batch: int) -> tuple[np.ndarray, np.ndarray]:
        mask = np.zeros(self.N, dtype=bool)
        mask[self.frozen_set] = True
        vals = np.zeros((batch, self.N), dtype=np.int64)
        if self.frozen_set.size:
            v = self.values.reshape(-1, self.frozen_set.size)
            if v.shape[0] not in (1, batch):
                raise FrozenSetInvalid(f"frozen values for {v.shape[0]} frames, decoding {batch}")
            vals[:, self.frozen_set] = v
        return mask, vals


@dataclass
class DecoderWorkspace:
    """Full (level, position) lattice of LLR vectors and decided symbols.

    Level ``n`` holds the channel LLRs in bit-reversed order, level 0 the
    synthesized LR vectors of ``u_1 .. u_N``.  Each slot is written once.
    """

    llr_lattice: np.ndarray
    symbol_lattice: np.ndarray
    writes: np.ndarray = field(repr=False)

    @classmethod
    def allocate(cls, batch: int, N: int, q: int) -> "DecoderWorkspace":
        n = log2_exact(N)
        return cls(np.full((n + 1, batch, N, q - 1), np.nan),
                   np.full((n + 1, batch, N), -1, dtype=np.int64),
                   np.zeros((2, n + 1, N), dtype=np.int64))

    def put_llr(self, level, lo, values):
        self.llr_lattice[level, :, lo:lo + values.shape[1]] = values
        self.writes[0, level, lo:lo + values.shape[1]] += 1

    def put_symbols(self, level, lo, values):
        self.symbol_lattice[level, :, lo:lo + values.shape[1]] = values
        self.writes[1, level, lo:lo + values.shape[1]] += 1


@dataclass
class SCResult:
    u_hat: np.ndarray
    x_hat: np.ndarray
    leaf_llr: np.ndarray
    peak_llr_cells: int
    workspace: DecoderWorkspace | None = None


def sc_decode(f: FieldSpec, init, frozen: FrozenPolicy, record: bool = False) -> SCResult:
    """Successive-cancellation decode of one codeword or a batch.

    Parameters
    ----------
    f : FieldSpec
    init : array, shape ``(N, q-1)`` or ``(B, N, q-1)``
        Per-position channel LLR vectors in codeword order; the bit-reversal
        onto the rightmost butterflies happens here.
    frozen : FrozenPolicy
        Positions whose values are imposed rather than detected.
    record : bool
        Keep the full lattice in ``result.workspace`` (tests and diagnostics).

    Returns
    -------
    SCResult
        ``u_hat``, ``x_hat = u_hat G_N^{-1}`` and the LR vector used at every
        index (``leaf_llr``), all with the batch shape of ``init``.
    """
    init = np.asarray(init, dtype=float)
    single = init.ndim == 2
    if single:
        init = init[None]
    B, N, k = init.shape
    if k != f.q - 1:
        raise ValueError(f"LLR vectors have {k} entries, expected {f.q - 1}")
    n = log2_exact(N)
    if frozen.N != N:
        raise FrozenSetInvalid(f"policy is for N={frozen.N}, init has N={N}")
    mask, fvals = frozen.full_values(B)
    perm = bit_reversal(N)
    amul = f.mul_table[f.alpha].astype(np.int64)
    sub = f.sub_table
    leaf_llr = np.empty((B, N, k))
    u_hat = np.empty((B, N), dtype=np.int64)
    ws = DecoderWorkspace.allocate(B, N, f.q) if record else None
    live = [0, 0]

    def node(level, lo, lam):
        if level == 0:
            leaf = lam[:, 0]
            leaf_llr[:, lo] = leaf
            u = fvals[:, lo] if mask[lo] else detect(leaf)
            u_hat[:, lo] = u
            if ws is not None:
                ws.put_symbols(0, lo, u[:, None])
            return u[:, None]
        h = 1 << (level - 1)
        a, b = lam[:, :h], lam[:, h:]
        left = lr_combine_odd(f, a, b)
        _grow(live, 2 * h)
        if ws is not None:
            ws.put_llr(level - 1, lo, left)
        w = node(level - 1, lo, left)
        right = lr_combine_even(f, a, b, w)
        if ws is not None:
            ws.put_llr(level - 1, lo + h, right)
        z = node(level - 1, lo + h, right)
        live[0] -= 2 * h
        x = np.concatenate([sub[w, amul[z]], z], axis=1).astype(np.int64)
        if ws is not None:
            ws.put_symbols(level, lo, x)
        return x

    chan = clamp(init[:, perm])
    live[:] = [N, N]
    if ws is not None:
        ws.put_llr(n, 0, chan)
    xp = node(n, 0, chan)
    x_hat = xp[:, perm]
    out = SCResult(u_hat, x_hat, leaf_llr, live[1] * k, ws)
    if single:
        out.u_hat, out.x_hat, out.leaf_llr = u_hat[0], x_hat[0], leaf_llr[0]
    return out


def _grow(live, cells):
    live[0] += cells
    live[1] = max(live[1], live[0])
