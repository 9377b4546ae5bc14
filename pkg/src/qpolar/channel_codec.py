"""Channel coding by the inverse transform.

The message fills ``u`` on the information set (ascending index), a seeded
pseudorandom stream fills the frozen positions, and the transmitted word is
``x = u G_N^{-1}``.  The receiver replays the same stream as frozen values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construction import PolarCode
from .gfq import FieldSpec
from .sc_decoder import FrozenPolicy, sc_decode
from .transform import polar_decode_transform

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


class MessageLengthMismatch(ValueError):
    pass


class FrameFormatError(ValueError):
    pass


def splitmix64(seed: int, index) -> np.ndarray:
    """SplitMix64 output for counter ``index`` of stream ``seed`` (uint64)."""
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (idx + np.uint64(1)) * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


@dataclass
class FrozenStream:
    """Counter-based symbol stream: symbol ``k`` is ``floor(h_k[63:32] * q / 2^32)``.

    ``h_k = splitmix64(seed, k)``.  Random access via :meth:`at`; :meth:`take`
    reads from ``cursor`` and advances it.
    """

    seed: int
    field: FieldSpec
    cursor: int = 0

    def at(self, index) -> np.ndarray:
        h = splitmix64(self.seed, index) >> np.uint64(32)
        return ((h * np.uint64(self.field.q)) >> np.uint64(32)).astype(np.int64)

    def take(self, n: int) -> np.ndarray:
        out = self.at(np.arange(self.cursor, self.cursor + n, dtype=np.uint64))
        self.cursor += n
        return out


def _frozen_block(code: PolarCode, stream: FrozenStream, frames: int) -> np.ndarray:
    F = code.N - code.K
    return stream.take(frames * F).reshape(frames, F)


def channel_encode(code: PolarCode, s, stream: FrozenStream) -> np.ndarray:
    """Codewords for messages ``s`` of shape ``(K,)`` or ``(B, K)``.

    Frame ``b`` of a batch takes the next ``N - K`` stream symbols, in order.
    """
    s = np.asarray(s, dtype=np.int64)
    single = s.ndim == 1
    s = np.atleast_2d(s)
    if s.shape[-1] != code.K:
        raise MessageLengthMismatch(f"message has {s.shape[-1]} symbols, code carries {code.K}")
    if np.any((s < 0) | (s >= code.field.q)):
        raise ValueError("message symbols outside the field")
    B = s.shape[0]
    u = np.empty((B, code.N), dtype=np.int64)
    u[:, code.info_set] = s
    u[:, code.frozen_set] = _frozen_block(code, stream, B)
    x = polar_decode_transform(code.field, u)
    return x[0] if single else x


def channel_decode(code: PolarCode, init, stream: FrozenStream, *, return_result: bool = False):
    """Message estimates from per-position LLR vectors (codeword order).

    ``init`` is ``(N, q-1)`` or ``(B, N, q-1)``; the stream must be at the
    same cursor the encoder had.
    """
    init = np.asarray(init, dtype=float)
    single = init.ndim == 2
    B = 1 if single else init.shape[0]
    vals = _frozen_block(code, stream, B)
    res = sc_decode(code.field, init, FrozenPolicy(code.N, code.frozen_set, vals[0] if single else vals,
                                                   source="stream"))
    s_hat = res.u_hat[..., code.info_set]
    return (s_hat, res) if return_result else s_hat


def noiseless_llr(q: int, x, strength: float = 500.0) -> np.ndarray:
    """Delta LLR vectors pointing at ``x``."""
    x = np.asarray(x, dtype=np.int64)
    full = np.full(x.shape + (q,), -strength)
    np.put_along_axis(full, x[..., None], 0.0, -1)
    return full[..., 1:] - full[..., :1]


# frame I/O ---------------------------------------------------------------

def _width(q: int) -> int:
    return max(1, -(-(q - 1).bit_length() // 4))


def format_frames(frames, q: int) -> str:
    """One frame per line, each symbol as fixed-width lowercase hex."""
    frames = np.atleast_2d(np.asarray(frames, dtype=np.int64))
    w = _width(q)
    return "".join("".join(f"{v:0{w}x}" for v in row) + "\n" for row in frames)


def parse_frames(text: str, q: int) -> np.ndarray:
    w = _width(q)
    rows = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if len(line) % w:
            raise FrameFormatError(f"line {n}: length {len(line)} is not a multiple of {w}")
        try:
            row = [int(line[i:i + w], 16) for i in range(0, len(line), w)]
        except ValueError:
            raise FrameFormatError(f"line {n}: not hex") from None
        if max(row) >= q:
            raise FrameFormatError(f"line {n}: symbol outside F_{q}")
        rows.append(row)
    if len({len(r) for r in rows}) > 1:
        raise FrameFormatError("frames have different lengths")
    return np.array(rows, dtype=np.int64).reshape(len(rows), -1)
