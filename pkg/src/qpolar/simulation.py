"""Monte-Carlo error-rate measurement for the source and channel codecs.

Frames are processed in fixed chunks; chunk ``c`` draws everything from
``default_rng([seed, c])`` (and, for channel coding, reads the frozen stream
at a cursor fixed by ``c``), so counts do not depend on the worker count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import run_jobs
from .channel_codec import FrozenStream, channel_decode, channel_encode
from .construction import PolarCode
from .modem_awgn import Constellation, NoiseModel, init_llr, transmit
from .source_codec import JointSource, compress, decompress

FRAME_CHUNK = 16


@dataclass
class SimCounts:
    frames: int = 0
    symbols: int = 0
    symbol_errors: int = 0
    block_errors: int = 0

    def __add__(self, other: "SimCounts") -> "SimCounts":
        return SimCounts(self.frames + other.frames, self.symbols + other.symbols,
                         self.symbol_errors + other.symbol_errors, self.block_errors + other.block_errors)

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.symbols if self.symbols else 0.0

    @property
    def wer(self) -> float:
        return self.block_errors / self.frames if self.frames else 0.0


def _chunks(frames: int, chunk: int):
    return [(c, min(chunk, frames - s)) for c, s in enumerate(range(0, frames, chunk))]


def _total(parts) -> SimCounts:
    out = SimCounts()
    for p in parts:
        out = out + p
    return out


def _source_chunk(args):
    code, model, seed, c, n = args
    rng = np.random.default_rng([seed, c])
    x, y = model.sample(rng, (n, code.N))
    x_hat = decompress(code, compress(code, x), y, model)
    err = x_hat != x
    return SimCounts(n, x.size, int(err.sum()), int(err.any(axis=1).sum()))


def simulate_source(code: PolarCode, model: JointSource, frames: int, seed: int,
                    workers: int = 1, progress=None) -> SimCounts:
    """Compress and decompress ``frames`` blocks; errors counted on ``x``."""
    jobs = [(code, model, seed, c, n) for c, n in _chunks(frames, FRAME_CHUNK)]
    return _total(run_jobs(_source_chunk, jobs, workers, progress))


def _channel_chunk(args):
    code, const, nm, seed, c, n, axes = args
    rng = np.random.default_rng([seed, c])
    f, N, K = code.field, code.N, code.K
    rows = n * axes
    cursor = c * FRAME_CHUNK * axes * (N - K)
    s = rng.integers(0, f.q, size=(rows, K))
    x = channel_encode(code, s, FrozenStream(seed, f, cursor))
    y = transmit(const, x, nm, rng=rng)
    s_hat = channel_decode(code, init_llr(const, y, nm), FrozenStream(seed, f, cursor))
    err = (s_hat != s).reshape(n, axes, K).any(axis=1)
    return SimCounts(n, n * K, int(err.sum()), int(err.any(axis=1).sum()))


def simulate_channel(code: PolarCode, const: Constellation, nm: NoiseModel, frames: int, seed: int,
                     workers: int = 1, independent_axes: bool = False, progress=None) -> SimCounts:
    """Message symbol and frame errors over AWGN.

    ``independent_axes``: every frame is two codewords of a PAM code, one per
    quadrature axis over real noise; a symbol error is a message position
    wrong on either axis.
    """
    if const.q != code.field.q:
        raise ValueError(f"constellation has {const.q} points, code is over F_{code.field.q}")
    axes = 2 if independent_axes else 1
    if independent_axes and not nm.real:
        raise ValueError("independent-axis coding needs real (per-axis) noise")
    jobs = [(code, const, nm, seed, c, n, axes) for c, n in _chunks(frames, FRAME_CHUNK)]
    return _total(run_jobs(_channel_chunk, jobs, workers, progress))
