"""Lossless compression of a q-ary source with decoder side information.

The compressed block is ``u`` restricted to the frozen (high-entropy)
positions; decompression runs SC decoding with those positions imposed and
maps ``u_hat`` back through the inverse transform.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import lsq_linear

from .construction import PolarCode, TabularJoint, error_bound, safe_log
from .sc_decoder import FrozenPolicy, clamp, sc_decode
from .transform import polar_encode

__all__ = ["JointSource", "CompressedBlock", "compress", "decompress", "error_bound",
           "derive_p_y", "paper_source", "CodeMismatch", "BlockLengthMismatch",
           "ZeroProbabilitySymbol", "SourceFileError"]


class CodeMismatch(ValueError):
    pass


class BlockLengthMismatch(ValueError):
    pass


class ZeroProbabilitySymbol(ValueError):
    pass


class SourceFileError(ValueError):
    pass


def derive_p_y(p_x, p_x_given_y):
    """Least-squares ``P(Y)`` on the simplex from ``P_X = sum_y P(X|y) P(y)``.

    Returns ``(p_y, residual)`` where residual is the max abs mismatch.
    """
    p_x = np.asarray(p_x, dtype=float)
    A = np.asarray(p_x_given_y, dtype=float).T          # A[x, y]
    ny = A.shape[1]
    # sum-to-one enforced as a heavily weighted extra row
    w = 1e4
    A_aug = np.vstack([A, w * np.ones(ny)])
    b_aug = np.concatenate([p_x, [w]])
    p_y = lsq_linear(A_aug, b_aug, bounds=(0, 1), method="bvls", tol=1e-15).x
    p_y = p_y / p_y.sum()
    return p_y, float(np.abs(A @ p_y - p_x).max())


@dataclass
class JointSource:
    """Joint distribution of a source ``X`` in F_q and side information ``Y``.

    ``p_x_given_y[y, x] = P(X = x | Y = y)``.  When ``p_y`` is omitted it is
    recovered from ``p_x`` with :func:`derive_p_y`.
    """

    p_x: np.ndarray
    p_x_given_y: np.ndarray
    p_y: np.ndarray | None = None

    def __post_init__(self):
        self.p_x = np.asarray(self.p_x, dtype=float)
        self.p_x_given_y = np.asarray(self.p_x_given_y, dtype=float)
        if self.p_x_given_y.shape[1] != self.p_x.size:
            raise ValueError("conditional table must have q columns")
        for name, rows in (("p_x", self.p_x[None]), ("p_x_given_y", self.p_x_given_y)):
            if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1) > 1e-12):
                raise ValueError(f"{name} rows must be probability vectors")
        self.residual = 0.0
        if self.p_y is None:
            self.p_y, self.residual = derive_p_y(self.p_x, self.p_x_given_y)
        else:
            self.p_y = np.asarray(self.p_y, dtype=float)
            self.residual = float(np.abs(self.p_x_given_y.T @ self.p_y - self.p_x).max())
        self._tab = TabularJoint((self.p_y[:, None] * self.p_x_given_y).T)

    @property
    def q(self) -> int:
        return self.p_x.size

    @property
    def ny(self) -> int:
        return self.p_y.size

    @property
    def joint(self) -> np.ndarray:
        return self._tab.joint

    def conditional_entropy(self, base: float = 2.0) -> float:
        """``H(X | Y)`` in units of ``log(base)``."""
        P = self.p_x_given_y
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -np.where(P > 0, P * np.log(P), 0.0).sum(axis=1)
        return float(self.p_y @ h / np.log(base))

    def sample(self, rng, shape):
        return self._tab.sample(rng, shape)

    def llr(self, y) -> np.ndarray:
        """Initial LR vectors ``log P(u | y) - log P(0 | y)``; log-probs floored at -500."""
        y = np.asarray(y)
        lp = safe_log(self.p_x_given_y)
        return clamp(lp[y, 1:] - lp[y, :1])

    # text format --------------------------------------------------------
    def dumps(self) -> str:
        lines = ["qpolar-source 1", f"q {self.q}", f"ny {self.ny}",
                 "px " + " ".join(repr(float(v)) for v in self.p_x)]
        for x in range(self.q):
            lines.append(f"cond {x} " + " ".join(repr(float(v)) for v in self.p_x_given_y[:, x]))
        lines.append("py " + " ".join(repr(float(v)) for v in self.p_y))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "JointSource":
        rows = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
        rows = [r for r in rows if r]
        if not rows or rows[0] != ["qpolar-source", "1"]:
            raise SourceFileError("missing 'qpolar-source 1' header")
        q = ny = None
        px = py = None
        cond = {}
        try:
            for r in rows[1:]:
                key, vals = r[0], r[1:]
                if key == "q":
                    q = int(vals[0])
                elif key == "ny":
                    ny = int(vals[0])
                elif key == "px":
                    px = [float(v) for v in vals]
                elif key == "py":
                    py = [float(v) for v in vals]
                elif key == "cond":
                    cond[int(vals[0])] = [float(v) for v in vals[1:]]
                else:
                    raise SourceFileError(f"unknown key {key!r}")
        except (IndexError, ValueError) as e:
            raise SourceFileError(f"malformed source file: {e}") from None
        if q is None or ny is None or px is None or sorted(cond) != list(range(q)):
            raise SourceFileError("source file needs q, ny, px and one cond line per symbol")
        table = np.array([cond[x] for x in range(q)])
        if table.shape != (q, ny) or len(px) != q or (py is not None and len(py) != ny):
            raise SourceFileError("table dimensions do not match q and ny")
        return cls(np.array(px), table.T, None if py is None else np.array(py))

    @classmethod
    def load(cls, path) -> "JointSource":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def paper_source() -> JointSource:
    """The five-symbol source with side information shipped in ``data/``."""
    text = resources.files("qpolar").joinpath("data/source_q5.txt").read_text(encoding="utf-8")
    return JointSource.loads(text)


@dataclass
class CompressedBlock:
    code_id: str
    values: np.ndarray


def compress(code: PolarCode, x) -> CompressedBlock:
    """``u = x G_N`` restricted to the frozen set (ascending index order)."""
    x = np.asarray(x, dtype=np.int64)
    if x.shape[-1] != code.N or np.any((x < 0) | (x >= code.field.q)):
        raise CodeMismatch(f"expected length-{code.N} words over F_{code.field.q}")
    u = polar_encode(code.field, x)
    return CompressedBlock(code.code_id, u[..., code.frozen_set])


def decompress(code: PolarCode, block: CompressedBlock, y, model: JointSource,
               strict: bool = False) -> np.ndarray:
    """Recover ``x`` from the frozen symbols and the side information ``y``.

    ``P(0 | y) = 0`` is handled by the -500 log floor; ``strict=True`` raises
    :class:`ZeroProbabilitySymbol` instead.
    """
    y = np.asarray(y)
    if block.code_id != code.code_id:
        raise CodeMismatch("block was produced by a different code")
    if y.shape[-1] != code.N or block.values.shape[-1] != code.frozen_set.size:
        raise BlockLengthMismatch("block or side information has the wrong length")
    if model.q != code.field.q:
        raise CodeMismatch("model alphabet does not match the code")
    if strict and np.any(model.p_x_given_y[y, 0] == 0):
        raise ZeroProbabilitySymbol("P(0 | y) = 0 for an observed y")
    policy = FrozenPolicy(code.N, code.frozen_set, block.values)
    res = sc_decode(code.field, model.llr(y), policy)
    return res.x_hat
