"""Code construction from per-index Bhattacharyya parameters.

Monte-Carlo estimates come from genie-aided SC decoding: for every trial the
true ``u`` is imposed at all positions and the LR vector each index would
have seen is turned into ``Delta / L(beta)``.  Small cases can be computed
exactly by enumerating ``(x, y)``.
"""
from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from . import _kernels
from ._parallel import run_jobs
from .gfq import FieldSpec, make_field, matvec
from .oracle import all_words, gn_matrix
from .sc_decoder import FrozenPolicy, clamp, sc_decode
from .transform import log2_exact, polar_encode

CHUNK_TRIALS = 32
CODE_FORMAT = "qpolar-code 1"
LOG_FLOOR = -500.0


class DegenerateSampler(ValueError):
    pass


class EmptyInformationSet(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class TooLarge(ValueError):
    pass


class CodeFileError(ValueError):
    pass


def safe_log(p):
    with np.errstate(divide="ignore"):
        return np.maximum(np.log(np.asarray(p, dtype=float)), LOG_FLOOR)


@dataclass
class TabularJoint:
    """Memoryless pair ``(X, Y)`` with a finite ``Y`` alphabet.

    ``joint[x, y] = P(X = x, Y = y)``.
    """

    joint: np.ndarray

    def __post_init__(self):
        self.joint = np.asarray(self.joint, dtype=float)
        if abs(self.joint.sum() - 1) > 1e-9 or np.any(self.joint < 0):
            raise ValueError("joint table must be a probability distribution")

    @property
    def q(self) -> int:
        return self.joint.shape[0]

    @property
    def ny(self) -> int:
        return self.joint.shape[1]

    def sample(self, rng: np.random.Generator, shape):
        flat = self.joint.reshape(-1)
        idx = rng.choice(flat.size, size=shape, p=flat / flat.sum())
        return idx // self.ny, idx % self.ny

    def llr(self, y) -> np.ndarray:
        """``log P(a | y) / P(0 | y)`` for ``a = 1..q-1`` (log-probs floored at -500)."""
        y = np.asarray(y)
        if np.any(self.joint[:, y].sum(axis=0) == 0):
            raise DegenerateSampler("observation with zero probability")
        lj = safe_log(self.joint)
        out = np.moveaxis(lj[1:, y] - lj[0, y], 0, -1)
        return clamp(out)


class DmcChannel(TabularJoint):
    """q-ary DMC ``W[x, y] = P(y | x)`` driven by a uniform input."""

    def __init__(self, W):
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or np.any(np.abs(W.sum(axis=1) - 1) > 1e-12) or np.any(W < 0):
            raise ShapeMismatch("W must be a row-stochastic q x |Y| matrix")
        self.W = W
        super().__init__(W / W.shape[0])


def symmetric_channel(q: int, eps: float) -> DmcChannel:
    """``P(y = x) = 1 - eps``, every other output ``eps / (q - 1)``."""
    W = np.full((q, q), eps / (q - 1))
    np.fill_diagonal(W, 1 - eps)
    return DmcChannel(W)


def degrade_channel(better: DmcChannel, w) -> DmcChannel:
    """``P1(y1 | x) = sum_y2 P2(y2 | x) w(y1 | y2)``."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != better.W.shape[1]:
        raise ShapeMismatch(f"w must have {better.W.shape[1]} rows")
    if np.any(np.abs(w.sum(axis=1) - 1) > 1e-12) or np.any(w < 0):
        raise ShapeMismatch("w rows must be probability vectors")
    W1 = better.W @ w
    return DmcChannel(W1 / W1.sum(axis=1, keepdims=True))


@dataclass
class ZEstimate:
    z: np.ndarray
    stderr: np.ndarray
    trials: int
    mode: str = "averaged"

    @property
    def N(self) -> int:
        return self.z.size

    @property
    def flagged(self) -> np.ndarray:
        """Indices whose estimate exceeds 1 (Monte-Carlo noise; not clamped)."""
        return np.flatnonzero(self.z > 1)


def log_delta(leaf_llr: np.ndarray) -> np.ndarray:
    """``log Delta`` with ``Delta = sum_{a != a'} sqrt(L_a L_a') / (q - 1)``."""
    k = leaf_llr.shape[-1]
    flat = np.ascontiguousarray(leaf_llr.reshape(-1, k))
    out = np.empty(flat.shape[0])
    _kernels.log_bhattacharyya_rows(flat, out)
    return out.reshape(leaf_llr.shape[:-1]) - math.log(k)


def trial_terms(leaf_llr: np.ndarray, u: np.ndarray, mode: str = "averaged", beta: int = 0) -> np.ndarray:
    """Per-trial, per-index Monte-Carlo terms whose mean is ``Z``.

    ``averaged``: ``Delta / L(u_i) / q`` with the true ``u_i``, i.e. the fixed
    reference estimator averaged over every reference symbol.
    ``fixed``: ``1[u_i = beta] Delta / L(beta)``.
    ``posterior``: ``Delta * P(0 | y, u^{i-1})``, the conditional Z itself.
    Same mean as the other two, bounded by 1 and independent of ``u_i``; the
    indicator forms draw most of their mass from rare low-posterior ``u_i``
    and read low by up to ``q`` at moderate trial counts on reliable indices.
    """
    q = leaf_llr.shape[-1] + 1
    full = np.concatenate([np.zeros(leaf_llr.shape[:-1] + (1,)), leaf_llr], axis=-1)
    ld = log_delta(leaf_llr)
    if mode == "averaged":
        ref = np.take_along_axis(full, u[..., None], -1)[..., 0]
        return np.exp(np.minimum(ld - ref, 700.0)) / q
    if mode == "posterior":
        return np.exp(np.minimum(ld - logsumexp(full, axis=-1), 0.0))
    if mode == "fixed":
        val = np.exp(np.minimum(ld - full[..., beta], 700.0))
        return np.where(u == beta, val, 0.0)
    raise ValueError(f"unknown estimator mode {mode!r}")


def _chunk(args):
    f, sampler, N, seed, index, size, mode, beta = args
    rng = np.random.default_rng([seed, index])
    x, y = sampler.sample(rng, (size, N))
    u = polar_encode(f, x)
    res = sc_decode(f, sampler.llr(y), FrozenPolicy.genie(u))
    t = trial_terms(res.leaf_llr, u, mode, beta)
    return t.sum(axis=0), (t * t).sum(axis=0)


def tree_sum(parts: list) -> np.ndarray:
    """Pairwise reduction with a topology that depends only on ``len(parts)``."""
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def estimate_z_mc(f: FieldSpec, sampler, N: int, trials: int, seed: int, *,
                  mode: str = "averaged", beta: int = 0, workers: int = 1,
                  chunk: int = CHUNK_TRIALS, progress=None) -> ZEstimate:
    """Monte-Carlo Bhattacharyya parameters of every synthesized index.

    Trials are split into fixed-size chunks, chunk ``c`` seeded with
    ``(seed, c)``; the result does not depend on ``workers``.
    """
    log2_exact(N)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if sampler.q != f.q:
        raise ShapeMismatch(f"sampler alphabet {sampler.q} != field order {f.q}")
    sizes = [min(chunk, trials - s) for s in range(0, trials, chunk)]
    jobs = [(f, sampler, N, seed, c, sz, mode, beta) for c, sz in enumerate(sizes)]
    parts = run_jobs(_chunk, jobs, workers, progress)
    s1 = tree_sum([p[0] for p in parts])
    s2 = tree_sum([p[1] for p in parts])
    mean = s1 / trials
    var = np.maximum(s2 / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
    return ZEstimate(mean, np.sqrt(var / trials), trials, f"fixed:{beta}" if mode == "fixed" else mode)


def exact_z(f: FieldSpec, model, N: int, i: int | None = None, budget: int = 20_000_000):
    """Exact ``Z(U_i | Y^N, U^{i-1})`` by enumerating every ``(x, y)``.

    ``model`` is anything with a ``joint`` table (``q x |Y|``).  Returns all
    ``N`` values when ``i`` is None.
    """
    joint = np.asarray(model.joint, dtype=float)
    q, ny = joint.shape
    if q != f.q:
        raise ShapeMismatch("model alphabet does not match the field")
    log2_exact(N)
    if (q * ny) ** N > budget:
        raise TooLarge(f"(q|Y|)^N = {(q * ny) ** N} exceeds budget {budget}")
    xs = all_words(q, N)
    ys = all_words(ny, N)
    P = np.ones((ys.shape[0], xs.shape[0]))
    for j in range(N):
        P *= joint[xs[:, j]][:, ys[:, j]].T
    u = matvec(f, xs, gn_matrix(f, N))
    idx = range(N) if i is None else [i]
    out = []
    for k in idx:
        key = u[:, :k + 1] @ (q ** np.arange(k, -1, -1))
        onehot = sparse.csr_matrix((np.ones(len(key)), (np.arange(len(key)), key)),
                                   shape=(len(key), q ** (k + 1)))
        S = np.sqrt(np.asarray((sparse.csr_matrix(P) @ onehot).todense())).reshape(len(ys), -1, q)
        tot = 0.0
        for a in range(q):
            for b in range(a + 1, q):
                tot += 2.0 * float((S[..., a] * S[..., b]).sum())
        out.append(tot / (q - 1))
    return np.array(out) if i is None else out[0]


def exact_z_estimate(f, model, N, **kw) -> ZEstimate:
    z = exact_z(f, model, N, **kw)
    return ZEstimate(z, np.zeros_like(z), 0, "exact")


@dataclass(frozen=True)
class Criterion:
    kind: str
    value: float

    KINDS = ("sum-bound", "per-index", "fixed-rate")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"criterion must be one of {self.KINDS}")

    @classmethod
    def parse(cls, text: str) -> "Criterion":
        kind, _, val = text.strip().partition(":")
        if not val:
            raise ValueError(f"criterion {text!r} needs a value, e.g. sum-bound:1e-4")
        return cls(kind, int(val) if kind == "fixed-rate" else float(val))

    def __str__(self):
        return f"{self.kind}:{self.value!r}"


@dataclass
class PolarCode:
    field: FieldSpec
    N: int
    info_set: np.ndarray
    z: ZEstimate | None = None
    criterion: Criterion | None = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.info_set = np.unique(np.asarray(self.info_set, dtype=np.int64))
        if self.info_set.size and (self.info_set[0] < 0 or self.info_set[-1] >= self.N):
            raise ValueError("information index out of range")

    @property
    def K(self) -> int:
        return int(self.info_set.size)

    @property
    def frozen_set(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.N), self.info_set)

    @property
    def rate(self) -> float:
        """Channel code rate ``|A| / N``."""
        return self.K / self.N

    @property
    def source_rate(self) -> float:
        """Compression rate ``|A^c| / N`` in q-ary symbols per source symbol."""
        return 1 - self.rate

    @property
    def bound_pe(self) -> float:
        return error_bound(self)

    @property
    def code_id(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]

    def dumps(self) -> str:
        f = self.field
        buf = io.StringIO()
        w = buf.write
        w(CODE_FORMAT + "\n")
        w(f"q {f.q}\n")
        w("modulus " + (" ".join(map(str, f.modulus_poly)) if f.modulus_poly else "-") + "\n")
        w(f"alpha {f.alpha}\n")
        w(f"N {self.N}\n")
        if self.criterion is not None:
            w(f"criterion {self.criterion.kind} {self.criterion.value!r}\n")
        for k in sorted(self.meta):
            w(f"meta {k} {self.meta[k]}\n")
        if self.z is not None:
            w(f"z_trials {self.z.trials}\n")
            w(f"z_mode {self.z.mode}\n")
            w(f"bound_pe {self.bound_pe!r}\n")
        w(f"info {self.K}" + "".join(f" {i}" for i in self.info_set) + "\n")
        if self.z is not None:
            for i in range(self.N):
                w(f"z {i} {float(self.z.z[i])!r} {float(self.z.stderr[i])!r}\n")
        w("end\n")
        return buf.getvalue()

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        return path

    @classmethod
    def loads(cls, text: str) -> "PolarCode":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or lines[0].strip() != CODE_FORMAT:
            raise CodeFileError(f"not a code file (expected header {CODE_FORMAT!r})")
        kv, meta, zrows, info = {}, {}, [], None
        for ln in lines[1:]:
            key, _, rest = ln.partition(" ")
            if key == "meta":
                mk, _, mv = rest.partition(" ")
                meta[mk] = mv
            elif key == "z":
                i, zi, se = rest.split()
                zrows.append((int(i), float(zi), float(se)))
            elif key == "info":
                vals = [int(v) for v in rest.split()]
                if vals[0] != len(vals) - 1:
                    raise CodeFileError("info count does not match the listed indices")
                info = vals[1:]
            elif key == "end":
                break
            else:
                kv[key] = rest.strip()
        try:
            f = make_field(int(kv["q"]))
            N = int(kv["N"])
        except KeyError as e:
            raise CodeFileError(f"missing field {e}") from None
        modulus = () if kv.get("modulus", "-") == "-" else tuple(int(c) for c in kv["modulus"].split())
        if modulus != f.modulus_poly or int(kv.get("alpha", f.alpha)) != f.alpha:
            raise CodeFileError("field parameters differ from the canonical ones for this q")
        if info is None:
            raise CodeFileError("missing info line")
        z = None
        if zrows:
            if [r[0] for r in zrows] != list(range(N)):
                raise CodeFileError("z lines must list every index once, in order")
            z = ZEstimate(np.array([r[1] for r in zrows]), np.array([r[2] for r in zrows]),
                          int(kv.get("z_trials", 0)), kv.get("z_mode", "averaged"))
        crit = None
        if "criterion" in kv:
            ck, cv = kv["criterion"].split()
            crit = Criterion(ck, int(cv) if ck == "fixed-rate" else float(cv))
        return cls(f, N, np.array(info, dtype=np.int64), z, crit, meta)

    @classmethod
    def load(cls, path) -> "PolarCode":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def select_info_set(f: FieldSpec, z: ZEstimate, criterion: Criterion, meta: dict | None = None) -> PolarCode:
    """Pick the information set from Bhattacharyya estimates.

    ``sum-bound``: ascending z while the running sum stays <= value;
    ``per-index``: every index with z < value; ``fixed-rate``: the value
    smallest. Ties are broken by index.
    """
    zz = np.asarray(z.z, dtype=float)
    order = np.argsort(zz, kind="stable")
    if criterion.kind == "sum-bound":
        csum = np.cumsum(zz[order])
        info = order[: int(np.searchsorted(csum, criterion.value, side="right"))]
    elif criterion.kind == "per-index":
        info = np.flatnonzero(zz < criterion.value)
    else:
        K = int(criterion.value)
        if not 0 <= K <= zz.size:
            raise ValueError(f"fixed-rate K={K} outside [0, {zz.size}]")
        info = order[:K]
    if info.size == 0:
        raise EmptyInformationSet(f"{criterion} admits no index")
    return PolarCode(f, zz.size, np.sort(info), z, criterion, dict(meta or {}))


def error_bound(code: PolarCode) -> float:
    """``(q - 1) * sum of z over the information set``."""
    if code.z is None:
        raise ValueError("code carries no Bhattacharyya estimates")
    return float((code.field.q - 1) * np.sum(code.z.z[code.info_set]))


@dataclass
class DegradationReport:
    index: int
    z_degraded: float
    z_better: float
    stderr: float
    holds: bool
    mode: str


def check_degradation_ordering(f: FieldSpec, degraded: DmcChannel, better: DmcChannel, N: int,
                               i: int | None = None, *, mode: str = "exact", trials: int = 2000,
                               seed: int = 0, slack: float = 1e-12) -> list[DegradationReport]:
    """Compare ``Z`` of every (or one) index on a channel and a degraded copy.

    Exact mode allows ``slack``; MC mode is a one-sided test at 3 stderr.
    """
    idx = range(N) if i is None else [i]
    if mode == "exact":
        zd, zb = exact_z(f, degraded, N), exact_z(f, better, N)
        return [DegradationReport(k, float(zd[k]), float(zb[k]), 0.0, bool(zd[k] >= zb[k] - slack), mode)
                for k in idx]
    ed = estimate_z_mc(f, degraded, N, trials, seed)
    eb = estimate_z_mc(f, better, N, trials, seed + 1)
    out = []
    for k in idx:
        se = float(math.hypot(ed.stderr[k], eb.stderr[k]))
        out.append(DegradationReport(k, float(ed.z[k]), float(eb.z[k]), se,
                                     bool(ed.z[k] >= eb.z[k] - 3 * se), "mc"))
    return out
