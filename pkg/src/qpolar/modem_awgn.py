"""Constellations, complex AWGN and initial LLR vectors for channel coding."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .gfq import factor_prime_power, NotPrimePower


class UnsupportedSize(ValueError):
    pass


class BadPackingFile(ValueError):
    pass


class CountNotFieldOrder(ValueError):
    pass


@dataclass
class Constellation:
    """Points ``t(j)`` for symbol integers ``j = 0..q-1`` (identity labeling)."""

    points: np.ndarray
    kind: str
    radius: float | None = None     # packing radius, circular kind only

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        if self.points.ndim != 1 or self.points.size < 2:
            raise UnsupportedSize("a constellation needs at least two points")
        if np.unique(self.points).size != self.points.size:
            raise ValueError("constellation points must be distinct")

    @property
    def q(self) -> int:
        return self.points.size

    @property
    def es(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def real(self) -> bool:
        return bool(np.all(self.points.imag == 0))

    def normalized(self) -> "Constellation":
        s = 1.0 / np.sqrt(self.es)
        return Constellation(self.points * s, self.kind, None if self.radius is None else self.radius * s)

    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(d[~np.eye(self.q, dtype=bool)].min())


def _pam_points(q: int) -> tuple[np.ndarray, str]:
    if q >= 2 and q & (q - 1) == 0:
        return 2.0 * np.arange(1, q + 1) - (q + 1), "pam-pow2"
    try:
        p, m = factor_prime_power(q)
    except NotPrimePower:
        m = 0
    if m == 1:
        return np.arange(q) - q // 2.0, "pam-prime"
    raise UnsupportedSize(f"PAM needs a prime or power-of-two size, got {q}")


def make_pam(q: int, normalize: bool = True) -> Constellation:
    """``{i - floor(q/2)}`` for prime ``q``, ``{2i - (q+1)}, i=1..q`` for ``q = 2^m``."""
    pts, kind = _pam_points(q)
    c = Constellation(pts.astype(complex), kind)
    return c.normalized() if normalize else c


def make_rect_qam(q_axis: int, normalize: bool = True) -> Constellation:
    """Product of two PAMs; symbol ``j`` sits at ``(j mod q_axis, j div q_axis)``."""
    axis, _ = _pam_points(q_axis)
    j = np.arange(q_axis * q_axis)
    c = Constellation(axis[j % q_axis] + 1j * axis[j // q_axis], "rect-qam")
    return c.normalized() if normalize else c


def parse_packing(text: str) -> tuple[np.ndarray, float | None]:
    radius = None
    pts = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "radius":
                if radius is not None or pts or len(parts) != 2:
                    raise BadPackingFile(f"line {n}: 'radius' must be a single header line")
                radius = float(parts[1])
                continue
            if len(parts) != 2:
                raise BadPackingFile(f"line {n}: expected 'x y'")
            pts.append(complex(float(parts[0]), float(parts[1])))
        except ValueError as e:
            if isinstance(e, BadPackingFile):
                raise
            raise BadPackingFile(f"line {n}: {e}") from None
    return np.array(pts, dtype=complex), radius


def load_circular(path=None, normalize: bool = True) -> Constellation:
    """Circle-packing centers as a constellation; ``None`` loads the shipped 67 points."""
    if path is None:
        text = resources.files("qpolar").joinpath("data/circle67.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    pts, radius = parse_packing(text)
    if pts.size < 2:
        raise CountNotFieldOrder(f"{pts.size} centers; a constellation needs at least 2")
    try:
        factor_prime_power(pts.size)
    except NotPrimePower:
        raise CountNotFieldOrder(f"{pts.size} centers is not a field order") from None
    if np.unique(pts).size != pts.size:
        raise BadPackingFile("duplicate centers")
    c = Constellation(pts, "circular", radius)
    return c.normalized() if normalize else c


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian noise with per-dimension variance ``sigma2``.

    Complex noise has ``E|Z|^2 = 2 sigma2``; ``real=True`` is the one-axis
    case used when each PAM axis is coded on its own.
    """

    sigma2: float
    real: bool = False

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @classmethod
    def from_snr_db(cls, snr_db: float, es: float = 1.0, real: bool = False) -> "NoiseModel":
        """``SNR = es / E|Z|^2``."""
        snr = 10.0 ** (snr_db / 10.0)
        return cls(es / (snr if real else 2.0 * snr), real)

    def snr_db(self, es: float = 1.0) -> float:
        return float(10 * np.log10(es / (self.sigma2 * (1 if self.real else 2))))


def transmit(c: Constellation, x, nm: NoiseModel, seed=None, rng=None) -> np.ndarray:
    """``y = t(x) + z``; seeded noise, so equal seeds give identical ``y``."""
    rng = np.random.default_rng(seed) if rng is None else rng
    x = np.asarray(x, dtype=np.int64)
    s = np.sqrt(nm.sigma2)
    if nm.real:
        return c.points[x].real + s * rng.standard_normal(x.shape)
    return c.points[x] + s * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))


def init_llr(c: Constellation, y, nm: NoiseModel) -> np.ndarray:
    """Closed-form Gaussian log-ratios ``log f(y - t(x)) / f(y - t(0))`` for ``x = 1..q-1``.

    Shape ``y.shape + (q-1,)``.  The imaginary term is dropped for real noise.
    """
    y = np.asarray(y)
    t0 = c.points[0]
    tx = c.points[1:]
    out = (tx.real - t0.real) / nm.sigma2 * (np.real(y)[..., None] - 0.5 * (tx.real + t0.real))
    if not nm.real:
        out = out + (tx.imag - t0.imag) / nm.sigma2 * (np.imag(y)[..., None] - 0.5 * (tx.imag + t0.imag))
    return out


def log_density(c: Constellation, y, nm: NoiseModel) -> np.ndarray:
    """``log f_Z(y - t(x))`` for every ``x``; shape ``y.shape + (q,)``."""
    d = np.asarray(y)[..., None] - c.points
    if nm.real:
        return -0.5 * np.log(2 * np.pi * nm.sigma2) - d.real**2 / (2 * nm.sigma2)
    return -np.log(2 * np.pi * nm.sigma2) - np.abs(d) ** 2 / (2 * nm.sigma2)


def nearest_point(c: Constellation, y) -> np.ndarray:
    y = np.asarray(y)
    pts = c.points.real if np.isrealobj(y) else c.points
    return np.argmin(np.abs(y[..., None] - pts), axis=-1)


@dataclass
class AwgnSampler:
    """Uniform-input AWGN pair ``(x, y)`` in the form construction expects."""

    constellation: Constellation
    noise: NoiseModel

    @property
    def q(self) -> int:
        return self.constellation.q

    def sample(self, rng, shape):
        x = rng.integers(0, self.q, size=shape)
        return x, transmit(self.constellation, x, self.noise, rng=rng)

    def llr(self, y) -> np.ndarray:
        return init_llr(self.constellation, y, self.noise)


def mutual_information(c: Constellation, nm: NoiseModel, samples: int = 200_000, seed: int = 0) -> float:
    """Monte-Carlo ``I(X; Y)`` in bits for uniform input."""
    rng = np.random.default_rng(seed)
    x, y = AwgnSampler(c, nm).sample(rng, samples)
    ld = log_density(c, y, nm)
    m = ld.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(ld - m).sum(axis=-1)) + m[..., 0]
    return float(np.log2(c.q) - np.mean(lse - ld[np.arange(samples), x]) / np.log(2))
