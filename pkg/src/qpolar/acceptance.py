"""Acceptance checks, runnable from tests or ``qpolar verify``.

Each check returns a :class:`CheckResult`; thresholds are the module
constants below and are never adapted to the measured values.
"""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel_codec import FrozenStream, channel_decode, channel_encode, noiseless_llr
from .construction import (Criterion, PolarCode, check_degradation_ordering, degrade_channel, DmcChannel,
                           estimate_z_mc, select_info_set)
from .gfq import make_field
from .modem_awgn import AwgnSampler, NoiseModel, init_llr, load_circular, make_pam, transmit
from .oracle import Enumeration, binary_reference_sc, posterior_llr
from .sc_decoder import FrozenPolicy, sc_decode
from .simulation import simulate_channel, simulate_source
from .source_codec import paper_source
from .transform import polar_decode_transform, polar_encode

# published reference values
H_X_GIVEN_Y_PUBLISHED = 1.90061
# run sizes
ORACLE_MODELS = 50
BINARY_FRAMES = 10_000
SOURCE_TRIALS = {1024: 20_000, 4096: 10_000}
SOURCE_SIM_FRAMES = 250            # 250 * 4096 > 1e6 symbols
CHANNEL_TRIALS = 2_000
CHANNEL_SIM_FRAMES = 200
TIMING_BATCH = 256


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} [{self.number:2d}] {self.title}: {self.detail} ({self.seconds:.1f}s)"


def _random_joint(rng, q, ny):
    return rng.dirichlet(np.ones(q * ny)).reshape(q, ny)


def check_oracle_equivalence(seed=101, models=ORACLE_MODELS):
    """Every lattice LR vector vs enumeration, q in 2..5, N in {2,4,8}."""
    rng = np.random.default_rng(seed)
    worst, count = 0.0, 0
    for q in (2, 3, 4, 5):
        f = make_field(q)
        for N in (2, 4, 8):
            for _ in range(models):
                ny = int(rng.integers(2, 5))
                joint = _random_joint(rng, q, ny)
                y = rng.integers(0, ny, N)
                logp = np.log(joint[:, y].T)
                E = Enumeration(f, logp)
                res = sc_decode(f, logp[:, 1:] - logp[:, :1], FrozenPolicy(N, [], np.zeros(0)), record=True)
                lat = res.workspace.llr_lattice[:, 0]
                for level in range(N.bit_length()):
                    M = 1 << level
                    for lo in range(0, N, M):
                        ref = posterior_llr(E.node_posterior(level, lo, res.u_hat[:lo]))
                        worst = max(worst, float(np.abs(ref - lat[level, lo:lo + M]).max()))
                        count += M
    return worst <= 1e-8, f"{count} LR vectors, max |dLLR| = {worst:.2e} (tol 1e-8)"


def check_binary_reduction(seed=202, frames=BINARY_FRAMES, sigma=0.8):
    """Rate-1/2 codes over BPSK/AWGN, information set from estimated Z."""
    rng = np.random.default_rng(seed)
    f = make_field(2)
    bpsk, nm = make_pam(2), NoiseModel(sigma**2, real=True)
    mismatched = errors = 0
    for N in (8, 64, 256):
        z = estimate_z_mc(f, AwgnSampler(bpsk, nm), N, 2000, seed + N)
        code = select_info_set(f, z, Criterion("fixed-rate", N // 2))
        frozen = np.zeros(N, dtype=bool)
        frozen[code.frozen_set] = True
        u = rng.integers(0, 2, (frames, N))
        llr = init_llr(bpsk, transmit(bpsk, polar_decode_transform(f, u), nm, rng=rng), nm)
        ours = sc_decode(f, llr, FrozenPolicy(N, code.frozen_set, u[:, frozen])).u_hat
        ref = binary_reference_sc(llr[..., 0], frozen, u)
        mismatched += int(np.any(ours != ref, axis=1).sum())
        errors += int(np.any(ours != u, axis=1).sum())
    return mismatched == 0, (f"{3 * frames} frames ({errors} decoded wrongly), "
                             f"{mismatched} with differing decisions")


def check_roundtrips(seed=303):
    rng = np.random.default_rng(seed)
    failures, cases = 0, 0
    for q in (2, 3, 4, 5, 8):
        f = make_field(q)
        for n in range(1, 11):
            N = 1 << n
            x = rng.integers(0, q, (8, N))
            failures += int(np.any(polar_decode_transform(f, polar_encode(f, x)) != x))
            K = int(rng.integers(0, N + 1))
            code = PolarCode(f, N, np.sort(rng.choice(N, K, replace=False)))
            s = rng.integers(0, q, (4, K))
            seed_ = int(rng.integers(2**63))
            xc = channel_encode(code, s, FrozenStream(seed_, f))
            s_hat = channel_decode(code, noiseless_llr(q, xc), FrozenStream(seed_, f))
            failures += int(np.any(s_hat != s))
            cases += 2
    return failures == 0, f"{cases} (q, N) cases up to N=1024, {failures} failures"


def check_degradation(seed=404, pairs=24):
    rng = np.random.default_rng(seed)
    worst, bad, eq_err = np.inf, 0, 0.0
    for k in range(pairs):
        q = (2, 3)[k % 2]
        N = (2, 4)[(k // 2) % 2]
        ny = int(rng.integers(2, 4))
        better = DmcChannel(rng.dirichlet(np.ones(ny), size=q))
        w = rng.dirichlet(np.ones(int(rng.integers(2, 4))), size=ny)
        f = make_field(q)
        reps = check_degradation_ordering(f, degrade_channel(better, w), better, N)
        bad += sum(not r.holds for r in reps)
        worst = min(worst, min(r.z_degraded - r.z_better for r in reps))
        same = check_degradation_ordering(f, degrade_channel(better, np.eye(ny)), better, N)
        eq_err = max(eq_err, max(abs(r.z_degraded - r.z_better) for r in same))
    ok = bad == 0 and eq_err <= 1e-12
    return ok, (f"{pairs} pairs, {bad} violations, min(Zd - Zb) = {worst:.2e}, "
                f"identity-w max |dZ| = {eq_err:.1e}")


def check_source_entropy():
    src = paper_source()
    h = src.conditional_entropy()
    return abs(h - H_X_GIVEN_Y_PUBLISHED) <= 0.02, (
        f"H(X|Y) = {h:.5f} bits vs {H_X_GIVEN_Y_PUBLISHED} (tol 0.02), P(Y) residual {src.residual:.1e}")


_SOURCE_CODES: dict = {}


def source_codes(workers=1, seed=606):
    """Sum-bound 1e-4 codes for the five-symbol source at N = 1024 and 4096 (cached)."""
    if not _SOURCE_CODES:
        src = paper_source()
        f = make_field(5)
        for N, trials in SOURCE_TRIALS.items():
            z = estimate_z_mc(f, src, N, trials, seed + N, workers=workers)
            _SOURCE_CODES[N] = select_info_set(f, z, Criterion("sum-bound", 1e-4))
    return _SOURCE_CODES


def check_source_coding(workers=1, seed=606):
    src = paper_source()
    codes = source_codes(workers, seed)
    rs = {N: c.source_rate for N, c in codes.items()}
    floor = H_X_GIVEN_Y_PUBLISHED / math.log2(5)
    sim = simulate_source(codes[4096], src, SOURCE_SIM_FRAMES, seed, workers)
    a = rs[4096] < rs[1024]
    b = all(r > floor for r in rs.values())
    c = sim.symbols >= 1_000_000 and sim.ser <= 1e-3
    return a and b and c, (f"(a) R_s 1024={rs[1024]:.4f} 4096={rs[4096]:.4f} [{'ok' if a else 'no'}]; "
                           f"(b) floor {floor:.4f} [{'ok' if b else 'no'}]; "
                           f"(c) SER {sim.ser:.2e} over {sim.symbols} symbols, bound {codes[4096].bound_pe:.1e} "
                           f"[{'ok' if c else 'no'}]")


def decile_means(z) -> tuple[float, float]:
    zs = np.sort(np.asarray(z))
    d = max(1, zs.size // 10)
    return float(zs[:d].mean()), float(zs[-d:].mean())


def check_polarization_shape(workers=1, seed=606):
    codes = source_codes(workers, seed)
    lo1, hi1 = decile_means(codes[1024].z.z)
    lo4, hi4 = decile_means(codes[4096].z.z)
    ok = lo4 < lo1 and hi4 > hi1
    return ok, (f"first decile mean 1024={lo1:.2e} 4096={lo4:.2e}; "
                f"last decile mean 1024={hi1:.4f} 4096={hi4:.4f}")


def check_channel_point(workers=1, seed=808):
    f = make_field(67)
    const = load_circular()
    nm = NoiseModel.from_snr_db(20.0)
    z = estimate_z_mc(f, AwgnSampler(const, nm), 2048, CHANNEL_TRIALS, seed, mode="posterior", workers=workers)
    code = select_info_set(f, z, Criterion("per-index", 1e-4))
    R = code.rate * math.log2(67)
    sim = simulate_channel(code, const, nm, CHANNEL_SIM_FRAMES, seed + 1, workers)
    ok = 4.5 <= R <= 6.04 and sim.ser <= 1e-2 and sim.frames >= 200
    return ok, f"R_c = {code.rate:.4f}, R = {R:.3f} bits (window [4.5, 6.04]); SER {sim.ser:.2e} over {sim.frames} frames"


def _decode_time(f, N, batch, reps, rng):
    llr = rng.normal(0, 2, (batch, N, f.q - 1))
    frozen = FrozenPolicy(N, [], np.zeros(0))
    sc_decode(f, llr[:1], frozen)
    best = np.inf
    for _ in range(reps):
        t = time.perf_counter()
        sc_decode(f, llr, frozen)
        best = min(best, time.perf_counter() - t)
    return best / batch


def check_complexity(seed=909, batch=TIMING_BATCH, reps=3):
    rng = np.random.default_rng(seed)
    f = make_field(5)
    Ns = (256, 1024, 4096)
    t = np.array([_decode_time(f, N, batch, reps, rng) for N in Ns])
    x = np.array([N * math.log2(N) for N in Ns])
    c = float(x @ t / (x @ x))
    dev = t / (c * x) - 1
    ok_n = bool(np.all(np.abs(dev) <= 0.25))
    qs = (3, 5, 8)
    tq = np.array([_decode_time(make_field(q), 1024, batch, reps, rng) for q in qs])
    growth = tq / tq[0] / (np.array(qs) / qs[0]) ** 2
    ok_q = bool(np.all(growth <= 1.25))
    return ok_n and ok_q, ("N fit deviations " + ", ".join(f"{N}:{d:+.0%}" for N, d in zip(Ns, dev))
                           + "; q growth / q^2 " + ", ".join(f"{q}:{g:.2f}" for q, g in zip(qs, growth)))


def check_determinism(seed=1010):
    from .cli import Config, cmd_construct, cmd_simulate_channel, cmd_simulate_source, compare_csv
    diffs = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        outs = {}
        for w in (1, 8):
            d = tmp / f"w{w}"
            src = Config({"model": "source", "source": "builtin", "n": "256", "trials": "200",
                          "criterion": "sum-bound:1e-3", "seed": str(seed), "output": "src.code"}, d)
            ch = Config({"model": "awgn", "constellation": "pam:8", "snr_db": "18", "n": "128",
                         "trials": "200", "criterion": "per-index:1e-3", "seed": str(seed),
                         "output": "ch.code"}, d)
            r1 = cmd_construct(src, w)
            r2 = cmd_construct(ch, w)
            s1 = cmd_simulate_source(Config({"code": "src.code", "source": "builtin", "frames": "40",
                                             "seed": str(seed), "output": "src.csv"}, d), w)
            s2 = cmd_simulate_channel(Config({"code": "ch.code", "constellation": "pam:8", "snr_db": "16,18",
                                              "frames": "40", "seed": str(seed), "output": "ch.csv"}, d), w)
            outs[w] = [r1["code_path"], r1["z_csv"], r1["z_sorted_csv"], r2["code_path"], r2["z_csv"],
                       r2["z_sorted_csv"], s1, s2]
        for a, b in zip(outs[1], outs[8]):
            if a.suffix == ".csv":
                diffs += [f"{a.name}: {d}" for d in compare_csv(a, b)]
            elif a.read_bytes() != b.read_bytes():
                diffs.append(f"{a.name} differs")
    return not diffs, f"{len(outs[1])} outputs compared, 1 vs 8 workers: " + ("identical" if not diffs else "; ".join(diffs[:3]))


CHECKS = {
    1: ("oracle equivalence of every decoder LR vector", check_oracle_equivalence),
    2: ("binary reduction against a textbook SC decoder", check_binary_reduction),
    3: ("transform and noiseless channel roundtrips", check_roundtrips),
    4: ("degradation ordering of Z", check_degradation),
    5: ("side-information source entropy", check_source_entropy),
    6: ("source-coding rates and error rate", check_source_coding),
    7: ("sorted-Z curves steepen with N", check_polarization_shape),
    8: ("67-point circular constellation at 20 dB", check_channel_point),
    9: ("decoder time scaling in N and q", check_complexity),
    10: ("worker-count independence of outputs", check_determinism),
}
USES_WORKERS = {6, 7, 8}
# stated runtime ceilings, seconds
RUNTIME_LIMITS = {1: 120, 2: 60, 6: 1800}


def run_check(number: int, workers: int = 1) -> CheckResult:
    if number not in CHECKS:
        raise ValueError(f"no acceptance criterion {number}; choose from {sorted(CHECKS)}")
    title, fn = CHECKS[number]
    t = time.perf_counter()
    ok, detail = fn(workers=workers) if number in USES_WORKERS else fn()
    seconds = time.perf_counter() - t
    limit = RUNTIME_LIMITS.get(number)
    if limit is not None:
        within = seconds < limit
        detail += f"; runtime {seconds:.0f}s (limit {limit}s)"
        ok = ok and within
    return CheckResult(number, title, bool(ok), detail, seconds)


def run_all(only=None, workers: int = 1, echo: bool = False) -> list[CheckResult]:
    numbers = list(only or sorted(CHECKS))
    unknown = [n for n in numbers if n not in CHECKS]
    if unknown:
        raise ValueError(f"no acceptance criterion {unknown}; choose from {sorted(CHECKS)}")
    out = []
    for n in numbers:
        r = run_check(n, workers)
        if echo:
            print(r.line(), flush=True)
        out.append(r)
    return out
