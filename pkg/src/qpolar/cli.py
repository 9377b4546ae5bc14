"""Command-line experiment harness.

Experiments are described by config files of ``key = value`` lines
(``#`` comments, ``include = other.cfg`` pulls in another file relative to
the including one; later keys win).  Command-line flags override the file.

Exit codes: 0 success, 2 configuration or input error, 3 a check failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import acceptance
from .construction import (Criterion, DmcChannel, PolarCode, ZEstimate,
                           check_degradation_ordering, degrade_channel, estimate_z_mc, exact_z, select_info_set,
                           symmetric_channel)
from .gfq import make_field
from .modem_awgn import (AwgnSampler, BadPackingFile, CountNotFieldOrder, NoiseModel, UnsupportedSize,
                         load_circular, make_pam, make_rect_qam)
from .simulation import simulate_channel, simulate_source
from .source_codec import JointSource, paper_source

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3
# keys that do not change results and are left out of output metadata
NON_SEMANTIC = {"output", "workers", "z_csv", "code"}


class ConfigError(ValueError):
    pass


# config ------------------------------------------------------------------

def read_config(path, _seen=None) -> dict:
    path = Path(path)
    seen = set() if _seen is None else _seen
    if path.resolve() in seen:
        raise ConfigError(f"include cycle at {path}")
    seen.add(path.resolve())
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    cfg = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise ConfigError(f"{path}:{n}: expected 'key = value', got {raw.strip()!r}")
        key, val = key.strip().lower(), val.strip()
        if key == "include":
            cfg.update(read_config(path.parent / val, seen))
        else:
            cfg[key] = val
    return cfg


class Config:
    def __init__(self, values: dict, base: Path | None = None):
        self.values = dict(values)
        self.base = base or Path.cwd()

    def get(self, key, default=None, cast=str):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"config needs '{key}'")
            return default
        try:
            return cast(self.values[key])
        except ValueError:
            raise ConfigError(f"bad value for {key}: {self.values[key]!r}") from None

    def path(self, key, default=None) -> Path:
        p = Path(self.get(key, default))
        return p if p.is_absolute() else self.base / p

    def metadata(self) -> dict:
        return {k: v for k, v in sorted(self.values.items()) if k not in NON_SEMANTIC}


def _positive_int(text):
    v = int(float(text))
    if v < 1 or v != float(text):
        raise ValueError
    return v


def parse_matrix(text: str) -> np.ndarray:
    """Rows separated by ';', entries by whitespace or ','."""
    rows = [r.replace(",", " ").split() for r in text.split(";") if r.strip()]
    try:
        M = np.array([[float(v) for v in r] for r in rows])
    except ValueError:
        raise ConfigError(f"bad matrix {text!r}") from None
    if M.ndim != 2:
        raise ConfigError("matrix rows have different lengths")
    return M


def make_constellation(spec: str, normalize: bool = True):
    """``pam:q``, ``rqam:q_axis``, ``circ:path`` or ``circ:builtin``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "pam":
            return make_pam(int(arg), normalize)
        if kind == "rqam":
            return make_rect_qam(int(arg), normalize)
        if kind == "circ":
            return load_circular(None if arg in ("", "builtin") else arg, normalize)
    except (UnsupportedSize, BadPackingFile, CountNotFieldOrder, OSError) as e:
        raise ConfigError(f"constellation {spec!r}: {e}") from None
    except ValueError:
        raise ConfigError(f"constellation {spec!r}: bad size") from None
    raise ConfigError(f"constellation must be pam:q, rqam:q_axis or circ:path, got {spec!r}")


def channel_setup(cfg: Config, snr_db: float):
    """Constellation and noise for the coded alphabet, honouring ``coding``."""
    coding = cfg.get("coding", "joint")
    normalize = cfg.get("normalize", "true").lower() in ("1", "true", "yes")
    const = make_constellation(cfg.get("constellation"), normalize)
    es = const.es
    if coding == "joint":
        return const, NoiseModel.from_snr_db(snr_db, es=es), False
    if coding == "independent":
        if const.kind != "rect-qam":
            raise ConfigError("coding = independent needs an rqam constellation")
        qa = int(round(math.sqrt(const.q)))
        axis = make_pam(qa, normalize=False)
        scale = np.sqrt(es / 2 / axis.es)
        axis.points = axis.points * scale
        # per-axis energy es/2 against per-axis variance sigma2 = es / (2 SNR)
        return axis, NoiseModel.from_snr_db(snr_db, es=es / 2, real=True), True
    raise ConfigError(f"coding must be joint or independent, got {coding!r}")


def load_source(cfg: Config) -> JointSource:
    src = cfg.get("source", "builtin")
    if src == "builtin":
        return paper_source()
    try:
        return JointSource.load(cfg.path("source"))
    except OSError as e:
        raise ConfigError(f"cannot read source file: {e.strerror}") from None


def build_model(cfg: Config):
    """Return ``(field, sampler, description)``."""
    kind = cfg.get("model")
    if kind == "source":
        m = load_source(cfg)
        return make_field(m.q), m, f"source:{cfg.get('source', 'builtin')}"
    if kind == "symmetric":
        q = cfg.get("q", cast=int)
        eps = cfg.get("eps", cast=float)
        return make_field(q), symmetric_channel(q, eps), f"symmetric:q={q},eps={eps!r}"
    if kind == "dmc":
        ch = DmcChannel(parse_matrix(cfg.get("w_channel")))
        return make_field(ch.q), ch, "dmc"
    if kind == "awgn":
        snr = cfg.get("snr_db", cast=float)
        const, nm, _ = channel_setup(cfg, snr)
        return make_field(const.q), AwgnSampler(const, nm), f"awgn:{cfg.get('constellation')}@{snr!r}dB"
    raise ConfigError(f"model must be source, symmetric, dmc or awgn, got {kind!r}")


# CSV ---------------------------------------------------------------------

def write_csv(path: Path, meta: dict, header: list, rows: list) -> Path:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_csv(path) -> tuple[dict, list, list]:
    meta, lines = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        elif line.strip():
            lines.append(line)
    if not lines:
        raise ConfigError(f"{path}: no table")
    rows = list(csv.reader(lines))
    if len(rows) < 2:
        raise ConfigError(f"{path}: header only, no data rows")
    return meta, rows[0], rows[1:]


def compare_csv(a, b, ignore=("wall_time",)) -> list[str]:
    """Differences between two CSVs, skipping the named columns."""
    ma, ha, ra = read_csv(a)
    mb, hb, rb = read_csv(b)
    diffs = [f"meta {k}: {ma.get(k)!r} != {mb.get(k)!r}" for k in sorted(set(ma) | set(mb))
             if ma.get(k) != mb.get(k)]
    if ha != hb:
        return diffs + [f"header {ha} != {hb}"]
    keep = [i for i, h in enumerate(ha) if h not in ignore]
    if len(ra) != len(rb):
        diffs.append(f"{len(ra)} rows != {len(rb)} rows")
    for n, (x, y) in enumerate(zip(ra, rb)):
        if [x[i] for i in keep] != [y[i] for i in keep]:
            diffs.append(f"row {n}: {x} != {y}")
    return diffs


# commands ----------------------------------------------------------------

def _progress(label, quiet):
    if quiet:
        return None

    def show(done, total):
        print(f"\r{label}: {done}/{total}", end="\n" if done == total else "", file=sys.stderr, flush=True)
    return show


def cmd_construct(cfg: Config, workers: int = 1, quiet: bool = True) -> dict:
    f, model, desc = build_model(cfg)
    N = cfg.get("n", cast=_positive_int)
    estimator = cfg.get("estimator", "averaged")
    seed = cfg.get("seed", 0, cast=int)
    try:
        crit = Criterion.parse(cfg.get("criterion"))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if estimator == "exact":
        z = exact_z(f, model, N)
        est = ZEstimate(z, np.zeros_like(z), 0, "exact")
    else:
        mode, _, beta = estimator.partition(":")
        if mode not in ("averaged", "fixed", "posterior"):
            raise ConfigError(f"estimator must be averaged, fixed:beta, posterior or exact, got {estimator!r}")
        trials = cfg.get("trials", cast=_positive_int)
        est = estimate_z_mc(f, model, N, trials, seed, mode=mode, beta=int(beta or 0), workers=workers,
                            progress=_progress("construct", quiet))
    meta = {"model": desc, "seed": seed}
    code = select_info_set(f, est, crit, meta)
    out = cfg.path("output")
    code.save(out)
    csv_meta = {"kind": "z-profile", "command": "construct", **cfg.metadata(),
                "q": f.q, "code_id": code.code_id, "K": code.K, "rate": repr(code.rate),
                "source_rate": repr(code.source_rate), "bound_pe": repr(code.bound_pe)}
    stem = cfg.path("z_csv", str(out) + ".z")
    by_index = write_csv(Path(f"{stem}.csv"), csv_meta, ["index", "z", "stderr"],
                         [(i, est.z[i], est.stderr[i]) for i in range(N)])
    order = np.argsort(est.z, kind="stable")
    sorted_meta = dict(csv_meta, kind="z-sorted")
    by_z = write_csv(Path(f"{stem}.sorted.csv"), sorted_meta, ["rank", "index_normalized", "index", "z", "stderr"],
                     [(r, (r + 1) / N, int(i), est.z[i], est.stderr[i]) for r, i in enumerate(order)])
    return {"code": code, "code_path": out, "z_csv": by_index, "z_sorted_csv": by_z}


def _load_code(cfg: Config) -> PolarCode:
    try:
        return PolarCode.load(cfg.path("code"))
    except OSError as e:
        raise ConfigError(f"cannot read code file: {e.strerror}") from None


def cmd_simulate_source(cfg: Config, workers: int = 1, quiet: bool = True) -> Path:
    code = _load_code(cfg)
    model = load_source(cfg)
    if model.q != code.field.q:
        raise ConfigError(f"source alphabet {model.q} does not match code over F_{code.field.q}")
    frames = cfg.get("frames", cast=_positive_int)
    seed = cfg.get("seed", 0, cast=int)
    t0 = time.perf_counter()
    c = simulate_source(code, model, frames, seed, workers, _progress("simulate", quiet))
    wall = time.perf_counter() - t0
    meta = {"kind": "source-sim", "command": "simulate-source", **cfg.metadata(), "code_id": code.code_id,
            "q": code.field.q, "N": code.N, "R_s": repr(code.source_rate),
            "bound_pe": repr(code.bound_pe) if code.z is not None else "-",
            "H_X_given_Y_bits": repr(model.conditional_entropy())}
    return write_csv(cfg.path("output"), meta,
                     ["model", "frames", "symbols", "symbol_errors", "ser", "block_errors", "wer", "wall_time"],
                     [(cfg.get("source", "builtin"), c.frames, c.symbols, c.symbol_errors, c.ser,
                       c.block_errors, c.wer, round(wall, 3))])


def cmd_simulate_channel(cfg: Config, workers: int = 1, quiet: bool = True) -> Path:
    code = _load_code(cfg)
    frames = cfg.get("frames", cast=_positive_int)
    seed = cfg.get("seed", 0, cast=int)
    try:
        snrs = [float(s) for s in cfg.get("snr_db").split(",")]
    except ValueError:
        raise ConfigError(f"snr_db must be a comma-separated list, got {cfg.get('snr_db')!r}") from None
    rows = []
    for snr in snrs:
        const, nm, indep = channel_setup(cfg, snr)
        if const.q != code.field.q:
            raise ConfigError(f"constellation alphabet {const.q} does not match code over F_{code.field.q}")
        t0 = time.perf_counter()
        c = simulate_channel(code, const, nm, frames, seed, workers, indep, _progress(f"{snr} dB", quiet))
        rows.append((snr, c.frames, c.symbols, c.symbol_errors, c.ser, c.block_errors, c.wer,
                     round(time.perf_counter() - t0, 3)))
    axes = 2 if cfg.get("coding", "joint") == "independent" else 1
    R = code.rate * math.log2(code.field.q) * axes
    meta = {"kind": "channel-sim", "command": "simulate-channel", **cfg.metadata(), "code_id": code.code_id,
            "q": code.field.q, "N": code.N, "R_c": repr(code.rate), "R_bits": repr(R),
            "snr_convention": "Es/E|Z|^2 with " + ("unit-energy" if cfg.get("normalize", "true") != "false"
                                                   else "raw") + " constellation"}
    return write_csv(cfg.path("output"), meta,
                     ["snr_db", "frames", "symbols", "symbol_errors", "ser", "block_errors", "wer", "wall_time"],
                     rows)


def cmd_check_degradation(cfg: Config, workers: int = 1, quiet: bool = True) -> tuple[Path, bool]:
    better = DmcChannel(parse_matrix(cfg.get("w_channel")))
    w = parse_matrix(cfg.get("w_degrade"))
    try:
        worse = degrade_channel(better, w)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    f = make_field(better.q)
    N = cfg.get("n", cast=_positive_int)
    mode = cfg.get("mode", "exact")
    reps = check_degradation_ordering(f, worse, better, N, mode=mode, trials=cfg.get("trials", 2000, cast=int),
                                      seed=cfg.get("seed", 0, cast=int))
    ok = all(r.holds for r in reps)
    meta = {"kind": "degradation", "command": "check-degradation", **cfg.metadata(), "holds": ok}
    path = write_csv(cfg.path("output"), meta, ["index", "z_degraded", "z_better", "stderr", "holds"],
                     [(r.index, r.z_degraded, r.z_better, r.stderr, int(r.holds)) for r in reps])
    return path, ok


def cmd_plot(paths, out_dir=None, combine=None) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "qpolar"
    tables = [(Path(p), *read_csv(p)) for p in paths]
    written = []

    def draw(ax, p, meta, header, rows):
        kind = meta.get("kind", "")
        col = {h: i for i, h in enumerate(header)}
        data = np.array([[float(v) for v in r] for r in rows])
        label = meta.get("model") or meta.get("constellation") or meta.get("source") or p.stem
        if "n" in meta:
            label += f", N={meta['n']}"
        if kind == "z-sorted":
            ax.semilogy(data[:, col["index_normalized"]], np.maximum(data[:, col["z"]], 1e-300), label=label)
            ax.set_xlabel("index / N (sorted by Z)")
            ax.set_ylabel("Bhattacharyya parameter Z")
        elif kind == "z-profile":
            ax.semilogy(data[:, col["index"]], np.maximum(data[:, col["z"]], 1e-300), ".", ms=2, label=label)
            ax.set_xlabel("index")
            ax.set_ylabel("Bhattacharyya parameter Z")
        elif "snr_db" in col:
            ax.semilogy(data[:, col["snr_db"]], np.maximum(data[:, col["ser"]], 1e-12), "o-", label=label)
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel("symbol error rate")
        elif "ser" in col:
            ax.semilogy(np.arange(len(data)), np.maximum(data[:, col["ser"]], 1e-12), "o", label=label)
            ax.set_xlabel("run")
            ax.set_ylabel("symbol error rate")
        else:
            raise ConfigError(f"{p}: no plottable columns in {header}")
        ax.grid(True, which="both", alpha=0.3)

    groups = [tables] if combine else [[t] for t in tables]
    for group in groups:
        fig, ax = plt.subplots(figsize=(6, 4))
        for t in group:
            draw(ax, *t)
        ax.legend(fontsize=7)
        if combine:
            out = Path(combine)
        else:
            out = (Path(out_dir) if out_dir else group[0][0].parent) / (group[0][0].stem + ".svg")
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(out)
    return written


# entry point -------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="qpolar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="key = value config file")
        s.add_argument("--workers", type=int, default=None)
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        s.add_argument("-q", "--quiet", action="store_true")
        return s

    for name, h in [("construct", "estimate Z and write a code file plus z-profile CSVs"),
                    ("simulate-source", "measure compression error rates"),
                    ("simulate-channel", "measure channel-coding error rates over AWGN"),
                    ("check-degradation", "compare Z on a channel and a degraded copy")]:
        s = with_config(name, h)
        if name in ("construct", "simulate-channel"):
            s.add_argument("--constellation", help="pam:q, rqam:q_axis or circ:path")
            s.add_argument("--snr-db", help="SNR in dB (comma list for simulate-channel)")
    s = sub.add_parser("plot", help="render CSVs as SVG line plots")
    s.add_argument("csv", nargs="+")
    s.add_argument("--out-dir")
    s.add_argument("--combine", metavar="SVG", help="overlay all inputs in one file")
    s = sub.add_parser("verify", help="run the acceptance checks")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.add_argument("--workers", type=int, default=1)
    s = sub.add_parser("compare", help="compare two CSVs ignoring timing columns")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--ignore-column", action="append", default=None,
                   help="column to skip (default: wall_time)")
    return p


def _config_from_args(args) -> Config:
    path = Path(args.config)
    values = read_config(path)
    for item in args.set:
        k, eq, v = item.partition("=")
        if not eq:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        values[k.strip().lower()] = v.strip()
    if args.seed is not None:
        values["seed"] = str(args.seed)
    if getattr(args, "constellation", None):
        values["constellation"] = args.constellation
    if getattr(args, "snr_db", None):
        values["snr_db"] = args.snr_db
    return Config(values, path.parent)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "plot":
            for out in cmd_plot(args.csv, args.out_dir, args.combine):
                print(out)
            return EXIT_OK
        if args.command == "compare":
            diffs = compare_csv(args.a, args.b, tuple(args.ignore_column or ["wall_time"]))
            for d in diffs:
                print(d)
            print("identical" if not diffs else f"{len(diffs)} difference(s)")
            return EXIT_OK if not diffs else EXIT_CHECK
        if args.command == "verify":
            only = None if not args.only else [int(v) for v in args.only.split(",")]
            results = acceptance.run_all(only, workers=args.workers, echo=True)
            return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK
        cfg = _config_from_args(args)
        workers = args.workers or cfg.get("workers", 1, cast=int)
        if args.command == "construct":
            res = cmd_construct(cfg, workers, args.quiet)
            code = res["code"]
            print(f"wrote {res['code_path']}  K={code.K}  R_c={code.rate:.6f}  R_s={code.source_rate:.6f}  "
                  f"bound={code.bound_pe:.3e}")
            print(f"wrote {res['z_csv']} and {res['z_sorted_csv']}")
        elif args.command == "simulate-source":
            print(f"wrote {cmd_simulate_source(cfg, workers, args.quiet)}")
        elif args.command == "simulate-channel":
            print(f"wrote {cmd_simulate_channel(cfg, workers, args.quiet)}")
        elif args.command == "check-degradation":
            path, ok = cmd_check_degradation(cfg, workers, args.quiet)
            print(f"wrote {path}: ordering {'holds' if ok else 'VIOLATED'}")
            return EXIT_OK if ok else EXIT_CHECK
        return EXIT_OK
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
