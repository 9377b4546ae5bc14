import numpy as np
import pytest

from qpolar import cli
from qpolar.cli import Config, ConfigError, compare_csv, main, read_config, read_csv
from qpolar.construction import PolarCode, exact_z, symmetric_channel
from qpolar.gfq import make_field


def write(path, text):
    path.write_text(text)
    return path


@pytest.fixture
def bsc_cfg(tmp_path):
    return write(tmp_path / "bsc.cfg", "model = symmetric\nq = 2\neps = 0.1\nn = 8\n"
                 "estimator = exact\ncriterion = fixed-rate:4\noutput = out/bsc.code\n")


def test_read_config_include(tmp_path):
    (tmp_path / "sub").mkdir()
    write(tmp_path / "sub" / "base.cfg", "A = 1\nb = 2  # comment\n")
    cfg = read_config(write(tmp_path / "top.cfg", "include = sub/base.cfg\nb = 3\n"))
    assert cfg == {"a": "1", "b": "3"}


def test_read_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_config(write(tmp_path / "bad.cfg", "just words\n"))
    with pytest.raises(ConfigError):
        read_config(write(tmp_path / "loop.cfg", "include = loop.cfg\n"))
    with pytest.raises(ConfigError):
        read_config(tmp_path / "missing.cfg")


def test_config_metadata_skips_paths():
    cfg = Config({"output": "x", "workers": "4", "seed": "1", "n": "8"})
    assert cfg.metadata() == {"n": "8", "seed": "1"}
    with pytest.raises(ConfigError):
        cfg.get("trials")
    with pytest.raises(ConfigError):
        cfg.get("seed", cast=cli._positive_int) and Config({"t": "x"}).get("t", cast=int)


@pytest.mark.parametrize("text", ["0", "-3", "2.5", "abc"])
def test_positive_int_rejects(text):
    with pytest.raises(ValueError):
        cli._positive_int(text)


def test_parse_matrix():
    assert cli.parse_matrix("0.9 0.1; 0.2, 0.8").tolist() == [[0.9, 0.1], [0.2, 0.8]]
    with pytest.raises(ConfigError):
        cli.parse_matrix("1 0; 1")


@pytest.mark.parametrize("spec, q", [("pam:5", 5), ("rqam:8", 64), ("circ:builtin", 67)])
def test_make_constellation(spec, q):
    assert cli.make_constellation(spec).q == q


@pytest.mark.parametrize("spec", ["pam:6", "hex:3", "rqam:x", "circ:/nonexistent/file"])
def test_make_constellation_errors(spec):
    with pytest.raises(ConfigError):
        cli.make_constellation(spec)


def test_independent_setup_energy():
    cfg = Config({"constellation": "rqam:8", "coding": "independent"})
    axis, nm, indep = cli.channel_setup(cfg, 20.0)
    assert indep and nm.real and axis.q == 8
    # two axes together carry unit energy; noise per axis is es / (2 SNR)
    assert 2 * axis.es == pytest.approx(1.0)
    assert nm.sigma2 == pytest.approx(1 / (2 * 100))


def test_construct_exact_matches_oracle(bsc_cfg):
    assert main(["construct", str(bsc_cfg), "-q"]) == 0
    meta, header, rows = read_csv(bsc_cfg.parent / "out" / "bsc.code.z.csv")
    assert header == ["index", "z", "stderr"]
    z = np.array([float(r[1]) for r in rows])
    assert np.array_equal(z, exact_z(make_field(2), symmetric_channel(2, 0.1), 8))
    code = PolarCode.load(bsc_cfg.parent / "out" / "bsc.code")
    assert code.K == 4 and meta["code_id"] == code.code_id
    _, sh, srows = read_csv(bsc_cfg.parent / "out" / "bsc.code.z.sorted.csv")
    zs = [float(r[sh.index("z")]) for r in srows]
    assert zs == sorted(zs)


def test_construct_trials_zero(tmp_path):
    cfg = write(tmp_path / "c.cfg", "model = symmetric\nq = 3\neps = 0.1\nn = 8\ntrials = 0\n"
                "criterion = fixed-rate:2\noutput = c.code\n")
    assert main(["construct", str(cfg), "-q"]) == 2
    assert not (tmp_path / "c.code").exists()


@pytest.mark.parametrize("extra", ["criterion = budget:3", "estimator = median", "model = lattice",
                                   "n = 12"])
def test_construct_config_errors(bsc_cfg, extra):
    assert main(["construct", str(bsc_cfg), "--set", extra.replace(" = ", "="), "-q"]) == 2


def test_simulate_source_noiseless_and_deterministic(tmp_path):
    write(tmp_path / "perfect.src", "qpolar-source 1\nq 3\nny 3\npx 0.2 0.3 0.5\n"
          "cond 0 1 0 0\ncond 1 0 1 0\ncond 2 0 0 1\n")
    cfg = write(tmp_path / "s.cfg", "model = source\nsource = perfect.src\nn = 16\ntrials = 64\n"
                "criterion = fixed-rate:16\noutput = s.code\ncode = s.code\nframes = 40\nseed = 3\n")
    assert main(["construct", str(cfg), "-q"]) == 0
    assert main(["simulate-source", str(cfg), "-q", "--set", "output=a.csv"]) == 0
    assert main(["simulate-source", str(cfg), "-q", "--set", "output=b.csv", "--workers", "3"]) == 0
    meta, header, rows = read_csv(tmp_path / "a.csv")
    assert rows[0][header.index("ser")] == "0.0" and rows[0][header.index("wer")] == "0.0"
    assert "code_id" in meta and "output" not in meta
    assert compare_csv(tmp_path / "a.csv", tmp_path / "b.csv") == []
    assert main(["compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")]) == 0


def test_simulate_channel_high_snr(tmp_path):
    cfg = write(tmp_path / "ch.cfg", "model = awgn\nconstellation = pam:5\nsnr_db = 30\nn = 16\n"
                "trials = 64\ncriterion = fixed-rate:4\noutput = ch.code\ncode = ch.code\nframes = 20\n")
    assert main(["construct", str(cfg), "-q"]) == 0
    assert main(["simulate-channel", str(cfg), "-q", "--set", "output=ch.csv", "--snr-db", "30,40"]) == 0
    meta, header, rows = read_csv(tmp_path / "ch.csv")
    assert [r[0] for r in rows] == ["30.0", "40.0"]
    assert all(r[header.index("symbol_errors")] == "0" for r in rows)
    assert float(meta["R_bits"]) == pytest.approx(4 / 16 * np.log2(5))
    assert "snr_convention" in meta
    # code over F_5 cannot drive a 4-point constellation
    assert main(["simulate-channel", str(cfg), "-q", "--constellation", "pam:4"]) == 2


def test_simulate_independent_axes(tmp_path):
    cfg = write(tmp_path / "ind.cfg", "model = awgn\nconstellation = rqam:4\ncoding = independent\n"
                "snr_db = 35\nn = 8\ntrials = 32\ncriterion = fixed-rate:4\noutput = i.code\n"
                "code = i.code\nframes = 16\n")
    assert main(["construct", str(cfg), "-q"]) == 0
    assert PolarCode.load(tmp_path / "i.code").field.q == 4
    assert main(["simulate-channel", str(cfg), "-q", "--set", "output=i.csv"]) == 0
    meta, header, rows = read_csv(tmp_path / "i.csv")
    assert float(meta["R_bits"]) == pytest.approx(2 * 0.5 * 2)
    assert rows[0][header.index("symbols")] == str(16 * 4)


def test_missing_code_file(tmp_path):
    cfg = write(tmp_path / "m.cfg", "code = nothing.code\nframes = 3\noutput = m.csv\n")
    assert main(["simulate-source", str(cfg)]) == 2


def test_check_degradation(tmp_path):
    cfg = write(tmp_path / "d.cfg", "w_channel = 0.9 0.1; 0.1 0.9\nw_degrade = 0.95 0.05; 0.05 0.95\n"
                "n = 4\noutput = d.csv\n")
    assert main(["check-degradation", str(cfg)]) == 0
    meta, header, rows = read_csv(tmp_path / "d.csv")
    assert meta["holds"] == "True" and len(rows) == 4
    assert main(["check-degradation", str(cfg), "--set", "w_degrade=1 0"]) == 2


def test_plot(bsc_cfg, tmp_path):
    main(["construct", str(bsc_cfg), "-q"])
    out = bsc_cfg.parent / "out"
    assert main(["plot", str(out / "bsc.code.z.sorted.csv"), str(out / "bsc.code.z.csv"),
                 "--out-dir", str(tmp_path / "svg")]) == 0
    svgs = sorted((tmp_path / "svg").glob("*.svg"))
    assert len(svgs) == 2
    first = svgs[0].read_text()
    assert first.startswith("<?xml") and "<svg" in first
    main(["plot", str(out / "bsc.code.z.sorted.csv"), "--out-dir", str(tmp_path / "again")])
    assert (tmp_path / "again" / svgs[0].name).read_text() == first


def test_plot_empty_csv(tmp_path):
    empty = write(tmp_path / "empty.csv", "# kind=channel-sim\n")
    assert main(["plot", str(empty), "--combine", str(tmp_path / "x.svg")]) == 2
    assert not (tmp_path / "x.svg").exists()
    header_only = write(tmp_path / "h.csv", "snr_db,ser\n")
    assert main(["plot", str(header_only)]) == 2
    assert not list(tmp_path.glob("*.svg"))


def test_compare_reports_difference(tmp_path):
    a = write(tmp_path / "a.csv", "# seed=1\nx,wall_time\n1,0.5\n")
    b = write(tmp_path / "b.csv", "# seed=1\nx,wall_time\n1,0.9\n")
    c = write(tmp_path / "c.csv", "# seed=1\nx,wall_time\n2,0.5\n")
    assert compare_csv(a, b) == []
    assert main(["compare", str(a), str(c)]) == 3
    assert main(["compare", str(a), str(b), "--ignore-column", "none"]) == 3


def test_verify_exit_codes(monkeypatch):
    from qpolar import acceptance

    def fake(only, workers=1, echo=False):
        return [acceptance.CheckResult(n, "stub", n != 4, "", 0.0) for n in only]
    monkeypatch.setattr(acceptance, "run_all", fake)
    assert main(["verify", "--only", "3,5"]) == 0
    assert main(["verify", "--only", "3,4"]) == 3
    assert main(["verify", "--only", "x"]) == 2


def test_verify_real_check():
    assert main(["verify", "--only", "5"]) == 0


def test_verify_unknown_criterion():
    assert main(["verify", "--only", "42"]) == 2
