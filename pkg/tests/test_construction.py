import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpolar.construction import (CodeFileError, Criterion, DmcChannel, EmptyInformationSet, PolarCode,
                                 ShapeMismatch, TooLarge, ZEstimate, check_degradation_ordering,
                                 degrade_channel, error_bound, estimate_z_mc, exact_z, select_info_set,
                                 symmetric_channel, tree_sum)
from qpolar.gfq import make_field

# exact values for the ternary symmetric channel, eps = 0.2, N = 4 (frozen)
Z_Q3_EPS02_N4 = [0.96034518, 0.70547463, 0.64331091, 0.19637048]


def erasure_channel(q, e):
    W = np.zeros((q, q + 1))
    W[np.arange(q), np.arange(q)] = 1 - e
    W[:, q] = e
    return DmcChannel(W)


def test_exact_frozen_values():
    z = exact_z(make_field(3), symmetric_channel(3, 0.2), 4)
    assert np.allclose(z, Z_Q3_EPS02_N4, atol=1e-8)


@pytest.mark.parametrize("q, eps", [(2, 0.1), (3, 0.2), (5, 0.3), (4, 0.05)])
def test_single_use_closed_form(q, eps):
    want = 2 * math.sqrt((1 - eps) * eps / (q - 1)) + (q - 2) * eps / (q - 1)
    assert exact_z(make_field(q), symmetric_channel(q, eps), 1)[0] == pytest.approx(want, rel=1e-12)


def test_binary_erasure_n2():
    e = 0.3
    z = exact_z(make_field(2), erasure_channel(2, e), 2)
    assert np.allclose(z, [2 * e - e * e, e * e])


def test_qary_erasure_recursion():
    e, N = 0.4, 4
    z = [e]
    while len(z) < N:
        z = [w for v in z for w in (1 - (1 - v) ** 2, v * v)]
    assert np.allclose(exact_z(make_field(3), erasure_channel(3, e), N), z)


def test_uniform_output_gives_one():
    W = np.full((3, 2), 0.5)
    assert np.allclose(exact_z(make_field(3), DmcChannel(W), 2), 1.0)


@pytest.mark.parametrize("mode", ["averaged", "fixed:0", "fixed:2", "posterior"])
def test_mc_agrees_with_exact(mode):
    f = make_field(3)
    ch = symmetric_channel(3, 0.2)
    kind, _, beta = mode.partition(":")
    est = estimate_z_mc(f, ch, 4, 20_000, seed=3, mode=kind, beta=int(beta or 0))
    assert np.all(np.abs(est.z - Z_Q3_EPS02_N4) < 5 * est.stderr + 1e-8)


def test_posterior_mode_on_reliable_indices():
    # indicator estimators read low where the posterior is concentrated
    f, ch = make_field(5), symmetric_channel(5, 0.01)
    exact = exact_z(f, ch, 4)
    post = estimate_z_mc(f, ch, 4, 2000, seed=4, mode="posterior")
    avg = estimate_z_mc(f, ch, 4, 2000, seed=4, mode="averaged")
    assert post.mode == "posterior"
    assert np.all(np.abs(post.z - exact) < 5 * post.stderr + 1e-8)
    assert avg.z[3] < exact[3] / 2


def test_mc_binary_agrees_with_exact():
    f = make_field(2)
    ch = symmetric_channel(2, 0.11)
    est = estimate_z_mc(f, ch, 8, 20_000, seed=1)
    assert np.all(np.abs(est.z - exact_z(f, ch, 8)) < 5 * est.stderr + 1e-8)


def test_perfect_side_information():
    est = estimate_z_mc(make_field(3), symmetric_channel(3, 0.0), 16, 10_000, seed=0)
    assert est.z.max() < 1e-3


def test_worker_count_irrelevant():
    f, ch = make_field(3), symmetric_channel(3, 0.1)
    a = estimate_z_mc(f, ch, 16, 200, seed=9, workers=1, chunk=32)
    b = estimate_z_mc(f, ch, 16, 200, seed=9, workers=3, chunk=32)
    assert np.array_equal(a.z, b.z) and np.array_equal(a.stderr, b.stderr)


def test_tree_sum_order_fixed():
    parts = [np.array([0.1]), np.array([0.2]), np.array([0.3])]
    assert tree_sum(list(parts))[0] == (0.1 + 0.2) + 0.3


def test_mc_argument_checks():
    f = make_field(3)
    with pytest.raises(ValueError):
        estimate_z_mc(f, symmetric_channel(3, 0.1), 8, 0, seed=0)
    with pytest.raises(ShapeMismatch):
        estimate_z_mc(f, symmetric_channel(2, 0.1), 8, 10, seed=0)


def test_exact_budget():
    with pytest.raises(TooLarge):
        exact_z(make_field(3), symmetric_channel(3, 0.1), 16)


def test_degradation_bsc():
    better = symmetric_channel(2, 0.1)
    worse = degrade_channel(better, symmetric_channel(2, 0.05).W)
    reports = check_degradation_ordering(make_field(2), worse, better, 4)
    assert all(r.holds for r in reports)
    assert all(r.z_degraded > r.z_better for r in reports)


def test_degrade_shape_checks():
    with pytest.raises(ShapeMismatch):
        degrade_channel(symmetric_channel(3, 0.1), np.eye(2))
    with pytest.raises(ShapeMismatch):
        DmcChannel([[0.5, 0.4], [0.5, 0.5]])


def _z(values):
    v = np.asarray(values, dtype=float)
    return ZEstimate(v, np.zeros_like(v), 100)


def test_select_criteria():
    f = make_field(3)
    z = _z([0.9, 0.01, 0.3, 0.001, 0.05, 0.5, 0.02, 0.0001])
    assert select_info_set(f, z, Criterion("per-index", 0.04)).info_set.tolist() == [1, 3, 6, 7]
    assert select_info_set(f, z, Criterion("fixed-rate", 3)).info_set.tolist() == [1, 3, 7]
    code = select_info_set(f, z, Criterion("sum-bound", 0.0312))
    assert code.info_set.tolist() == [1, 3, 6, 7]
    assert error_bound(code) == pytest.approx(2 * 0.0311)
    with pytest.raises(EmptyInformationSet):
        select_info_set(f, z, Criterion("per-index", 1e-5))


def test_select_ties_by_index():
    code = select_info_set(make_field(2), _z([0.2, 0.1, 0.1, 0.1]), Criterion("fixed-rate", 2))
    assert code.info_set.tolist() == [1, 2]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=8, max_size=8), st.floats(0.01, 1), st.floats(0.01, 1))
def test_per_index_monotone(z, t1, t2):
    lo, hi = sorted((t1, t2))
    f = make_field(2)
    try:
        small = set(select_info_set(f, _z(z), Criterion("per-index", lo)).info_set)
    except EmptyInformationSet:
        small = set()
    try:
        big = set(select_info_set(f, _z(z), Criterion("per-index", hi)).info_set)
    except EmptyInformationSet:
        big = set()
    assert small <= big


@pytest.mark.parametrize("text, kind, value", [
    ("sum-bound:1e-4", "sum-bound", 1e-4), ("per-index:0.01", "per-index", 0.01),
    ("fixed-rate:12", "fixed-rate", 12)])
def test_criterion_parse(text, kind, value):
    c = Criterion.parse(text)
    assert (c.kind, c.value) == (kind, value)


@pytest.mark.parametrize("text", ["sum-bound", "budget:3"])
def test_criterion_parse_bad(text):
    with pytest.raises(ValueError):
        Criterion.parse(text)


def test_code_file_roundtrip(tmp_path):
    f = make_field(9)
    est = estimate_z_mc(f, symmetric_channel(9, 0.1), 8, 64, seed=2)
    code = select_info_set(f, est, Criterion("fixed-rate", 3), meta={"seed": 2})
    path = code.save(tmp_path / "sub" / "c.code")
    back = PolarCode.load(path)
    assert back.info_set.tolist() == code.info_set.tolist()
    assert np.array_equal(back.z.z, code.z.z)
    assert back.criterion == code.criterion
    assert back.code_id == code.code_id
    assert back.bound_pe == code.bound_pe


@pytest.mark.parametrize("text", ["", "garbage\n", "qpolar-code 1\nq 3\nN 4\nend\n"])
def test_code_file_errors(text):
    with pytest.raises(CodeFileError):
        PolarCode.loads(text)


def test_rates():
    code = PolarCode(make_field(3), 8, [5, 6, 7])
    assert code.K == 3 and code.rate == 3 / 8 and code.source_rate == 5 / 8
    assert code.frozen_set.tolist() == [0, 1, 2, 3, 4]


def test_deterministic_source_zero():
    joint = DmcChannel(np.eye(3))
    joint.joint = np.array([[1.0, 0, 0], [0, 0, 0], [0, 0, 0]])
    assert exact_z(make_field(3), joint, 1)[0] == 0.0


def test_degrade_identity_and_rank_one():
    ch = symmetric_channel(3, 0.2)
    assert np.allclose(degrade_channel(ch, np.eye(3)).W, ch.W)
    useless = degrade_channel(ch, np.tile([0.2, 0.5, 0.3], (3, 1)))
    assert np.allclose(useless.W, useless.W[0])
    reports = check_degradation_ordering(make_field(3), degrade_channel(ch, np.eye(3)), ch, 2)
    assert all(abs(r.z_degraded - r.z_better) < 1e-12 for r in reports)


def test_symmetric_cascade_closed_form():
    q, e1, e2 = 3, 0.2, 0.1
    got = degrade_channel(symmetric_channel(q, e1), symmetric_channel(q, e2).W)
    e = 1 - ((1 - e1) * (1 - e2) + e1 * e2 / (q - 1))
    assert np.allclose(got.W, symmetric_channel(q, e).W)
    reports = check_degradation_ordering(make_field(q), got, symmetric_channel(q, e1), 2)
    assert all(r.z_degraded > r.z_better for r in reports)


def test_degradation_mc_mode():
    better = symmetric_channel(3, 0.1)
    worse = degrade_channel(better, symmetric_channel(3, 0.1).W)
    assert all(r.holds for r in check_degradation_ordering(make_field(3), worse, better, 8,
                                                            mode="mc", trials=500))


def test_select_full_rate_zero_bound():
    code = select_info_set(make_field(2), _z(np.zeros(8)), Criterion("fixed-rate", 8))
    assert code.info_set.tolist() == list(range(8)) and error_bound(code) == 0


@pytest.mark.parametrize("q, z, want", [(2, [0.01, 0.9], 0.01), (5, [1e-5, 1.5e-5, 0.7], 1e-4)])
def test_error_bound_examples(q, z, want):
    code = select_info_set(make_field(q), _z(z), Criterion("per-index", 0.5))
    assert error_bound(code) == pytest.approx(want)
