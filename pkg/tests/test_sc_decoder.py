import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpolar.gfq import make_field
from qpolar.oracle import Enumeration, binary_reference_sc, posterior_llr
from qpolar.sc_decoder import (FrozenPolicy, FrozenSetInvalid, detect, lr_combine_even,
                               lr_combine_odd, sc_decode, with_zero)
from qpolar.transform import polar_decode_transform, polar_encode


@pytest.mark.parametrize("llr, expected", [
    ((-1, -2, -3, -0.5), 0),
    ((0.2, 3.0, -1, 0.1), 2),
    ((0.0, 0.0, 0.0, 0.0), 0),
])
def test_detect_q5(llr, expected):
    assert detect(np.array(llr)) == expected


def test_detect_tie_goes_low():
    assert detect(np.array([1.0, 1.0])) == 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=4, max_size=4), st.floats(-20, 20))
def test_detect_matches_full_argmax(llr, shift):
    # a common offset on the full (q-entry) vector leaves the decision alone
    full = with_zero(np.array(llr)) + shift
    assert detect(full[1:] - full[0]) == int(np.argmax(full))


def _lse_reference(f, left, right):
    L, R = with_zero(left), with_zero(right)
    out = np.empty(f.q)
    for u in range(f.q):
        terms = [L[f.sub_table[u, f.mul_table[f.alpha, v]]] + R[v] for v in range(f.q)]
        out[u] = np.logaddexp.reduce(terms)
    # floor at 500 below the most likely symbol, then reference symbol 0
    out = np.maximum(out - out.max(), -500.0)
    return out[1:] - out[0]


@pytest.mark.parametrize("q", [2, 3, 4, 5, 8, 9, 13, 16])
def test_odd_combine_matches_logsumexp(q, rng):
    f = make_field(q)
    for scale in (0.5, 5.0, 80.0, 400.0):
        left = rng.normal(scale=scale, size=(6, q - 1))
        right = rng.normal(scale=scale, size=(6, q - 1))
        got = lr_combine_odd(f, left, right)
        want = np.array([_lse_reference(f, a, b) for a, b in zip(left, right)])
        assert np.allclose(got, want, atol=1e-9, rtol=1e-11)


def test_odd_combine_extreme_inputs():
    f = make_field(7)
    left = np.full((1, 6), -500.0)
    right = np.full((1, 6), 500.0)
    got = lr_combine_odd(f, left, right)
    assert np.all(np.isfinite(got))
    assert np.allclose(got, _lse_reference(f, left[0], right[0]), atol=1e-9)


def test_even_combine_zero_prev_flat_left():
    f = make_field(5)
    right = np.array([0.3, -1.0, 2.0, 0.0])
    assert np.allclose(lr_combine_even(f, np.zeros(4), right, 0), right)


def test_binary_reductions(rng):
    f = make_field(2)
    l, r = rng.normal(scale=3, size=(2, 50, 1))
    odd = lr_combine_odd(f, l, r)
    assert np.allclose(odd, np.log((np.exp(l) + np.exp(r)) / (1 + np.exp(l + r))))
    assert np.allclose(lr_combine_even(f, l, r, 0), l + r)
    assert np.allclose(lr_combine_even(f, l, r, 1), r - l)


def test_matches_binary_reference(rng):
    # BPSK-like observations and a weight-based frozen set keep leaf LLRs away
    # from zero, where both decoders would only be comparing rounding noise
    N, B = 64, 40
    f = make_field(2)
    u = rng.integers(0, 2, size=(B, N))
    x = polar_decode_transform(f, u)
    y = 1 - 2 * x + rng.normal(scale=0.7, size=x.shape)
    llr = -2 * y / 0.49
    mask = np.array([bin(i).count("1") < 3 for i in range(N)])
    fs = np.flatnonzero(mask)
    res = sc_decode(f, llr[..., None], FrozenPolicy(N, fs, u[:, fs]))
    assert np.array_equal(res.u_hat, binary_reference_sc(llr, mask, u))


@pytest.mark.parametrize("q, N", [(3, 4), (4, 4), (5, 2), (2, 8)])
def test_genie_leaves_match_enumeration(q, N, rng):
    f = make_field(q)
    logp = rng.normal(scale=1.5, size=(N, q))
    init = logp[:, 1:] - logp[:, :1]
    en = Enumeration(f, logp)
    u = polar_encode(f, rng.integers(0, q, size=N))
    res = sc_decode(f, init, FrozenPolicy.genie(u))
    for i in range(N):
        assert np.allclose(res.leaf_llr[i], posterior_llr(en.posterior(i, u[:i])), atol=1e-9)


@pytest.mark.parametrize("q", [2, 3, 4, 7])
def test_noiseless_roundtrip(q, rng):
    f = make_field(q)
    N = 32
    u = rng.integers(0, q, size=(5, N))
    x = polar_decode_transform(f, u)
    full = np.full(x.shape + (q,), -40.0)
    np.put_along_axis(full, x[..., None], 0.0, -1)
    res = sc_decode(f, full[..., 1:] - full[..., :1], FrozenPolicy(N, [], np.zeros((0,))))
    assert np.array_equal(res.u_hat, u)
    assert np.array_equal(res.x_hat, x)


@pytest.mark.parametrize("q, N", [(2, 64), (3, 32), (5, 16), (4, 128)])
def test_workspace_bound(q, N, rng):
    f = make_field(q)
    init = rng.normal(size=(2, N, q - 1))
    res = sc_decode(f, init, FrozenPolicy(N, [], np.zeros((0,))), record=True)
    n = N.bit_length() - 1
    assert res.peak_llr_cells <= (q - 1) * N * (n + 1)
    ws = res.workspace
    # every lattice slot written exactly once
    assert np.all(ws.writes == 1)
    assert not np.isnan(ws.llr_lattice).any()


def test_frozen_values_imposed(rng):
    f = make_field(3)
    N = 8
    init = rng.normal(size=(N, 2))
    fs = np.array([0, 1, 2, 4])
    vals = np.array([2, 1, 0, 2])
    res = sc_decode(f, init, FrozenPolicy(N, fs, vals))
    assert np.array_equal(res.u_hat[fs], vals)


def test_batch_equals_single(rng):
    f = make_field(5)
    init = rng.normal(scale=2, size=(4, 16, 4))
    pol = FrozenPolicy(16, [0, 3, 5], [1, 2, 3])
    batch = sc_decode(f, init, pol).u_hat
    assert all(np.array_equal(batch[b], sc_decode(f, init[b], pol).u_hat) for b in range(4))


@pytest.mark.parametrize("fs, vals", [([3, 1], [0, 0]), ([0, 8], [0, 0]), ([0, 1], [0])])
def test_invalid_frozen(fs, vals):
    with pytest.raises(FrozenSetInvalid):
        FrozenPolicy(8, fs, vals)


def test_wrong_vector_length():
    with pytest.raises(ValueError):
        sc_decode(make_field(3), np.zeros((4, 3)), FrozenPolicy(4, [], np.zeros((0,))))


def test_odd_combine_uniform():
    assert np.array_equal(lr_combine_odd(make_field(5), np.zeros(4), np.zeros(4)), np.zeros(4))


def test_all_frozen_reencodes(rng):
    f = make_field(3)
    u = rng.integers(0, 3, size=4)
    res = sc_decode(f, rng.normal(size=(4, 2)), FrozenPolicy.genie(u))
    assert np.array_equal(res.x_hat, polar_decode_transform(f, u))


def test_clamp_keeps_decision():
    from qpolar.sc_decoder import clamp
    llr = np.array([3520.3, 6040.5, 7560.8, 8081.0])
    out = clamp(llr)
    assert np.abs(out).max() <= 500
    assert detect(out) == detect(llr) == 4
    # values already within range and within 500 of the top are untouched
    mid = np.array([-12.0, 40.0, 3.5])
    assert np.array_equal(clamp(mid), mid)


def test_high_snr_decisions_survive(rng):
    f = make_field(5)
    x = rng.integers(0, 5, size=(4, 16))
    full = -2000.0 * (np.arange(5) - x[..., None]) ** 2
    res = sc_decode(f, full[..., 1:] - full[..., :1], FrozenPolicy(16, [], np.zeros((0,))))
    assert np.array_equal(res.x_hat, x)
