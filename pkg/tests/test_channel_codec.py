import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpolar import gfq
from qpolar.channel_codec import (FrameFormatError, FrozenStream, MessageLengthMismatch, channel_decode,
                                  channel_encode, format_frames, noiseless_llr, parse_frames, splitmix64)
from qpolar.construction import PolarCode, estimate_z_mc, select_info_set, Criterion
from qpolar.gfq import make_field
from qpolar.modem_awgn import AwgnSampler, NoiseModel, init_llr, make_pam, transmit
from qpolar.oracle import binary_reference_sc, explicit_gn


def _code(q, N, info):
    return PolarCode(make_field(q), N, np.asarray(info, dtype=np.int64))


def test_splitmix_reference():
    # first outputs of the reference SplitMix64 generator seeded with 0
    assert int(splitmix64(0, 0)) == 0xE220A8397B1DCDAF
    assert int(splitmix64(0, 1)) == 0x6E789E6AA1B965F4


def test_stream_random_access():
    s = FrozenStream(7, make_field(5))
    a = s.take(10)
    b = s.take(5)
    assert np.array_equal(np.concatenate([a, b]), FrozenStream(7, make_field(5)).at(np.arange(15)))
    assert s.cursor == 15


def test_stream_roughly_uniform():
    v = FrozenStream(1, make_field(7)).take(70_000)
    counts = np.bincount(v, minlength=7)
    assert counts.min() > 9_500 and counts.max() < 10_500


def test_full_rate_is_inverse_transform(rng):
    f = make_field(3)
    s = rng.integers(0, 3, size=8)
    from qpolar.transform import polar_decode_transform
    assert np.array_equal(channel_encode(_code(3, 8, range(8)), s, FrozenStream(0, f)),
                          polar_decode_transform(f, s))


def test_zero_rate_depends_on_seed_only():
    code = _code(5, 16, [])
    f = code.field
    a = channel_encode(code, np.zeros(0, dtype=int), FrozenStream(11, f))
    b = channel_encode(code, np.zeros(0, dtype=int), FrozenStream(11, f))
    c = channel_encode(code, np.zeros(0, dtype=int), FrozenStream(12, f))
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_matches_matrix_oracle():
    f = make_field(3)
    code = _code(3, 8, [3, 5, 6, 7])
    s = np.array([2, 0, 1, 1])
    u = np.empty(8, dtype=np.int64)
    u[[3, 5, 6, 7]] = s
    u[[0, 1, 2, 4]] = FrozenStream(99, f).take(4)
    _, Ginv = explicit_gn(f, 8)
    assert np.array_equal(channel_encode(code, s, FrozenStream(99, f)), gfq.matvec(f, u, Ginv))


def test_batch_takes_stream_in_order(rng):
    code = _code(7, 16, range(8, 16))
    f = code.field
    s = rng.integers(0, 7, size=(3, 8))
    batch = channel_encode(code, s, FrozenStream(5, f))
    st_ = FrozenStream(5, f)
    assert all(np.array_equal(batch[b], channel_encode(code, s[b], st_)) for b in range(3))


@settings(max_examples=30, deadline=None)
@given(q=st.sampled_from([2, 3, 4, 5, 8]), n=st.integers(1, 6), seed=st.integers(0, 2**32), data=st.data())
def test_noiseless_roundtrip(q, n, seed, data):
    N = 1 << n
    info = sorted(data.draw(st.sets(st.integers(0, N - 1))))
    code = _code(q, N, info)
    s = np.array(data.draw(st.lists(st.integers(0, q - 1), min_size=len(info), max_size=len(info))),
                 dtype=np.int64)
    x = channel_encode(code, s, FrozenStream(seed, code.field))
    s_hat, res = channel_decode(code, noiseless_llr(q, x), FrozenStream(seed, code.field), return_result=True)
    assert np.array_equal(s_hat, s)
    assert np.array_equal(res.x_hat, x)


def test_binary_end_to_end_matches_reference():
    f = make_field(2)
    N, frames, sigma = 64, 1000, 0.8
    nm = NoiseModel(sigma**2, real=True)
    c = make_pam(2)
    z = estimate_z_mc(f, AwgnSampler(c, nm), N, 2000, seed=1)
    code = select_info_set(f, z, Criterion("fixed-rate", N // 2))
    rng = np.random.default_rng(2)
    s = rng.integers(0, 2, size=(frames, code.K))
    x = channel_encode(code, s, FrozenStream(3, f))
    llr = init_llr(c, transmit(c, x, nm, rng=rng), nm)
    s_hat, res = channel_decode(code, llr, FrozenStream(3, f), return_result=True)
    mask = np.ones(N, dtype=bool)
    mask[code.info_set] = False
    ref = binary_reference_sc(llr[..., 0], mask, res.u_hat)
    assert np.array_equal(ref, res.u_hat)


def test_message_length():
    code = _code(3, 8, [6, 7])
    with pytest.raises(MessageLengthMismatch):
        channel_encode(code, [1, 2, 0], FrozenStream(0, code.field))
    with pytest.raises(ValueError):
        channel_encode(code, [1, 5], FrozenStream(0, code.field))


@pytest.mark.parametrize("q", [2, 5, 16, 17, 67, 256])
def test_frame_text_roundtrip(q, rng):
    frames = rng.integers(0, q, size=(4, 16))
    assert np.array_equal(parse_frames(format_frames(frames, q), q), frames)


@pytest.mark.parametrize("text", ["0g\n", "012\n", "0102\n01\n", "ff\n"])
def test_frame_text_errors(text):
    with pytest.raises(FrameFormatError):
        parse_frames(text, 67)
