import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsvdwm.rng import MASK, XorShift64Star, hash_u64, permutation, splitmix64, uniform01


def xorshift64star_ref(x: int, n: int) -> list[int]:
    """Straight transcription of Vigna's xorshift64* (12, 25, 27)."""
    out = []
    for _ in range(n):
        x ^= x >> 12
        x ^= (x << 25) % 2**64
        x ^= x >> 27
        out.append(x * 2685821657736338717 % 2**64)
    return out


def test_splitmix_reference_values():
    # [PAPER-independent reference] published splitmix64 stream from state 0
    s, a = splitmix64(0)
    _, b = splitmix64(s)
    assert (a, b) == (0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4)


def test_hash_matches_sequential_stream():
    seq, s = [], 12345
    for _ in range(50):
        s, o = splitmix64(s)
        seq.append(o)
    assert hash_u64(12345, np.arange(50)).tolist() == seq


def test_xorshift_matches_reference():
    g = XorShift64Star(99)
    _, start = splitmix64(99)
    assert [g.next_u64() for _ in range(20)] == xorshift64star_ref(start, 20)


def test_seed_range():
    with pytest.raises(ValueError):
        XorShift64Star(-1)
    with pytest.raises(ValueError):
        XorShift64Star(MASK + 1)
    with pytest.raises(ValueError):
        XorShift64Star(1).below(0)


@given(st.integers(1, 300), st.integers(0, MASK))
def test_permutation_is_permutation(n, seed):
    p = permutation(n, seed)
    assert sorted(p.tolist()) == list(range(n))
    assert np.array_equal(p, permutation(n, seed))


def test_permutation_frozen_values():
    # [DERIVED] frozen outputs of the reference implementation
    assert permutation(10, 1).tolist() == [0, 1, 9, 4, 3, 7, 2, 6, 8, 5]
    assert permutation(10, 2).tolist() == [9, 0, 1, 2, 3, 6, 7, 4, 8, 5]


def test_below_is_roughly_uniform():
    g = XorShift64Star(7)
    counts = np.bincount([g.below(6) for _ in range(60000)], minlength=6)
    assert np.all(np.abs(counts - 10000) < 400)


def test_uniform01_range_and_moments():
    u = uniform01(3, np.arange(200000))
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.003
    assert abs(u.var() - 1 / 12) < 0.002


def test_uniform_streams_differ_by_seed():
    a, b = uniform01(1, np.arange(1000)), uniform01(2, np.arange(1000))
    assert np.mean(a == b) == 0.0
