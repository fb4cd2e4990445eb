import numpy as np
import pytest
from hypothesis import given, strategies as st

from clockspec import rng


def test_words_are_pure_functions_of_their_counters():
    a = rng.words(7, 3, rng.AMPLITUDE, np.arange(100))
    b = np.concatenate([rng.words(7, 3, rng.AMPLITUDE, np.arange(k, k + 10)) for k in range(0, 100, 10)])
    assert np.array_equal(a, b)


def test_broadcast_matches_scalar_calls():
    block = rng.words(1, np.arange(4)[:, None], rng.AMPLITUDE, np.arange(5)[None, :])
    for r in range(4):
        assert np.array_equal(block[r], rng.words(1, r, rng.AMPLITUDE, np.arange(5)))


def test_streams_seeds_and_realizations_differ():
    base = rng.words(1, 0, rng.AMPLITUDE, np.arange(8))
    assert not np.array_equal(base, rng.words(2, 0, rng.AMPLITUDE, np.arange(8)))
    assert not np.array_equal(base, rng.words(1, 1, rng.AMPLITUDE, np.arange(8)))
    assert not np.array_equal(base, rng.words(1, 0, rng.TORUS, np.arange(8)))


def test_uniform_moments():
    u = rng.uniforms(11, 0, rng.AUX, np.arange(1_000_000))
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 5 * np.sqrt(1 / 12 / u.size)
    assert abs(u.var() - 1 / 12) < 1e-3


def test_negative_indices_rejected():
    with pytest.raises(ValueError):
        rng.words(0, -1, rng.AMPLITUDE, [0])


@given(st.integers(0, 500), st.integers(1, 300))
def test_bit_windows_are_consistent(start, count):
    whole = rng.bits(5, 2, rng.BITS_FORWARD, 0, start + count)
    assert np.array_equal(rng.bits(5, 2, rng.BITS_FORWARD, start, count), whole[start:])


def test_bits_read_words_most_significant_first():
    w = int(rng.words(3, 0, rng.BITS_FORWARD, [0])[0])
    b = rng.bits(3, 0, rng.BITS_FORWARD, 0, 64)
    assert int("".join(map(str, b)), 2) == w
