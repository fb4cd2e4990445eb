from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clockspec import dynsys as ds
from clockspec.errors import PrecisionExhausted


def word(bits, **kw):
    return ds.BitWord(bits, **kw)


def test_dyadic_fraction_examples():
    assert ds.dyadic_fraction(word([1], tail=0), 0, 8) == 0.5
    assert ds.dyadic_fraction(word([0], tail=1), 1, 16) == 1 - 2.0 ** -16


@settings(max_examples=1000)
@given(st.lists(st.integers(0, 1), min_size=80, max_size=80), st.integers(0, 20), st.integers(1, 40))
def test_shift_is_the_doubling_map(bits, j, K):
    w = word(bits)
    lhs = ds.dyadic_fraction(w, j + 1, K, exact=True)
    assert lhs == ds.dyadic_map(ds.dyadic_fraction(w, j, K + 1, exact=True))
    assert ds.dyadic_fraction(w.shift(1), j, K, exact=True) == lhs


def test_lazy_word_is_access_order_independent():
    a = ds.BitWord(seed=4, realization=1, two_sided=True, window=8)
    b = ds.BitWord(seed=4, realization=1, two_sided=True, window=8)
    far = [a.bit(i) for i in (900, -700, 3, -1)]
    assert [b.bit(i) for i in (-1, 3, -700, 900)] == far[::-1]


def _baker_word(x_bits, y_bits):
    return word(x_bits, past=y_bits, tail=0, two_sided=True)


def test_baker_geometric_examples():
    assert ds.baker_map(Fraction(1, 4), Fraction(1, 2)) == (Fraction(1, 2), Fraction(1, 4))
    assert ds.baker_map(Fraction(3, 4), Fraction(0)) == (Fraction(1, 2), Fraction(1, 2))
    # (1/4, 1/2): x = .01, y = .1
    w = _baker_word([0, 1], [1])
    assert ds.baker_point(ds.baker_step(w), 8) == (Fraction(1, 2), Fraction(1, 4))


@settings(max_examples=300)
@given(st.lists(st.integers(0, 1), min_size=30, max_size=30),
       st.lists(st.integers(0, 1), min_size=30, max_size=30))
def test_baker_shift_matches_geometry(xb, yb):
    w = _baker_word(xb, yb)
    x, y = ds.baker_point(w, 40)
    assert ds.baker_point(ds.baker_step(w), 40) == ds.baker_map(x, y)
    assert ds.baker_point(ds.baker_step(ds.baker_step(w)), 40) == ds.baker_point(w.shift(2), 40)


def test_cylinder_diameters():
    assert ds.cylinder_diameter(ds.DYADIC, 3)[0] == 0.125
    assert ds.cylinder_diameter(ds.BAKER, 1) == (0.25, 0.5)
    for n in range(1, 40):
        for sysname in (ds.DYADIC, ds.BAKER):
            a, b = ds.cylinder_diameter(sysname, n), ds.cylinder_diameter(sysname, n + 1)
            assert b[0] == a[0] / 2


def test_baker_cylinder_is_sharp():
    # two words agreeing on -n..n can differ in x by almost 2^-(n+1) and in y by almost 2^-n
    n = 5
    lo = _baker_word([0] * (n + 1) + [0] * 30, [0] * n + [0] * 30)
    hi = _baker_word([0] * (n + 1) + [1] * 30, [0] * n + [1] * 30)
    (x0, y0), (x1, y1) = ds.baker_point(lo, n + 31), ds.baker_point(hi, n + 31)
    assert 2.0 ** -(n + 1) - (x1 - x0) < 2.0 ** -(n + 30)
    assert 2.0 ** -n - (y1 - y0) < 2.0 ** -(n + 29)


def test_cat_origin_fixed_and_inverse():
    p = ds.FixedPointT2(0, 0, 64, 64)
    q = ds.cat_map_step(p)
    assert (q.x, q.y) == (0, 0)
    r = ds.FixedPointT2.random(1, 0, 256)
    back = ds.cat_map_step(ds.cat_map_step(r), inverse=True)
    assert (back.x, back.y) == (r.x, r.y)


def _period_oracle(x, y):
    # brute-force iteration on numerators mod the common denominator
    d = math.lcm(x.denominator, y.denominator)
    a, b = x.numerator * (d // x.denominator), y.numerator * (d // y.denominator)
    p, t = (a, b), 0
    while True:
        p, t = ((2 * p[0] + p[1]) % d, (p[0] + p[1]) % d), t + 1
        if p == (a, b):
            return t


def test_rational_period():
    x, y = Fraction(1, 5), Fraction(2, 5)
    # by hand: (1/5, 2/5) -> (4/5, 3/5) -> (1/5, 2/5)
    assert ds.rational_period(x, y) == _period_oracle(x, y) == 2
    # dyadic rationals are represented exactly by the fixed-point torus
    x, y = Fraction(1, 8), Fraction(3, 8)
    period = _period_oracle(x, y)
    orbit = ds.cat_orbit(ds.FixedPointT2.from_fractions(x, y, 16), period)
    assert orbit[-1].as_fractions() == (x, y)
    assert all(p.as_fractions() != (x, y) for p in orbit[1:-1])


def test_cat_eigenvalues():
    lam = ds.toral_eigenvalues()
    assert lam == pytest.approx([(3 + math.sqrt(5)) / 2, (3 - math.sqrt(5)) / 2], rel=1e-14)


def test_cat_precision_budget():
    N = 1000
    orbit = ds.cat_orbit(ds.FixedPointT2.random(0, 0, 2 * N + 64), N)
    assert orbit[-1].remaining == 64 and all(p.remaining >= 0 for p in orbit)
    with pytest.raises(PrecisionExhausted):
        ds.cat_orbit(ds.FixedPointT2.random(0, 0, 20), 11)


def test_observable_locality():
    ind = ds.WindowObservable([0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0], 1, two_sided=True)
    # value depends on the last bit of the window -w..w, i.e. omega_1; agreement on [-1, 1] pins it
    assert ds.variation_estimate(ind, ds.BAKER, (1, 1), 200) == 0.0
    const = ds.WindowObservable([0.5, 0.5], 1)
    for n in (0, 3, 7):
        assert ds.variation_estimate(const, ds.DYADIC, (0, n), 50) == 0.0


def test_hoelder_observable_variation():
    f = ds.FunctionObservable(lambda x: x)
    est = [ds.variation_estimate(f, ds.DYADIC, (0, n), 400, seed=3) for n in range(1, 12)]
    assert all(e <= 2.0 ** -n for n, e in zip(range(1, 12), est))
    assert est[-1] < est[0] / 100


@pytest.mark.parametrize("system", [ds.DYADIC, ds.BAKER, ds.CAT])
def test_measure_preservation(system):
    samples = 1_000_000 if system != ds.CAT else 50_000
    bins = 20
    for counts in ds.pushforward_histogram(system, samples, bins, seed=2).values():
        expect = samples / bins
        sigma = math.sqrt(expect * (1 - 1 / bins))
        assert np.all(np.abs(counts - expect) <= 4 * sigma)
