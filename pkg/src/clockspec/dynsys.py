"""Exact symbolic dynamics: dyadic map, baker's map and the cat map.

None of the maps is ever iterated in floating point.  The dyadic and baker
maps act on bit words (left shift), the cat map on fixed-point torus points
stored as Python integers with an explicit precision budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import rng
from .errors import ConfigError, PrecisionExhausted

DYADIC = "dyadic"
BAKER = "baker"
CAT = "cat"

CAT_MATRIX = ((2, 1), (1, 1))
_CAT_INVERSE = ((1, -1), (-1, 2))
# ceil(log2 of the expanding eigenvalue (3 + sqrt 5)/2)
CAT_GUARD_BITS = 2

_CHUNK = 256


class BitWord:
    """A one- or two-sided binary word with lazy extension.

    Bits are either given explicitly (``bits`` for indices 0, 1, ... and
    ``past`` for indices -1, -2, ...) with a constant ``tail`` beyond them, or
    drawn from the counter-based stream ``(seed, realization)``.  A window
    ``[-window, window]`` is materialized up front; anything beyond is fetched
    on demand, and since draws are counter-based the result does not depend
    on access order.
    """

    def __init__(self, bits: Sequence[int] | None = None, *, past: Sequence[int] | None = None,
                 tail: int | None = None, seed: int | None = None, realization: int = 0,
                 two_sided: bool = False, window: int = 64):
        if bits is None and seed is None:
            raise ConfigError("BitWord needs explicit bits or a seed")
        if tail not in (None, 0, 1):
            raise ConfigError("tail must be 0, 1 or None")
        self.two_sided = two_sided
        self.seed = seed
        self.realization = realization
        self.tail = tail
        self.offset = 0
        self._fwd = np.asarray(bits if bits is not None else [], dtype=np.uint8)
        self._bwd = np.asarray(past if past is not None else [], dtype=np.uint8)
        self._explicit = bits is not None
        if np.any(self._fwd > 1) or np.any(self._bwd > 1):
            raise ConfigError("bits must be 0 or 1")
        if seed is not None and not self._explicit:
            self._extend_fwd(window + 1)
            if two_sided:
                self._extend_bwd(window)

    def _extend_fwd(self, upto: int) -> None:
        have = len(self._fwd)
        if upto <= have or self._explicit:
            return
        upto = max(upto, have + _CHUNK)
        more = rng.bits(self.seed, self.realization, rng.BITS_FORWARD, have, upto - have)
        self._fwd = np.concatenate([self._fwd, more])

    def _extend_bwd(self, upto: int) -> None:
        have = len(self._bwd)
        if upto <= have or self._explicit:
            return
        upto = max(upto, have + _CHUNK)
        more = rng.bits(self.seed, self.realization, rng.BITS_BACKWARD, have, upto - have)
        self._bwd = np.concatenate([self._bwd, more])

    def _absolute(self, a: int) -> int:
        if a >= 0:
            if a >= len(self._fwd):
                if self._explicit:
                    if self.tail is None:
                        raise IndexError(f"bit {a} beyond the explicit word")
                    return self.tail
                self._extend_fwd(a + 1)
            return int(self._fwd[a])
        if not self.two_sided:
            raise IndexError("negative index on a one-sided word")
        b = -a - 1
        if b >= len(self._bwd):
            if self._explicit:
                if self.tail is None:
                    raise IndexError(f"bit {a} beyond the explicit word")
                return self.tail
            self._extend_bwd(b + 1)
        return int(self._bwd[b])

    def bit(self, i: int) -> int:
        a = i + self.offset
        if not self.two_sided and a < 0:
            raise IndexError("negative index on a one-sided word")
        return self._absolute(a)

    def bits(self, lo: int, hi: int) -> np.ndarray:
        """Bits with indices ``lo <= i < hi``."""
        return np.array([self.bit(i) for i in range(lo, hi)], dtype=np.uint8)

    def shift(self, k: int = 1) -> "BitWord":
        """Left shift by ``k``; shares storage with ``self``."""
        if k < 0 and not self.two_sided:
            raise ValueError("a one-sided word cannot be shifted right")
        new = object.__new__(BitWord)
        new.__dict__.update(self.__dict__)
        new.offset = self.offset + k
        return new


def dyadic_fraction(word: BitWord, j: int, K: int, exact: bool = False):
    """``{2^j theta}`` from bits ``j .. j+K-1`` of the word.

    The truncation error is at most ``2**-K``.  With ``exact=True`` a
    :class:`~fractions.Fraction` is returned, otherwise a float (exact for
    ``K <= 53``).
    """
    if K < 1:
        raise ValueError("K must be positive")
    v = 0
    for i in range(K):
        v = (v << 1) | word.bit(j + i)
    if exact:
        return Fraction(v, 1 << K)
    return math.ldexp(v, -K) if K <= 1000 else float(Fraction(v, 1 << K))


def dyadic_map(x):
    """``x -> {2x}``; exact for Fractions, for floats only as long as bits remain."""
    y = 2 * x
    return y - math.floor(y)


def baker_step(word: BitWord) -> BitWord:
    """Baker's transform in symbolic form: left shift of a two-sided word."""
    if not word.two_sided:
        raise ConfigError("baker_step needs a two-sided word")
    return word.shift(1)


def baker_point(word: BitWord, K: int) -> tuple[Fraction, Fraction]:
    """``(x, y)`` from K forward bits and K backward bits (truncated)."""
    x = sum(Fraction(word.bit(i), 1 << (i + 1)) for i in range(K))
    y = sum(Fraction(word.bit(-i), 1 << i) for i in range(1, K + 1))
    return x, y


def baker_map(x, y):
    """Geometric baker's map C o E on the unit square."""
    x2, y2 = 2 * x, y / 2
    if x2 < 1:
        return x2, y2
    return x2 - 1, y2 + Fraction(1, 2) if isinstance(y2, Fraction) else y2 + 0.5


def cylinder_diameter(system: str, n: int) -> tuple[float, float | None]:
    """Diameter of a cylinder set of depth ``n``.

    Dyadic: points sharing bits ``0 .. n-1`` form an interval of length
    ``2**-n``.  Baker: fixing ``omega_{-n} .. omega_n`` pins ``n+1`` bits of
    x and ``n`` bits of y.
    """
    if n < 1:
        raise ValueError("depth must be >= 1")
    if system == DYADIC:
        return math.ldexp(1.0, -n), None
    if system == BAKER:
        return math.ldexp(1.0, -(n + 1)), math.ldexp(1.0, -n)
    raise ConfigError(f"closed-form cylinder diameter not available for {system!r}")


# --- torus -----------------------------------------------------------------

@dataclass(frozen=True)
class FixedPointT2:
    """Point of the 2-torus, coordinates ``x / 2**precision``.

    ``remaining`` counts the bits that still carry information about the
    original real point; every cat-map step spends ``CAT_GUARD_BITS``.
    """

    x: int
    y: int
    precision: int
    remaining: int

    @classmethod
    def from_fractions(cls, x, y, precision: int) -> "FixedPointT2":
        scale = 1 << precision
        fx, fy = Fraction(x) % 1, Fraction(y) % 1
        return cls(math.floor(fx * scale), math.floor(fy * scale), precision, precision)

    @classmethod
    def random(cls, seed: int, realization: int, precision: int) -> "FixedPointT2":
        nw = (precision + 63) // 64
        w = rng.words(seed, realization, rng.TORUS, np.arange(2 * nw))
        xs = int.from_bytes(w[:nw].astype(">u8").tobytes(), "big") >> (64 * nw - precision)
        ys = int.from_bytes(w[nw:].astype(">u8").tobytes(), "big") >> (64 * nw - precision)
        return cls(xs, ys, precision, precision)

    def as_floats(self) -> tuple[float, float]:
        shift = self.precision - 53
        if shift >= 0:
            return math.ldexp(self.x >> shift, -53), math.ldexp(self.y >> shift, -53)
        return math.ldexp(self.x, -self.precision), math.ldexp(self.y, -self.precision)

    def as_fractions(self) -> tuple[Fraction, Fraction]:
        return Fraction(self.x, 1 << self.precision), Fraction(self.y, 1 << self.precision)


def cat_map_step(p: FixedPointT2, inverse: bool = False) -> FixedPointT2:
    """One step of ``(x, y) -> (2x + y, x + y) mod 1`` (or its inverse).

    Integer arithmetic modulo ``2**precision`` is exact; the precision tax
    accounts for the expansion of truncation error.
    """
    if p.remaining < CAT_GUARD_BITS:
        raise PrecisionExhausted(
            f"cat map needs {CAT_GUARD_BITS} guard bits, {p.remaining} left")
    (a, b), (c, d) = _CAT_INVERSE if inverse else CAT_MATRIX
    mask = (1 << p.precision) - 1
    return FixedPointT2((a * p.x + b * p.y) & mask, (c * p.x + d * p.y) & mask,
                        p.precision, p.remaining - CAT_GUARD_BITS)


def cat_orbit(p: FixedPointT2, steps: int) -> list[FixedPointT2]:
    out = [p]
    for _ in range(steps):
        p = cat_map_step(p)
        out.append(p)
    return out


def toral_eigenvalues(M=CAT_MATRIX) -> np.ndarray:
    return np.sort(np.linalg.eigvals(np.asarray(M, dtype=float)).real)[::-1]


def rational_period(x: Fraction, y: Fraction, M=CAT_MATRIX, max_steps: int = 10_000) -> int:
    """Period of a rational torus point under M, by exact iteration."""
    (a, b), (c, d) = M
    x0, y0 = Fraction(x) % 1, Fraction(y) % 1
    px, py = x0, y0
    for t in range(1, max_steps + 1):
        px, py = (a * px + b * py) % 1, (c * px + d * py) % 1
        if (px, py) == (x0, y0):
            return t
    raise ValueError("no period found")


# --- observables -------------------------------------------------------------

class WindowObservable:
    """Finite-window observable on a bit word.

    One-sided: reads bits ``0 .. width-1``.  Two-sided: reads bits
    ``-width .. width``.  ``table`` is indexed by the window read as a binary
    number, most significant bit first.
    """

    def __init__(self, table: Sequence[float], width: int, two_sided: bool = False):
        self.table = np.asarray(table, dtype=float)
        self.width = int(width)
        self.two_sided = two_sided
        nbits = 2 * self.width + 1 if two_sided else self.width
        if self.width < 0 or (not two_sided and self.width < 1):
            raise ConfigError("window width too small")
        if len(self.table) != 1 << nbits:
            raise ConfigError(f"table needs {1 << nbits} entries, got {len(self.table)}")
        if np.any(np.abs(self.table) > 1):
            raise ConfigError("observable values must lie in [-1, 1]")

    @property
    def span(self) -> tuple[int, int]:
        return (-self.width, self.width + 1) if self.two_sided else (0, self.width)

    def __call__(self, word: BitWord) -> float:
        lo, hi = self.span
        idx = 0
        for i in range(lo, hi):
            idx = (idx << 1) | word.bit(i)
        return float(self.table[idx])


class FunctionObservable:
    """``f(x)`` (one-sided) or ``f(x, y)`` (two-sided) read from ``precision`` bits."""

    def __init__(self, func: Callable, precision: int = 53, two_sided: bool = False):
        self.func = func
        self.precision = precision
        self.two_sided = two_sided

    @property
    def span(self) -> tuple[int, int]:
        return (-self.precision, self.precision) if self.two_sided else (0, self.precision)

    def __call__(self, word: BitWord) -> float:
        x = dyadic_fraction(word, 0, self.precision)
        if not self.two_sided:
            return float(self.func(x))
        y = sum(math.ldexp(word.bit(-i), -i) for i in range(1, self.precision + 1))
        return float(self.func(x, y))


class RectangleObservable:
    """Piecewise-constant observable on the torus: value of the first
    rectangle ``[x0, x1) x [y0, y1)`` containing the point, else ``default``."""

    def __init__(self, rectangles: Sequence[Sequence[float]], default: float = 0.0):
        self.rectangles = [tuple(float(v) for v in r) for r in rectangles]
        self.default = float(default)
        for r in self.rectangles:
            if len(r) != 5:
                raise ConfigError("rectangle must be [x0, x1, y0, y1, value]")
            x0, x1, y0, y1, v = r
            if not (0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1):
                raise ConfigError(f"bad rectangle {r}")
            if abs(v) > 1:
                raise ConfigError("observable values must lie in [-1, 1]")
        if abs(self.default) > 1:
            raise ConfigError("observable values must lie in [-1, 1]")

    def symbol(self, p: FixedPointT2) -> int:
        x, y = p.as_floats()
        for i, (x0, x1, y0, y1, _) in enumerate(self.rectangles):
            if x0 <= x < x1 and y0 <= y < y1:
                return i
        return -1

    def __call__(self, p: FixedPointT2) -> float:
        i = self.symbol(p)
        return self.default if i < 0 else self.rectangles[i][4]


def variation_estimate(obs, system: str, window: tuple[int, int], samples: int,
                       seed: int = 0) -> float:
    """Monte Carlo lower bound for ``Var_[-m, n](f)``.

    Draws pairs of words that agree on indices ``-m .. n`` and are
    independent elsewhere, and returns the largest observed
    ``|f(w') - f(w)|``.  Observables whose span lies inside the window give
    exactly 0.
    """
    m, n = window
    two_sided = system == BAKER
    if system not in (DYADIC, BAKER):
        raise ConfigError("variation_estimate supports the dyadic and baker systems")
    if not two_sided and m != 0:
        raise ConfigError("one-sided window must start at 0")
    lo, hi = obs.span
    lo, hi = min(lo, -m), max(hi, n + 1)
    best = 0.0
    for s in range(samples):
        a = rng.bits(seed, 2 * s, rng.AUX, 0, hi - lo)
        b = rng.bits(seed, 2 * s + 1, rng.AUX, 0, hi - lo)
        idx = np.arange(lo, hi)
        keep = (idx >= -m) & (idx <= n)
        b = np.where(keep, a, b)
        w1 = _word_from_span(a, lo, two_sided)
        w2 = _word_from_span(b, lo, two_sided)
        best = max(best, abs(obs(w1) - obs(w2)))
    return best


def _word_from_span(arr: np.ndarray, lo: int, two_sided: bool) -> BitWord:
    fwd = arr[-lo:] if lo < 0 else arr
    past = arr[:-lo][::-1] if lo < 0 else []
    return BitWord(fwd, past=past if two_sided else None, tail=0, two_sided=two_sided)


def pushforward_histogram(system: str, samples: int, bins: int, seed: int = 0,
                          precision: int = 128) -> dict[str, np.ndarray]:
    """Histogram(s) of ``T(u)`` for ``samples`` Lebesgue-distributed points ``u``.

    Returns per-coordinate counts; an invariant measure gives counts close to
    ``samples / bins`` in every bin.
    """
    r = np.arange(samples, dtype=np.uint64)
    if system in (DYADIC, BAKER):
        w = rng.words(seed, r[:, None], rng.BITS_FORWARD, np.arange(2)[None, :])
        # T shifts the word: new x reads bits 1..53
        x = ((w[:, 0] << np.uint64(1)) | (w[:, 1] >> np.uint64(63))) >> np.uint64(11)
        out = {"x": np.histogram(x.astype(float) * 2.0 ** -53, bins=bins, range=(0, 1))[0]}
        if system == BAKER:
            wb = rng.words(seed, r, rng.BITS_BACKWARD, 0)
            # new y: bit omega_0 moves to position -1, old past bits move down
            y = ((w[:, 0] >> np.uint64(63)) << np.uint64(52)) | (wb >> np.uint64(12))
            out["y"] = np.histogram(y.astype(float) * 2.0 ** -53, bins=bins, range=(0, 1))[0]
        return out
    if system == CAT:
        xs, ys = np.empty(samples), np.empty(samples)
        for i in range(samples):
            p = cat_map_step(FixedPointT2.random(seed, i, precision))
            xs[i], ys[i] = p.as_floats()
        return {"x": np.histogram(xs, bins=bins, range=(0, 1))[0],
                "y": np.histogram(ys, bins=bins, range=(0, 1))[0]}
    raise ConfigError(f"unknown system {system!r}")


def cat_cylinder_diameter(obs: RectangleObservable, n: int, samples: int, seed: int = 0,
                          precision: int | None = None) -> tuple[float, float]:
    """Empirical coordinate-wise diameter of cat-map cylinders of depth n.

    Points are grouped by their itinerary through the rectangles of ``obs``
    at times ``-n .. n``; the result is the largest torus spread in x and y
    observed inside any group.  The rectangles need not form a Markov
    partition, so this is a diagnostic only.
    """
    P = precision or 4 * n + 64
    groups: dict[tuple, list[tuple[float, float]]] = {}
    for i in range(samples):
        p0 = FixedPointT2.random(seed, i, P)
        itin = [obs.symbol(p0)]
        p = p0
        for _ in range(n):
            p = cat_map_step(p)
            itin.append(obs.symbol(p))
        p = FixedPointT2(p0.x, p0.y, P, P)
        for _ in range(n):
            p = cat_map_step(p, inverse=True)
            itin.insert(0, obs.symbol(p))
        groups.setdefault(tuple(itin), []).append(p0.as_floats())
    dx = dy = 0.0
    for pts in groups.values():
        if len(pts) < 2:
            continue
        arr = np.asarray(pts)
        dx = max(dx, _circular_spread(arr[:, 0]))
        dy = max(dy, _circular_spread(arr[:, 1]))
    return dx, dy


def _circular_spread(v: np.ndarray) -> float:
    s = np.sort(v)
    gaps = np.diff(np.concatenate([s, [s[0] + 1.0]]))
    return float(1.0 - gaps.max())
