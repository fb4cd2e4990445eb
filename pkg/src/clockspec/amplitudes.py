"""Amplitude processes omega(1), omega(2), ... with |omega(j)| <= 1.

Case A presets are i.i.d. uniform on [-1, 1] and Rademacher.  Correlated
(case B) processes are a finite Markov chain and observables of the dyadic,
baker and cat-map dynamics.  All draws come from :mod:`clockspec.rng`, so a
sequence is fixed by ``(spec, seed, realization)`` alone.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numba import njit

from . import dynsys, rng
from .errors import ConfigError


@dataclass(frozen=True)
class Zero:
    """omega(j) = 0; the free-field control."""


@dataclass(frozen=True)
class IidUniform:
    pass


@dataclass(frozen=True)
class IidRademacher:
    pass


@dataclass(frozen=True)
class MarkovChain:
    """Finite chain with row-stochastic ``transition``; emits ``values[state]``.

    ``initial`` is the law of the state at j = 1; ``None`` means the
    stationary distribution.
    """

    transition: tuple
    values: tuple
    initial: tuple | None = None

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] != len(v):
            raise ConfigError("transition must be M x M with M values")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
            raise ConfigError("transition matrix is not row-stochastic")
        if np.any(np.abs(v) > 1):
            raise ConfigError("chain values must lie in [-1, 1]")
        if self.initial is not None:
            p0 = np.asarray(self.initial, dtype=float)
            if p0.shape != v.shape or np.any(p0 < 0) or abs(p0.sum() - 1) > 1e-12:
                raise ConfigError("initial distribution is invalid")
        object.__setattr__(self, "transition", tuple(map(tuple, P.tolist())))
        object.__setattr__(self, "values", tuple(v.tolist()))
        if self.initial is not None:
            object.__setattr__(self, "initial", tuple(float(x) for x in self.initial))

    def stationary(self) -> np.ndarray:
        P = np.asarray(self.transition)
        w, vecs = np.linalg.eig(P.T)
        i = int(np.argmin(np.abs(w - 1)))
        pi = np.abs(vecs[:, i].real)
        return pi / pi.sum()

    def initial_law(self) -> np.ndarray:
        return self.stationary() if self.initial is None else np.asarray(self.initial)


def two_state_chain(stay: float, values=(1.0, -1.0)) -> MarkovChain:
    """Symmetric two-state chain; its autocorrelation is ``(2 stay - 1)**k``."""
    return MarkovChain(((stay, 1 - stay), (1 - stay, stay)), tuple(values))


@dataclass(frozen=True)
class DyadicObservable:
    """omega(j) = table[bits j .. j+width-1] of a uniform point of the circle."""

    table: tuple
    width: int

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(float(x) for x in self.table))
        dynsys.WindowObservable(self.table, self.width)


@dataclass(frozen=True)
class BakerObservable:
    """omega(j) = table[bits j-width .. j+width] of a two-sided uniform word."""

    table: tuple
    width: int

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(float(x) for x in self.table))
        dynsys.WindowObservable(self.table, self.width, two_sided=True)


@dataclass(frozen=True)
class CatMapObservable:
    """omega(j) = F(M^j u) for a rectangle observable F and uniform u.

    ``precision`` is the fixed-point budget in bits; ``None`` picks
    ``2 N + 64`` for a request of length N.
    """

    rectangles: tuple
    default: float = 0.0
    precision: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "rectangles", tuple(tuple(float(v) for v in r)
                                                     for r in self.rectangles))
        dynsys.RectangleObservable(self.rectangles, self.default)

    def observable(self) -> dynsys.RectangleObservable:
        return dynsys.RectangleObservable(self.rectangles, self.default)


@dataclass(frozen=True)
class CosineDyadic:
    """omega(j) = cos(2 pi {2^j theta}) -- uncorrelated but dependent."""


AmplitudeSpec = Union[Zero, IidUniform, IidRademacher, MarkovChain, DyadicObservable,
                      BakerObservable, CatMapObservable, CosineDyadic]


@njit(cache=True)
def _chain_path(u, cum_initial, cum_rows, values):
    R, N = u.shape
    out = np.empty((R, N))
    M = len(values)
    for r in range(R):
        s = 0
        while s < M - 1 and u[r, 0] >= cum_initial[s]:
            s += 1
        out[r, 0] = values[s]
        for j in range(1, N):
            row = cum_rows[s]
            t = 0
            while t < M - 1 and u[r, j] >= row[t]:
                t += 1
            s = t
            out[r, j] = values[s]
    return out


def _window_index(bits: np.ndarray, start: int, width: int, count: int) -> np.ndarray:
    idx = np.zeros(count, dtype=np.int64)
    for i in range(width):
        idx = (idx << 1) | bits[start + i:start + i + count].astype(np.int64)
    return idx


def _top53(w: np.ndarray, j: int) -> np.ndarray:
    """53-bit integers made of bits ``j .. j+52`` of each row of words ``w``."""
    a, o = divmod(j, 64)
    hi = w[:, a]
    if o == 0:
        return hi >> np.uint64(11)
    lo = w[:, a + 1]
    return ((hi << np.uint64(o)) | (lo >> np.uint64(64 - o))) >> np.uint64(11)


def sample_block(spec: AmplitudeSpec, seed: int, realizations: Sequence[int] | np.ndarray,
                 N: int) -> np.ndarray:
    """omega(1..N) for several realizations at once; shape ``(R, N)``.

    Row ``i`` equals ``sample_sequence(spec, seed, realizations[i], N)``.
    """
    if N < 1:
        raise ConfigError("N must be >= 1")
    r = np.asarray(realizations, dtype=np.int64).reshape(-1)
    R = len(r)
    ru = r.astype(np.uint64)[:, None]
    j = np.arange(1, N + 1, dtype=np.uint64)[None, :]
    if isinstance(spec, Zero):
        return np.zeros((R, N))
    if isinstance(spec, IidUniform):
        return 2.0 * rng.uniforms(seed, ru, rng.AMPLITUDE, j) - 1.0
    if isinstance(spec, IidRademacher):
        return np.where(rng.uniforms(seed, ru, rng.AMPLITUDE, j) < 0.5, 1.0, -1.0)
    if isinstance(spec, MarkovChain):
        u = rng.uniforms(seed, ru, rng.AMPLITUDE, j)
        cum_rows = np.cumsum(np.asarray(spec.transition), axis=1)
        cum_init = np.cumsum(spec.initial_law())
        return _chain_path(u, cum_init, cum_rows, np.asarray(spec.values))
    if isinstance(spec, CosineDyadic):
        nw = (N + 52) // 64 + 2
        w = rng.words(seed, ru, rng.BITS_FORWARD, np.arange(nw, dtype=np.uint64)[None, :])
        out = np.empty((R, N))
        for jj in range(1, N + 1):
            frac = _top53(w, jj).astype(np.float64) * 2.0 ** -53
            out[:, jj - 1] = np.cos(2.0 * np.pi * frac)
        return out
    if isinstance(spec, DyadicObservable):
        tab = np.asarray(spec.table)
        out = np.empty((R, N))
        for i, rr in enumerate(r):
            b = rng.bits(seed, int(rr), rng.BITS_FORWARD, 0, N + spec.width + 1)
            out[i] = tab[_window_index(b, 1, spec.width, N)]
        return out
    if isinstance(spec, BakerObservable):
        tab = np.asarray(spec.table)
        w = spec.width
        out = np.empty((R, N))
        for i, rr in enumerate(r):
            fwd = rng.bits(seed, int(rr), rng.BITS_FORWARD, 0, N + w + 1)
            bwd = rng.bits(seed, int(rr), rng.BITS_BACKWARD, 0, w)
            # indices -w .. N+w laid out contiguously
            full = np.concatenate([bwd[::-1], fwd])
            out[i] = tab[_window_index(full, 1, 2 * w + 1, N)]
        return out
    if isinstance(spec, CatMapObservable):
        obs = spec.observable()
        P = spec.precision or 2 * N + 64
        out = np.empty((R, N))
        for i, rr in enumerate(r):
            p = dynsys.FixedPointT2.random(seed, int(rr), P)
            for jj in range(N):
                p = dynsys.cat_map_step(p)
                out[i, jj] = obs(p)
        return out
    raise ConfigError(f"unknown amplitude spec {spec!r}")


def sample_sequence(spec: AmplitudeSpec, seed: int, realization: int, N: int) -> np.ndarray:
    """omega(1), ..., omega(N) for one realization."""
    return sample_block(spec, seed, [realization], N)[0]


# --- correlations ------------------------------------------------------------

@dataclass
class CorrelationCurve:
    lags: np.ndarray
    corr: np.ndarray
    stderr: np.ndarray
    mean: float
    samples: int
    degenerate: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["lag", "corr", "stderr"])
        for k, c, s in zip(self.lags, self.corr, self.stderr):
            wr.writerow([int(k), repr(float(c)), repr(float(s))])
        return buf.getvalue()


def empirical_correlation(spec: AmplitudeSpec, seed: int, realizations: int, N: int,
                          max_lag: int, batch: int = 256) -> CorrelationCurve:
    """Autocovariance estimates c(k) = E[(w(j)-mu)(w(j+k)-mu)], k = 0..max_lag.

    Averages over positions j and over realizations ``0 .. realizations-1``;
    ``mu`` is the pooled empirical mean.  The standard error of each lag is
    taken from the spread of per-realization estimates.
    """
    if max_lag >= N:
        raise ConfigError("max_lag must be < N")
    if realizations < 2:
        raise ConfigError("need at least two realizations for standard errors")
    blocks = [sample_block(spec, seed, np.arange(s, min(s + batch, realizations)), N)
              for s in range(0, realizations, batch)]
    X = np.concatenate(blocks)
    mu = float(X.mean())
    Y = X - mu
    per = np.empty((realizations, max_lag + 1))
    for k in range(max_lag + 1):
        per[:, k] = (Y[:, : N - k] * Y[:, k:]).mean(axis=1)
    corr = per.mean(axis=0)
    stderr = per.std(axis=0, ddof=1) / math.sqrt(realizations)
    lags = np.arange(max_lag + 1)
    if corr[0] <= 0.0:
        nan = np.full(max_lag + 1, np.nan)
        return CorrelationCurve(lags, nan, nan, mu, X.size, degenerate=True)
    return CorrelationCurve(lags, corr, stderr, mu, X.size)


@dataclass
class DecayFit:
    """Fitted rate of ``|c(k)| ~ exp(-rate k)``; ``rate is None`` when no lag
    rises above the noise floor."""

    rate: float | None
    stderr: float | None
    lags_used: list = field(default_factory=list)
    measurable: bool = True
    noise_factor: float = 3.0

    def as_dict(self) -> dict:
        return {"rate": self.rate, "stderr": self.stderr, "lags_used": self.lags_used,
                "measurable": self.measurable, "noise_factor": self.noise_factor}


def fit_decay_rate(curve: CorrelationCurve | Sequence[tuple[int, float, float]],
                   noise_factor: float = 3.0, min_lags: int = 3) -> DecayFit:
    """Least-squares slope of log|c(k)| against k over lags above the noise floor.

    A lag is kept when ``|c(k)| > noise_factor * stderr(k)``; only the leading
    run of such lags is used, so a stray noisy lag far out cannot enter.  The
    regression is weighted by the delta-method variance of log|c(k)|.
    """
    if isinstance(curve, CorrelationCurve):
        lags, corr, se = curve.lags, curve.corr, curve.stderr
    else:
        arr = np.asarray(curve, dtype=float)
        lags, corr = arr[:, 0], arr[:, 1]
        se = arr[:, 2] if arr.shape[1] > 2 else np.zeros(len(arr))
    lags = np.asarray(lags, dtype=float)
    corr = np.asarray(corr, dtype=float)
    se = np.asarray(se, dtype=float)
    keep = []
    for k, c, s in zip(lags, corr, se):
        if np.isfinite(c) and abs(c) > noise_factor * s and c != 0.0:
            keep.append(int(k))
        else:
            break
    if len(keep) < min_lags:
        return DecayFit(None, None, keep, measurable=False, noise_factor=noise_factor)
    sel = np.isin(lags.astype(int), keep)
    x, y = lags[sel], np.log(np.abs(corr[sel]))
    rel = se[sel] / np.abs(corr[sel])
    if np.all(rel == 0):
        wts = np.ones_like(x)
    else:
        wts = 1.0 / np.maximum(rel, 1e-300) ** 2
    W = wts.sum()
    xm, ym = (wts * x).sum() / W, (wts * y).sum() / W
    sxx = (wts * (x - xm) ** 2).sum()
    slope = (wts * (x - xm) * (y - ym)).sum() / sxx
    stderr = math.sqrt(1.0 / sxx) if not np.all(rel == 0) else 0.0
    return DecayFit(float(-slope), stderr, keep, noise_factor=noise_factor)


# --- JSON config -------------------------------------------------------------

_KINDS = {
    "zero": Zero, "iid_uniform": IidUniform, "iid_rademacher": IidRademacher,
    "markov": MarkovChain, "dyadic": DyadicObservable, "baker": BakerObservable,
    "cat": CatMapObservable, "cosine_dyadic": CosineDyadic,
}


def spec_from_dict(d: dict) -> AmplitudeSpec:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise ConfigError(f"unknown amplitude kind {kind!r}; expected one of {sorted(_KINDS)}")
    if kind == "markov" and "stay" in d:
        stay = d.pop("stay")
        vals = d.pop("values", (1.0, -1.0))
        if d:
            raise ConfigError(f"unknown amplitude keys {sorted(d)}")
        return two_state_chain(stay, vals)
    try:
        return _KINDS[kind](**d)
    except TypeError as exc:
        raise ConfigError(f"bad amplitude parameters for {kind!r}: {exc}") from None


def spec_to_dict(spec: AmplitudeSpec) -> dict:
    for name, cls in _KINDS.items():
        if type(spec) is cls:
            out = {"kind": name}
            for k, v in spec.__dict__.items():
                out[k] = _plain(v)
            return out
    raise ConfigError(f"unknown amplitude spec {spec!r}")


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v
