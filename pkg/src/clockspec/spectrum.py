"""Dirichlet eigenvalues of H_n by Sturm oscillation, and the rescaled point process.

By Sturm's theorem ``floor(theta_n(kappa) / pi)`` counts the eigenvalues in
``(0, kappa^2]``, and ``kappa_k`` is an eigenvalue parameter exactly when
``theta_n(kappa_k) = k pi``.  Atoms of the point process are reported in
rescaled coordinates ``n (kappa - kappa0)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, NumericError, RootFindingError
from .prufer import PhaseFunction

PI = math.pi


def frac_pi(x: float) -> float:
    """``{x}_pi = x - floor(x / pi) pi`` in [0, pi)."""
    return x - math.floor(x / PI) * PI


def oscillation_count(pf: PhaseFunction, kappa: float) -> int:
    """Number of Dirichlet eigenvalues of H_n in (0, kappa^2]."""
    return int(math.floor(pf.theta(kappa) / PI))


def locate_eigenvalue(pf: PhaseFunction, k: int, bracket: tuple[float, float],
                      tol_kappa: float | None = None, method: str = "newton",
                      max_iter: int = 200) -> float:
    """Solve ``theta_n(kappa) = k pi`` inside ``bracket``.

    ``method="bisect"`` is plain bisection.  The default keeps the same
    bracket but tries a Newton step with the exact ``d theta / d kappa``
    first, falling back to bisection whenever the step leaves the bracket;
    on convergence the root is certified by evaluating ``theta`` at both ends
    of a bracket of width ``tol_kappa``.
    """
    lo, hi = map(float, bracket)
    target = k * PI
    if not 0 < lo < hi:
        raise RootFindingError(f"invalid bracket {bracket}")
    flo, fhi = pf.theta(lo) - target, pf.theta(hi) - target
    if not (flo < 0.0 <= fhi):
        raise RootFindingError(f"bracket {bracket} does not straddle {k} pi "
                               f"(theta - k pi = {flo:.3e}, {fhi:.3e})")
    if tol_kappa is None:
        tol_kappa = 1e-12 * 0.5 * (lo + hi)
    if method == "bisect":
        for _ in range(max_iter):
            if hi - lo <= tol_kappa:
                return 0.5 * (lo + hi)
            mid = 0.5 * (lo + hi)
            if pf.theta(mid) - target < 0.0:
                lo = mid
            else:
                hi = mid
        raise RootFindingError("bisection did not converge")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        if hi - lo <= tol_kappa:
            return 0.5 * (lo + hi)
        th, d = pf.theta_and_derivative(x)
        f = th - target
        if f < 0.0:
            lo = x
        else:
            hi = x
        step = f / d if d > 0 else math.inf
        xn = x - step
        if abs(step) <= 0.25 * tol_kappa:
            a, b = max(lo, x - 0.5 * tol_kappa), min(hi, x + 0.5 * tol_kappa)
            if pf.theta(a) - target < 0.0 <= pf.theta(b) - target:
                return x
            xn = 0.5 * (lo + hi)
        elif not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        x = xn
    raise RootFindingError("eigenvalue search did not converge")


@dataclass
class PointProcessSample:
    atoms: np.ndarray
    frac_phase: float
    c_max: float


@dataclass
class EigenvalueWindow:
    """Eigenvalues with ``n |kappa - kappa0| <= c_max``.

    ``indices`` are oscillation indices (``theta_n(kappa_k) = k pi``);
    ``labels`` are the rearranged labels anchored at ``kappa0``, so label 1
    is the first eigenvalue above ``kappa0`` and label 0 the last one at or
    below it.
    """

    n: int
    kappa0: float
    c_max: float
    theta0: float
    indices: np.ndarray
    kappas: np.ndarray
    anomalies: list = field(default_factory=list)

    @property
    def labels(self) -> np.ndarray:
        return self.indices - int(math.floor(self.theta0 / PI))

    @property
    def atoms(self) -> np.ndarray:
        return self.n * (self.kappas - self.kappa0)

    def gaps(self) -> np.ndarray:
        """``n (kappa'_{j+1} - kappa'_j)`` for consecutive labels inside the window."""
        lab = self.labels
        ok = np.diff(lab) == 1
        return (self.n * np.diff(self.kappas))[ok]

    def sample(self) -> PointProcessSample:
        return PointProcessSample(self.atoms, frac_pi(self.theta0), self.c_max)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["k", "kappa_k", "atom"])
        for k, kap, a in zip(self.indices, self.kappas, self.atoms):
            wr.writerow([int(k), repr(float(kap)), repr(float(a))])
        return buf.getvalue()


def scan_step(pf: PhaseFunction) -> float:
    return PI / (4.0 * pf.n * (1.0 + pf.envelope))


def eigenvalue_window(pf: PhaseFunction, kappa0: float, c_max: float,
                      tol_kappa: float | None = None, method: str = "newton",
                      max_depth: int = 30) -> EigenvalueWindow:
    """All eigenvalue parameters within ``c_max / n`` of ``kappa0``.

    A grid of spacing ``pi / (4 n (1 + sup|V|))`` brackets every crossing of
    ``pi Z``; grid intervals on which ``theta`` decreases, or jumps by more than
    one multiple of pi, are subdivided until they are monotone-sampled.
    """
    if not kappa0 > 0 or not c_max > 0:
        raise DomainError("kappa0 and c_max must be positive")
    n = pf.n
    if tol_kappa is None:
        tol_kappa = 1e-12 * kappa0
    lo = kappa0 - c_max / n
    hi = kappa0 + c_max / n
    if lo <= 0:
        lo = min(kappa0, hi) * 1e-6
    h = scan_step(pf)
    m = max(2, int(math.ceil((hi - lo) / h)) + 1)
    grid = np.linspace(lo, hi, m)
    th = np.array([pf.theta(float(x)) for x in grid])
    theta0 = pf.theta(kappa0)
    roots: list[tuple[int, float]] = []
    anomalies: list[str] = []

    def visit(a, b, ta, tb, depth):
        if tb >= ta and tb - ta <= PI:
            k0 = math.floor(ta / PI) + 1
            for k in range(k0, math.floor(tb / PI) + 1):
                roots.append((k, locate_eigenvalue(pf, k, (a, b), tol_kappa, method)))
            return
        if depth >= max_depth:
            raise RootFindingError(f"could not isolate roots in [{a!r}, {b!r}]")
        if tb < ta:
            anomalies.append(f"theta decreases on [{a!r}, {b!r}]")
            if math.floor(tb / PI) < math.floor(ta / PI):
                anomalies.append(f"downward crossing of pi Z on [{a!r}, {b!r}]")
        mid = 0.5 * (a + b)
        tm = pf.theta(mid)
        visit(a, mid, ta, tm, depth + 1)
        visit(mid, b, tm, tb, depth + 1)

    for i in range(m - 1):
        visit(float(grid[i]), float(grid[i + 1]), th[i], th[i + 1], 0)
    roots.sort(key=lambda r: r[1])
    ks = np.array([r[0] for r in roots], dtype=np.int64)
    kap = np.array([r[1] for r in roots])
    inside = np.abs(n * (kap - kappa0)) <= c_max
    ks, kap = ks[inside], kap[inside]
    if len(ks) and (np.any(np.diff(ks) != 1)):
        anomalies.append("oscillation indices are not consecutive")
    return EigenvalueWindow(n, float(kappa0), float(c_max), theta0, ks, kap, anomalies)


def relative_phase(pf: PhaseFunction, kappa0: float, c, theta0: float | None = None):
    """``Theta^(n)(c) = theta_n(kappa0 + c/n) - theta_n(kappa0)``; vectorized over c."""
    n = pf.n
    t0 = pf.theta(kappa0) if theta0 is None else theta0
    cs = np.atleast_1d(np.asarray(c, dtype=float))
    if np.any(kappa0 + cs / n <= 0):
        raise DomainError("kappa0 + c/n must be positive")
    out = np.array([0.0 if ci == 0.0 else pf.theta(kappa0 + ci / n) - t0 for ci in cs])
    return out if np.ndim(c) else float(out[0])


# --- test functions and Laplace functionals --------------------------------

class GaussianBump:
    """Continuous, compactly supported bump: a Gaussian shifted down so it
    vanishes at ``|x - center| = radius``."""

    def __init__(self, center: float = 0.0, width: float = 1.0, height: float = 1.0,
                 radius: float | None = None):
        self.center, self.width, self.height = float(center), float(width), float(height)
        self.radius = float(radius) if radius is not None else 4.0 * self.width
        self._floor = math.exp(-0.5 * (self.radius / self.width) ** 2)

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.radius, self.center + self.radius

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.center) / self.width
        val = self.height * (np.exp(-0.5 * z * z) - self._floor)
        return np.where(np.abs(x - self.center) <= self.radius, np.maximum(val, 0.0), 0.0)

    def as_dict(self) -> dict:
        return {"center": self.center, "width": self.width, "height": self.height,
                "radius": self.radius}


class ZeroFunction:
    support = (0.0, 0.0)

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


def _support(g, support):
    if support is not None:
        return support
    s = getattr(g, "support", None)
    if s is None:
        raise DomainError("test function needs a declared support")
    return s


def laplace_functional_direct(sample: PointProcessSample, g: Callable,
                              support: tuple[float, float] | None = None) -> float:
    """``exp(-sum_atoms g(atom))``; g must be supported inside the window."""
    a, b = _support(g, support)
    if a < -sample.c_max or b > sample.c_max:
        raise DomainError(f"support [{a}, {b}] exceeds the window +-{sample.c_max}")
    if len(sample.atoms) == 0:
        return 1.0
    return float(math.exp(-float(np.sum(g(sample.atoms)))))


@dataclass
class InversePhase:
    """Monotone cubic model of ``c -> Theta^(n)(c)`` and its inverse."""

    c: np.ndarray
    Theta: np.ndarray
    spline: object

    def inverse(self, y: float) -> float:
        i = int(np.searchsorted(self.Theta, y))
        if i == 0:
            return float(self.c[0]) if y == self.Theta[0] else -math.inf
        if i >= len(self.c):
            return float(self.c[-1]) if y == self.Theta[-1] else math.inf
        a, b = float(self.c[i - 1]), float(self.c[i])
        return brentq(lambda x: float(self.spline(x)) - y, a, b, xtol=1e-14)


def inverse_phase(pf: PhaseFunction, kappa0: float, lo: float, hi: float, step: float = 0.05,
                  theta0: float | None = None) -> InversePhase:
    """Tabulate Theta on a grid over [lo, hi] and build a monotone cubic interpolant.

    Node slopes are the exact ``d Theta / d c = (d theta / d kappa) / n``.
    If the Hermite cubic violates the Fritsch-Carlson monotonicity bound on
    some interval, slopes are replaced by PCHIP's limited estimates.
    """
    n = pf.n
    m = int(math.ceil((hi - lo) / step))
    c = lo + step * np.arange(m + 1)
    th = np.empty(m + 1)
    dth = np.empty(m + 1)
    for i, ci in enumerate(c):
        th[i], dth[i] = pf.theta_and_derivative(kappa0 + ci / n)
    t0 = pf.theta(kappa0) if theta0 is None else theta0
    Theta = th - t0
    if np.any(np.diff(Theta) <= 0):
        raise NumericError("Theta is not increasing on the c-grid")
    slopes = dth / n
    sec = np.diff(Theta) / np.diff(c)
    a, b = slopes[:-1] / sec, slopes[1:] / sec
    if np.all(slopes > 0) and np.all(a * a + b * b <= 9.0):
        spline = CubicHermiteSpline(c, Theta, slopes)
    else:
        spline = PchipInterpolator(c, Theta)
    return InversePhase(c, Theta, spline)


def laplace_functional_phase(pf: PhaseFunction, kappa0: float, g: Callable,
                             support: tuple[float, float] | None = None, step: float = 0.05,
                             theta0: float | None = None) -> float:
    """``exp(-sum_k g(Theta^{-1}(k pi - {theta_n(kappa0)}_pi)))``.

    The sum runs over every k whose preimage falls in the support of g; the
    c-grid extends one step beyond the support on each side.
    """
    a, b = _support(g, support)
    if b <= a:
        return 1.0
    t0 = pf.theta(kappa0) if theta0 is None else theta0
    inv = inverse_phase(pf, kappa0, a - step, b + step, step, t0)
    phi = frac_pi(t0)
    kmin = math.ceil((inv.Theta[0] + phi) / PI)
    kmax = math.floor((inv.Theta[-1] + phi) / PI)
    total = 0.0
    for k in range(kmin, kmax + 1):
        total += float(g(inv.inverse(k * PI - phi)))
    return math.exp(-total)


def clock_prediction(phi: float, g: Callable, support: tuple[float, float] | None = None) -> float:
    """``exp(-sum_j g(j pi - phi))`` -- the clock-process Laplace functional at phase phi."""
    a, b = _support(g, support)
    if b <= a:
        return 1.0
    js = np.arange(math.floor((a + phi) / PI) - 1, math.ceil((b + phi) / PI) + 2)
    return math.exp(-float(np.sum(g(js * PI - phi))))


def curve_csv(c, Theta) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["c", "Theta"])
    for x, y in zip(c, Theta):
        wr.writerow([repr(float(x)), repr(float(y))])
    return buf.getvalue()
