"""Pruefer phase and amplitude of the Dirichlet solution on [0, n].

With ``(psi, psi'/kappa) = r (sin theta, cos theta)`` the equation
``-psi'' + V psi = kappa^2 psi`` becomes::

    theta'   = kappa - (V / kappa) sin^2 theta
    (log r)' = (V / 2 kappa) sin 2 theta

started from ``theta_0 = 0, r_0 = 1``.  Along the way we accumulate
``J = int V e^{2 i theta}``, ``R = int (e^{2 i theta} - 1) V`` and the two
integrals behind ``d theta / d kappa = (A + B / 2 kappa^2) / r^2`` with
``A = int r^2`` and ``B = int r^2 V (1 - cos 2 theta)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import ConfigError, DomainError, NumericError
from .potential import Bump, Indicator, PotentialModel, PotentialRealization, Table

RK4 = "rk4"
EXACT = "exact"
AUTO = "auto"


@dataclass(frozen=True)
class IntegratorConfig:
    """``method`` is ``"rk4"``, ``"exact"`` (piecewise-constant profiles only)
    or ``"auto"`` (exact whenever the profile allows it)."""

    method: str = AUTO
    substeps: int = 64

    def __post_init__(self):
        if self.method not in (AUTO, RK4, EXACT):
            raise ConfigError(f"unknown integrator {self.method!r}")
        if self.substeps < 8:
            raise ConfigError("need at least 8 RK4 substeps per cell")


@dataclass(frozen=True)
class PruferState:
    t: float = 0.0
    theta: float = 0.0
    log_r: float = 0.0
    J: complex = 0j
    R: complex = 0j
    A: float = 0.0
    B: float = 0.0
    logscale: float = 0.0

    def dtheta_dkappa(self, kappa: float) -> float:
        return _derivative(self.A, self.B, self.logscale, self.log_r, kappa)


def _derivative(A, B, logscale, log_r, kappa):
    expo = logscale - 2.0 * log_r
    if expo > 700:
        raise NumericError("d theta / d kappa overflows despite rescaling")
    val = (A + B / (2.0 * kappa * kappa)) * math.exp(expo)
    if not math.isfinite(val):
        raise NumericError("d theta / d kappa is not finite")
    return val


def _profile_code(profile):
    if isinstance(profile, Indicator):
        return K.PROFILE_INDICATOR, np.ones(1)
    if isinstance(profile, Bump):
        return K.PROFILE_BUMP, np.ones(1)
    if isinstance(profile, Table):
        return K.PROFILE_TABLE, np.asarray(profile.values, dtype=float)
    raise ConfigError(f"unknown profile {profile!r}")


def _check_kappa(kappa):
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")


def exact_cell_transfer(v: float, kappa: float, theta_in: float, log_r_in: float,
                        length: float = 1.0) -> tuple[float, float]:
    """Closed-form phase/amplitude transfer across a segment with constant V = v.

    Solves ``psi'' = (v - kappa^2) psi`` with trigonometric, linear or
    hyperbolic fundamental solutions.  The output phase is unwrapped: it
    differs from ``theta_in`` by the exact continuous change.
    """
    _check_kappa(kappa)
    res = np.empty(4)
    K.segment(float(v), float(kappa), float(length), float(theta_in), res)
    return theta_in + res[0], log_r_in + res[1]


def advance_cell(state: PruferState, coef: float, profile, kappa: float,
                 cfg: IntegratorConfig = IntegratorConfig()) -> PruferState:
    """Advance every accumulator across ``[t, t+1]`` where V = coef * profile(s - t)."""
    _check_kappa(kappa)
    code, tab = _profile_code(profile)
    if _resolve(cfg, profile) == EXACT:
        res = np.empty(4)
        theta, logr = state.theta, state.log_r
        J, R, A, B = state.J, state.R, 0.0, 0.0
        ell = 1.0 / len(tab)
        for v in coef * tab:
            w = math.exp(2.0 * (logr - state.log_r))
            if v == 0.0:
                A += w * ell
                theta += kappa * ell
                continue
            K.segment(v, kappa, ell, theta, res)
            A += w * (res[2] + res[3] / kappa ** 2)
            B += w * 2.0 * v * res[2]
            rj = 2.0 * kappa * (res[0] - kappa * ell)
            J += complex(rj + v * ell, 2.0 * kappa * res[1])
            R += complex(rj, 2.0 * kappa * res[1])
            theta += res[0]
            logr += res[1]
    else:
        y = np.array([state.theta, state.log_r, state.J.real, state.J.imag,
                      state.R.real, state.R.imag, 0.0, 0.0])
        if coef == 0.0:
            y[0] += kappa
            y[6] = 1.0
        else:
            K.rk4_cell(float(coef), code, tab, kappa, cfg.substeps, y)
        theta, logr = y[0], y[1]
        J, R = complex(y[2], y[3]), complex(y[4], y[5])
        A, B = y[6], y[7]
    # cell integrals are relative to r^2 at the cell start
    w = math.exp(2.0 * state.log_r - state.logscale)
    Am, Bm, ls = state.A + w * A, state.B + w * B, state.logscale
    s = max(Am, abs(Bm))
    if s > K.RESCALE_AT:
        Am, Bm, ls = Am / s, Bm / s, ls + math.log(s)
    return PruferState(state.t + 1.0, theta, logr, J, R, Am, Bm, ls)


def _resolve(cfg: IntegratorConfig, profile) -> str:
    if cfg.method == AUTO:
        return EXACT if isinstance(profile, (Indicator, Table)) else RK4
    if cfg.method == EXACT and not isinstance(profile, (Indicator, Table)):
        raise ConfigError("exact transfer needs a piecewise-constant profile")
    return cfg.method


@dataclass(frozen=True)
class PhaseResult:
    kappa: float
    n: int
    theta: float
    log_r: float
    J: complex
    R: complex
    dtheta_dkappa: float

    @property
    def theta_tilde(self) -> float:
        return self.theta - self.kappa * self.n


class PhaseFunction:
    """kappa -> theta_n(kappa) and friends for one fixed potential realization.

    This is the hot path used by the eigenvalue search and the experiments.
    """

    def __init__(self, realization: PotentialRealization,
                 cfg: IntegratorConfig = IntegratorConfig()):
        self.realization = realization
        self.n = realization.n
        self.cfg = cfg
        self.coefs = np.ascontiguousarray(realization.coefs, dtype=float)
        profile = realization.model.profile
        self.method = _resolve(cfg, profile)
        self.code, self.tab = _profile_code(profile)
        self.envelope = realization.envelope
        self.calls = 0

    def theta(self, kappa: float) -> float:
        _check_kappa(kappa)
        self.calls += 1
        if self.method == EXACT:
            return K.exact_theta(self.coefs, self.tab, float(kappa))
        return K.rk4_theta(self.coefs, self.code, self.tab, float(kappa), self.cfg.substeps)

    def _raw(self, kappa: float, traj: np.ndarray) -> np.ndarray:
        _check_kappa(kappa)
        self.calls += 1
        out = np.empty(9)
        if self.method == EXACT:
            K.exact_full(self.coefs, self.tab, float(kappa), out, traj)
        else:
            K.rk4_full(self.coefs, self.code, self.tab, float(kappa), self.cfg.substeps, out, traj)
        return out

    def full(self, kappa: float) -> PhaseResult:
        out = self._raw(kappa, np.empty((0, 6)))
        d = _derivative(out[6], out[7], out[8], out[1], kappa)
        return PhaseResult(float(kappa), self.n, out[0], out[1], complex(out[2], out[3]),
                           complex(out[4], out[5]), d)

    def theta_and_derivative(self, kappa: float) -> tuple[float, float]:
        out = self._raw(kappa, np.empty((0, 6)))
        return out[0], _derivative(out[6], out[7], out[8], out[1], kappa)

    def trajectory(self, kappa: float) -> np.ndarray:
        """Columns ``t, theta, log_r, ReJ, ImJ, ReR, ImR`` at t = 0..n."""
        traj = np.empty((self.n + 1, 6))
        self._raw(kappa, traj)
        return np.column_stack([np.arange(self.n + 1, dtype=float), traj])


def integrate_phase(model: PotentialModel, kappa: float, n: int, seed: int, realization: int,
                    cfg: IntegratorConfig = IntegratorConfig()) -> PhaseResult:
    """theta_n, log r_n, J^(n), R^(n) and d theta_n / d kappa for one realization."""
    if n < 2:
        raise DomainError("n must be >= 2")
    return PhaseFunction(model.realize(n, seed, realization), cfg).full(kappa)


def phase_derivative(model: PotentialModel, kappa: float, n: int, seed: int, realization: int,
                     cfg: IntegratorConfig = IntegratorConfig()) -> float:
    return integrate_phase(model, kappa, n, seed, realization, cfg).dtheta_dkappa


def trajectory_csv(traj: np.ndarray) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t", "theta", "log_r", "ReJ", "ImJ", "ReR", "ImR"])
    for row in traj:
        wr.writerow([repr(float(row[0]))] + [repr(float(x)) for x in row[1:]])
    return buf.getvalue()
