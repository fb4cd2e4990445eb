"""Alloy-type decaying potential V(t) = sum_j w(j) j^-alpha f(t - j) on [0, n]."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import amplitudes as amp
from .errors import ConfigError, DomainError

STANDARD = "standard"
DECAYING = "decaying_coupling"


@dataclass(frozen=True)
class Indicator:
    """f = 1 on [0, 1)."""

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where((u >= 0) & (u < 1), 1.0, 0.0)

    @property
    def sup_norm(self) -> float:
        return 1.0

    @property
    def table(self) -> np.ndarray:
        return np.ones(1)


@dataclass(frozen=True)
class Bump:
    """C^1 bump 16 u^2 (1-u)^2: vanishes with its derivative at 0 and 1, peak 1."""

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where((u >= 0) & (u <= 1), 16.0 * u * u * (1 - u) ** 2, 0.0)

    @property
    def sup_norm(self) -> float:
        return 1.0

    @property
    def table(self) -> None:
        return None


@dataclass(frozen=True)
class Table:
    """Piecewise-constant profile on a uniform grid of the unit cell."""

    values: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        if not v:
            raise ConfigError("table profile needs at least one value")
        if not all(math.isfinite(x) for x in v):
            raise ConfigError("table profile values must be finite")
        object.__setattr__(self, "values", v)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        L = len(self.values)
        idx = np.clip(np.floor(u * L).astype(int), 0, L - 1)
        return np.where((u >= 0) & (u < 1), np.asarray(self.values)[idx], 0.0)

    @property
    def sup_norm(self) -> float:
        return max(abs(x) for x in self.values)

    @property
    def table(self) -> np.ndarray:
        return np.asarray(self.values)


SiteProfile = Union[Indicator, Bump, Table]


def coupling_weight(alpha: float, j: int, n: int, mode: str = STANDARD) -> float:
    """Envelope in front of omega(j): ``j**-alpha`` or ``n**-alpha``."""
    if j < 1:
        raise DomainError("cells are indexed from j = 1; the j = 0 weight is singular")
    if mode == STANDARD:
        return float(j) ** -alpha
    if mode == DECAYING:
        return float(n) ** -alpha
    raise ConfigError(f"unknown coupling mode {mode!r}")


@dataclass(frozen=True)
class PotentialModel:
    alpha: float
    profile: SiteProfile = Indicator()
    amplitudes: amp.AmplitudeSpec = amp.IidUniform()
    mode: str = STANDARD

    def __post_init__(self):
        if not self.alpha > 0.5:
            raise ConfigError(f"alpha must exceed 1/2, got {self.alpha}")
        if self.mode not in (STANDARD, DECAYING):
            raise ConfigError(f"unknown coupling mode {self.mode!r}")

    def realize(self, n: int, seed: int, realization: int) -> "PotentialRealization":
        if n < 2:
            raise DomainError("n must be >= 2")
        omega = amp.sample_sequence(self.amplitudes, seed, realization, n - 1)
        return self.with_amplitudes(n, omega)

    def with_amplitudes(self, n: int, omega) -> "PotentialRealization":
        """Realization from explicit omega(1..n-1)."""
        omega = np.asarray(omega, dtype=float)
        if omega.shape != (n - 1,):
            raise ConfigError(f"need {n - 1} amplitudes, got {omega.shape}")
        j = np.arange(1, n, dtype=float)
        w = j ** -self.alpha if self.mode == STANDARD else np.full(n - 1, float(n) ** -self.alpha)
        coefs = np.concatenate([[0.0], omega * w])
        return PotentialRealization(self, n, coefs)


def cell_coefficient(model: PotentialModel, j: int, n: int, omega_j: float) -> float:
    """Coefficient of the profile on cell ``[j, j+1)``."""
    if not 1 <= j <= n - 1:
        raise DomainError(f"cell index {j} outside 1..{n - 1}")
    return omega_j * coupling_weight(model.alpha, j, n, model.mode)


@dataclass(frozen=True)
class PotentialRealization:
    """One sample path on [0, n]; ``coefs[j]`` multiplies ``f(t - j)`` and
    ``coefs[0] = 0``."""

    model: PotentialModel
    n: int
    coefs: np.ndarray

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > self.n)):
            raise DomainError(f"t outside [0, {self.n}]")
        j = np.minimum(np.floor(t).astype(int), self.n - 1)
        return self.coefs[j] * self.model.profile(t - j)

    @property
    def envelope(self) -> float:
        return float(np.max(np.abs(self.coefs))) * self.model.profile.sup_norm


def evaluate(realization: PotentialRealization, t):
    return realization.evaluate(t)


def profile_from_dict(d: dict) -> SiteProfile:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "indicator" and not d:
        return Indicator()
    if kind == "bump" and not d:
        return Bump()
    if kind == "table" and set(d) == {"values"}:
        return Table(tuple(d["values"]))
    raise ConfigError(f"bad profile {dict(kind=kind, **d)!r}")


def profile_to_dict(p: SiteProfile) -> dict:
    if isinstance(p, Indicator):
        return {"kind": "indicator"}
    if isinstance(p, Bump):
        return {"kind": "bump"}
    return {"kind": "table", "values": list(p.values)}


_MODEL_KEYS = {"alpha", "profile", "amplitudes", "mode"}


def model_from_dict(d: dict) -> PotentialModel:
    unknown = set(d) - _MODEL_KEYS
    if unknown:
        raise ConfigError(f"unknown model keys {sorted(unknown)}")
    if "alpha" not in d:
        raise ConfigError("model.alpha is required")
    return PotentialModel(
        alpha=float(d["alpha"]),
        profile=profile_from_dict(d.get("profile", {"kind": "indicator"})),
        amplitudes=amp.spec_from_dict(d.get("amplitudes", {"kind": "iid_uniform"})),
        mode=d.get("mode", STANDARD),
    )


def model_to_dict(m: PotentialModel) -> dict:
    return {"alpha": m.alpha, "profile": profile_to_dict(m.profile),
            "amplitudes": amp.spec_to_dict(m.amplitudes), "mode": m.mode}
