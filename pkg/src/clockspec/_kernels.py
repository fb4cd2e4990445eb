"""Compiled per-cell loops for the Pruefer system.

State layout used by the ``full`` kernels (``out`` array of length 9)::

    0 theta   1 log_r   2 Re J   3 Im J   4 Re R   5 Im R
    6 A mantissa   7 B mantissa   8 logscale

with ``A = out[6] * exp(out[8])`` and likewise for B.  Trajectories record
entries 0..5 at every integer t.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

PI = math.pi
RESCALE_AT = 1e150

PROFILE_INDICATOR = 0
PROFILE_BUMP = 1
PROFILE_TABLE = 2


@njit(cache=True, nogil=True)
def _sinc(u):
    if abs(u) < 1e-8:
        return 1.0 - u * u / 6.0
    return math.sin(u) / u


@njit(cache=True, nogil=True)
def _sinhc(u):
    if abs(u) < 1e-8:
        return 1.0 + u * u / 6.0
    return math.sinh(u) / u


@njit(cache=True, nogil=True)
def _sn_sq_integral(w):
    """int_0^1 (sin(k s)/k)^2 ds as a function of w = k^2 (any sign)."""
    if abs(w) < 1e-3:
        return 1.0 / 3.0 - w / 15.0 + 2.0 * w * w / 315.0 - w * w * w / 2835.0
    if w > 0:
        k = math.sqrt(w)
        return (2.0 * k - math.sin(2.0 * k)) / (4.0 * k * k * k)
    q = math.sqrt(-w)
    return (math.sinh(2.0 * q) - 2.0 * q) / (4.0 * q * q * q)


@njit(cache=True, nogil=True)
def segment(v, kappa, ell, theta, res):
    """Exact transfer over a segment of length ``ell`` with constant potential v.

    ``res`` receives ``(dtheta, dlog_r, I1, I2)`` where I1 = int psi^2 and
    I2 = int psi'^2 for the solution started with unit Pruefer amplitude.
    """
    E = kappa * kappa - v
    m = math.floor(theta / PI + 0.5)
    x = theta - m * PI
    a = math.sin(x)
    b = kappa * math.cos(x)
    if E > 0.0:
        k = math.sqrt(E)
        u = k * ell
        c1 = math.cos(u)
        s1 = ell * _sinc(u)
        c2 = 0.5 * ell * (1.0 + _sinc(2.0 * u))
        cx = 0.5 * ell * ell * _sinc(u) ** 2
    elif E < 0.0:
        q = math.sqrt(-E)
        u = q * ell
        c1 = math.cosh(u)
        s1 = ell * _sinhc(u)
        c2 = 0.5 * ell * (1.0 + _sinhc(2.0 * u))
        cx = 0.5 * ell * ell * _sinhc(u) ** 2
    else:
        c1 = 1.0
        s1 = ell
        c2 = ell
        cx = 0.5 * ell * ell
    s2 = ell * ell * ell * _sn_sq_integral(E * ell * ell)
    psi1 = a * c1 + b * s1
    dpsi1 = -E * a * s1 + b * c1
    res[1] = 0.5 * math.log(psi1 * psi1 + (dpsi1 / kappa) ** 2)
    res[2] = a * a * c2 + 2.0 * a * b * cx + b * b * s2
    res[3] = E * E * a * a * s2 - 2.0 * E * a * b * cx + b * b * c2
    if E > 0.0:
        # free rotation in the frame (psi, psi'/k); multiples of pi/2 map to themselves
        phi = math.atan2(k * math.sin(x), kappa * math.cos(x)) + u
        m2 = math.floor(phi / PI + 0.5)
        y = phi - m2 * PI
        res[0] = m2 * PI + math.atan2(kappa * math.sin(y), k * math.cos(y)) - x
    else:
        # no oscillation: the phase moves by less than pi in either direction
        d = math.atan2(psi1, dpsi1 / kappa) - x
        d = d - 2.0 * PI * math.floor((d + PI) / (2.0 * PI))
        res[0] = d


@njit(cache=True, nogil=True)
def segment_theta(v, kappa, ell, theta):
    """Phase increment only (cheaper variant of :func:`segment`)."""
    E = kappa * kappa - v
    m = math.floor(theta / PI + 0.5)
    x = theta - m * PI
    if E > 0.0:
        k = math.sqrt(E)
        phi = math.atan2(k * math.sin(x), kappa * math.cos(x)) + k * ell
        m2 = math.floor(phi / PI + 0.5)
        y = phi - m2 * PI
        return m2 * PI + math.atan2(kappa * math.sin(y), k * math.cos(y)) - x
    a = math.sin(x)
    b = kappa * math.cos(x)
    if E < 0.0:
        q = math.sqrt(-E)
        c1 = math.cosh(q * ell)
        s1 = ell * _sinhc(q * ell)
    else:
        c1 = 1.0
        s1 = ell
    psi1 = a * c1 + b * s1
    dpsi1 = -E * a * s1 + b * c1
    d = math.atan2(psi1, dpsi1 / kappa) - x
    return d - 2.0 * PI * math.floor((d + PI) / (2.0 * PI))


@njit(cache=True, nogil=True)
def exact_theta(coefs, tab, kappa):
    """theta_n(kappa) for a piecewise-constant potential; n = len(coefs)."""
    L = len(tab)
    ell = 1.0 / L
    theta = 0.0
    comp = 0.0  # compensated summation keeps theta_n accurate to a few ulp
    for j in range(len(coefs)):
        c = coefs[j]
        if c == 0.0:
            y = kappa - comp
            t = theta + y
            comp = (t - theta) - y
            theta = t
            continue
        for i in range(L):
            y = segment_theta(c * tab[i], kappa, ell, theta) - comp
            t = theta + y
            comp = (t - theta) - y
            theta = t
    return theta - comp


@njit(cache=True, nogil=True)
def exact_full(coefs, tab, kappa, out, traj):
    """All accumulators for a piecewise-constant potential.

    ``traj`` has shape (n+1, 6) to record integer times or (0, 6) to skip.
    """
    L = len(tab)
    ell = 1.0 / L
    n = len(coefs)
    record = traj.shape[0] > 0
    res = np.empty(4)
    theta = 0.0
    logr = 0.0
    reJ = 0.0
    imJ = 0.0
    reR = 0.0
    imR = 0.0
    Am = 0.0
    Bm = 0.0
    ls = 0.0
    comp = 0.0
    ik2 = 1.0 / (kappa * kappa)
    if record:
        for q in range(6):
            traj[0, q] = 0.0
    for j in range(n):
        c = coefs[j]
        for i in range(L):
            v = c * tab[i]
            w = math.exp(2.0 * logr - ls)
            if v == 0.0:
                Am += w * ell
                dth = kappa * ell
            else:
                segment(v, kappa, ell, theta, res)
                dth = res[0]
                Am += w * (res[2] + res[3] * ik2)
                Bm += w * 2.0 * v * res[2]
                rj = 2.0 * kappa * (dth - kappa * ell)
                ij = 2.0 * kappa * res[1]
                reJ += rj + v * ell
                imJ += ij
                reR += rj
                imR += ij
                logr += res[1]
            y = dth - comp
            t = theta + y
            comp = (t - theta) - y
            theta = t
            if Am > RESCALE_AT or Bm > RESCALE_AT or -Bm > RESCALE_AT:
                s = max(Am, abs(Bm))
                Am /= s
                Bm /= s
                ls += math.log(s)
        if record:
            traj[j + 1, 0] = theta - comp
            traj[j + 1, 1] = logr
            traj[j + 1, 2] = reJ
            traj[j + 1, 3] = imJ
            traj[j + 1, 4] = reR
            traj[j + 1, 5] = imR
    out[0] = theta - comp
    out[1] = logr
    out[2] = reJ
    out[3] = imJ
    out[4] = reR
    out[5] = imR
    out[6] = Am
    out[7] = Bm
    out[8] = ls


@njit(cache=True, nogil=True)
def _profile(kind, tab, u):
    if kind == PROFILE_INDICATOR:
        return 1.0
    if kind == PROFILE_BUMP:
        return 16.0 * u * u * (1.0 - u) * (1.0 - u)
    L = len(tab)
    i = int(math.floor(u * L))
    if i >= L:
        i = L - 1
    if i < 0:
        i = 0
    return tab[i]


@njit(cache=True, nogil=True)
def _rhs(V, kappa, y, lr0, dy):
    th = y[0]
    s = math.sin(th)
    s2t = math.sin(2.0 * th)
    c2t = math.cos(2.0 * th)
    rsq = math.exp(2.0 * (y[1] - lr0))
    dy[0] = kappa - V / kappa * s * s
    dy[1] = V / (2.0 * kappa) * s2t
    dy[2] = V * c2t
    dy[3] = V * s2t
    dy[4] = V * (c2t - 1.0)
    dy[5] = V * s2t
    dy[6] = rsq
    dy[7] = rsq * V * (1.0 - c2t)


@njit(cache=True, nogil=True)
def rk4_cell(c, kind, tab, kappa, h, y):
    """Advance the 8-vector ``y`` over one unit cell with ``h`` RK4 steps.

    ``y[6], y[7]`` are accumulated relative to ``r^2`` at the cell start.
    Potential samples are taken strictly inside each step, so piecewise
    profiles aligned with the step grid are integrated without crossing a
    jump inside a stage.
    """
    dt = 1.0 / h
    lr0 = y[1]
    k1 = np.empty(8)
    k2 = np.empty(8)
    k3 = np.empty(8)
    k4 = np.empty(8)
    tmp = np.empty(8)
    eps = 1e-12 * dt
    for s in range(h):
        u0 = s * dt
        Va = c * _profile(kind, tab, u0 + eps)
        Vm = c * _profile(kind, tab, u0 + 0.5 * dt)
        Vb = c * _profile(kind, tab, u0 + dt - eps)
        _rhs(Va, kappa, y, lr0, k1)
        for q in range(8):
            tmp[q] = y[q] + 0.5 * dt * k1[q]
        _rhs(Vm, kappa, tmp, lr0, k2)
        for q in range(8):
            tmp[q] = y[q] + 0.5 * dt * k2[q]
        _rhs(Vm, kappa, tmp, lr0, k3)
        for q in range(8):
            tmp[q] = y[q] + dt * k3[q]
        _rhs(Vb, kappa, tmp, lr0, k4)
        for q in range(8):
            y[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])


@njit(cache=True, nogil=True)
def rk4_full(coefs, kind, tab, kappa, h, out, traj):
    n = len(coefs)
    record = traj.shape[0] > 0
    y = np.zeros(8)
    Am = 0.0
    Bm = 0.0
    ls = 0.0
    if record:
        for q in range(6):
            traj[0, q] = 0.0
    for j in range(n):
        c = coefs[j]
        lr0 = y[1]
        if c == 0.0:
            y[0] += kappa
            y[6] = 1.0
            y[7] = 0.0
        else:
            y[6] = 0.0
            y[7] = 0.0
            rk4_cell(c, kind, tab, kappa, h, y)
        w = math.exp(2.0 * lr0 - ls)
        Am += w * y[6]
        Bm += w * y[7]
        if Am > RESCALE_AT or abs(Bm) > RESCALE_AT:
            s = max(Am, abs(Bm))
            Am /= s
            Bm /= s
            ls += math.log(s)
        if record:
            for q in range(6):
                traj[j + 1, q] = y[q]
    for q in range(6):
        out[q] = y[q]
    out[6] = Am
    out[7] = Bm
    out[8] = ls


@njit(cache=True, nogil=True)
def rk4_theta(coefs, kind, tab, kappa, h):
    out = np.empty(9)
    traj = np.empty((0, 6))
    rk4_full(coefs, kind, tab, kappa, h, out, traj)
    return out[0]
