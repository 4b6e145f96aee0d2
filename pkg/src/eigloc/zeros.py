"""Zeros of J_nu, of the cross product J(z)Y(Rz) - Y(z)J(Rz), and of Ai.

Zeros are identified by counting, not by scanning for sign changes: with
J + iY = M e^{i theta} the phase theta increases strictly from -pi/2, so the
k-th zero of J is where theta = (k - 1/2) pi.  The cross product equals
M(z) M(Rz) sin(theta(Rz) - theta(z)), and the phase gap theta(Rz) - theta(z)
is increasing as well, so its k-th zero is where the gap equals k pi.
Brackets are accepted only when the phase at both ends lies within pi of the
target, which leaves exactly one zero inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as sc
from scipy.optimize import brentq

from . import specfun
from .asymptotics import cached_g, inverse_phase
from .errors import BracketError, DomainError

DEFAULT_TOL = 1e-11
_EPS = np.finfo(float).eps
_MAX_EXPAND = 200


@dataclass(frozen=True)
class ZeroQuery:
    """k-th zero of J_nu, or of the cross product when R is given."""

    nu: float
    k: int
    R: float | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not (math.isfinite(self.nu) and self.nu >= 0):
            raise DomainError("nu must be finite and >= 0")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError("k must be an integer >= 1")
        if self.R is not None and not (math.isfinite(self.R) and self.R > 1):
            raise DomainError("R must be > 1")
        if not (0 < self.tol <= 1e-6):
            raise DomainError("tol must lie in (0, 1e-6]")


def _query(q, k, R, tol):
    if isinstance(q, ZeroQuery):
        return q
    return ZeroQuery(float(q), int(k), None if R is None else float(R), tol)


# ---------------------------------------------------------------------------
# Airy zeros
# ---------------------------------------------------------------------------


def _airy_seed(k):
    t = 3.0 * math.pi / 8.0 * (4 * k - 1)
    t2 = t ** -2.0
    return -(t ** (2.0 / 3.0)) * (
        1.0 + t2 * (5.0 / 48.0 + t2 * (-5.0 / 36.0 + t2 * (77125.0 / 82944.0 - t2 * 108056875.0 / 6967296.0)))
    )


def airy_zero(k):
    """k-th (negative) zero a_k of Ai."""
    if int(k) != k or k < 1:
        raise DomainError("k must be an integer >= 1")
    seed = _airy_seed(int(k))
    half = 0.25 * math.pi / math.sqrt(abs(seed))
    ai = lambda x: sc.airy(x)[0]
    lo, hi = seed - half, seed + half
    for _ in range(_MAX_EXPAND):
        if ai(lo) * ai(hi) < 0:
            break
        half *= 1.5
        lo, hi = seed - half, seed + half
    else:
        raise BracketError(f"no sign change of Ai around the seed for k={k}")
    return brentq(ai, lo, hi, xtol=1e-15, rtol=4 * _EPS)


# ---------------------------------------------------------------------------
# Phases
# ---------------------------------------------------------------------------


def bessel_phase(nu, x):
    """theta_nu(x) for scalar x > 0."""
    return float(specfun.phase_modulus(nu, [x])[0][0])


def cross_phase(nu, R, z):
    """theta_nu(Rz) - theta_nu(z); the cross product vanishes at multiples of pi."""
    th, _ = specfun.phase_modulus(nu, [z, R * z])
    return float(th[1] - th[0])


def _mcmahon(nu, k):
    beta = (k + 0.5 * nu - 0.25) * math.pi
    mu = 4.0 * nu * nu
    b8 = 8.0 * beta
    return (
        beta
        - (mu - 1.0) / b8
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8**3)
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * b8**5)
    )


def j_zero_seed(nu, k):
    """McMahon estimate for small order, nu z(nu^{-2/3} a_k) otherwise."""
    if nu < 2.0:
        return _mcmahon(nu, k)
    zeta = nu ** (-2.0 / 3.0) * airy_zero(k)
    return nu * inverse_phase(2.0 / 3.0 * (-zeta) ** 1.5)


def cross_zero_seed(nu, R, k):
    """k g_R(nu/k) from the shell ODE when nu/k <= 100, else None."""
    w = nu / k
    if w > 100.0:
        return None
    return k * cached_g(float(R))(w)


def _phase_bracket(phase, target, seed, width, floor):
    """[lo, hi] with phase(lo) in (target - pi, target), phase(hi) in (target, target + pi)."""
    lo = max(floor, seed - width)
    hi = seed + width
    plo, phi = phase(lo), phase(hi)
    step = width
    n = 0
    while plo >= target:
        if lo <= floor:
            raise BracketError("phase at the lower floor already exceeds the target")
        step *= 2.0
        lo = max(floor, lo - step)
        plo = phase(lo)
        n += 1
        if n > _MAX_EXPAND:
            raise BracketError("lower bracket expansion exhausted")
    step = width
    while phi <= target:
        step *= 2.0
        hi += step
        phi = phase(hi)
        n += 1
        if n > _MAX_EXPAND:
            raise BracketError("upper bracket expansion exhausted")
    while plo <= target - math.pi or phi >= target + math.pi:
        mid = 0.5 * (lo + hi)
        pm = phase(mid)
        if pm < target:
            lo, plo = mid, pm
        else:
            hi, phi = mid, pm
        n += 1
        if n > _MAX_EXPAND:
            raise BracketError("bracket refinement exhausted")
    return lo, hi


def zero_bracket(nu, k, kind="j", R=None):
    """Interval holding exactly the k-th zero of J_nu (kind 'j') or of the cross product."""
    q = ZeroQuery(float(nu), int(k), None if R is None else float(R))
    if kind == "j":
        seed = j_zero_seed(q.nu, q.k)
        seed = max(seed, q.nu + 1e-3)
        width = 0.25 * math.pi * seed / math.sqrt(max(seed * seed - q.nu * q.nu, seed ** (4.0 / 3.0)))
        floor = q.nu if q.nu > 0 else 1e-3 * seed
        return _phase_bracket(lambda x: bessel_phase(q.nu, x), (q.k - 0.5) * math.pi, seed, width, floor)
    if kind == "cross":
        if q.R is None:
            raise DomainError("cross-product zeros need R")
        floor = q.nu / q.R if q.nu > 0 else 1e-3 * math.pi / (q.R - 1.0)
        seed = cross_zero_seed(q.nu, q.R, q.k)
        if seed is None:
            seed = floor
        seed = max(seed, floor)
        width = 0.25 * math.pi / (q.R - 1.0)
        return _phase_bracket(lambda z: cross_phase(q.nu, q.R, z), q.k * math.pi, seed, width, floor)
    raise DomainError(f"unknown zero kind {kind!r}")


def _refine(fun, lo, hi, tol):
    flo, fhi = fun(lo), fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketError("bracket endpoints have equal signs")
    return brentq(fun, lo, hi, xtol=1e-300, rtol=max(4 * _EPS, 0.01 * tol), maxiter=200)


def bessel_zero_j(q, k=None, tol=DEFAULT_TOL):
    """j_{nu,k}, the k-th positive zero of J_nu.

    Accepts a :class:`ZeroQuery` or ``(nu, k)``.
    """
    q = _query(q, k, None, tol)
    lo, hi = zero_bracket(q.nu, q.k, "j")
    # J/M has the sign of J and stays O(1) at any order
    fun = lambda x: float(specfun.unit_jy(q.nu, [x])[0][0])
    return _refine(fun, lo, hi, q.tol)


def cross_zero(q, k=None, R=None, tol=DEFAULT_TOL):
    """a_{nu,k}, the k-th zero of J(z)Y(Rz) - Y(z)J(Rz).

    Accepts a :class:`ZeroQuery` or ``(nu, k, R)``.
    """
    q = _query(q, k, R, tol)
    if q.R is None:
        raise DomainError("cross-product zeros need R")
    lo, hi = zero_bracket(q.nu, q.k, "cross", q.R)
    fun = lambda z: float(specfun.cross_product_unit(q.nu, q.R, z)[0])
    return _refine(fun, lo, hi, q.tol)


def bessel_zeros_j(nu, kmax, tol=DEFAULT_TOL):
    """j_{nu,1}, ..., j_{nu,kmax}, with a minimum-separation check."""
    return _checked([bessel_zero_j(nu, k, tol) for k in range(1, kmax + 1)])


def cross_zeros(nu, R, kmax, tol=DEFAULT_TOL):
    """a_{nu,1}, ..., a_{nu,kmax} for the shell with ratio R."""
    return _checked([cross_zero(nu, k, R, tol) for k in range(1, kmax + 1)])


def _checked(zs):
    zs = np.asarray(zs, dtype=float)
    if zs.size >= 3:
        gaps = np.diff(zs)
        if np.any(gaps < 0.1 * np.median(gaps)):
            raise BracketError("two accepted zeros are closer than 0.1 local spacing")
    elif zs.size == 2 and not zs[1] > zs[0]:
        raise BracketError("zeros not increasing")
    return zs
