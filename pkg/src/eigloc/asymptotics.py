"""Limit functions of the two-parameter eigenvalue asymptotics.

* ``h_of_w``: the ball radius law, sqrt(h^2 - 1) - arcsec(h) = pi / w.
* ``g_R``: shell law, the solution of an autonomous-free first-order ODE with
  a removable branch where w meets y.
* ``f_R``: the comparison ODE bounding R g_R from above.
* ``critical_s``: the fixed point g_R(s) = s separating localized from
  delocalized shell modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, SolverIntegrityError
from .geometry import DomainSpec

BRANCH_DELTA = 1e-12
ODE_RTOL = 1e-11


# ---------------------------------------------------------------------------
# h(w)
# ---------------------------------------------------------------------------


def _phase_fn(s):
    """s - arctan(s), summed as a series for small s."""
    if s < 0.5:
        s2 = s * s
        term, acc = s, 0.0
        for n in range(1, 30):
            term *= -s2 if n > 1 else s2
            acc += term / (2 * n + 1)
        return acc
    return s - math.atan(s)


def inverse_phase(T):
    """The z > 1 solving sqrt(z^2 - 1) - arcsec(z) = T, for T >= 0.

    Newton on s = sqrt(z^2 - 1); s - arctan(s) is convex, so the iteration is
    monotone after at most one overshoot.
    """
    T = float(T)
    if not (math.isfinite(T) and T >= 0):
        raise DomainError("phase target must be finite and >= 0")
    if T == 0.0:
        return 1.0
    s = (3.0 * T) ** (1.0 / 3.0) if T < 1.0 else T + 0.5 * math.pi
    for _ in range(100):
        r = _phase_fn(s) - T
        step = r * (1.0 + s * s) / (s * s)
        s_new = s - step
        if s_new <= 0:
            s_new = 0.5 * s
        if abs(s_new - s) <= 4e-16 * s:
            s = s_new
            break
        s = s_new
    return math.hypot(1.0, s)


def h_of_w(w):
    """Ball radius function: j_{nu,k} / nu -> h(w) as l/k -> w."""
    w = float(w)
    if not (math.isfinite(w) and w > 0):
        raise DomainError("w must be positive and finite")
    return inverse_phase(math.pi / w)


def h_residual(w):
    """|sqrt(h^2 - 1) - arcsec(h) - pi/w| at the computed h(w)."""
    h = h_of_w(w)
    s = math.sqrt((h - 1.0) * (h + 1.0))
    return abs(_phase_fn(s) - math.pi / w)


# ---------------------------------------------------------------------------
# ODE right-hand sides
# ---------------------------------------------------------------------------


def _acos_ratio(u):
    """arccos(u) / sqrt(1 - u^2) on [0, 1], equal to 1 at u = 1."""
    s = math.sqrt((1.0 - u) * (1.0 + u))
    if s < 1e-4:
        s2 = s * s
        return 1.0 + s2 / 6.0 + 0.075 * s2 * s2
    return math.atan2(s, u) / s


def rhs_g(w, y, R):
    """Right side of the g_R equation.

    The w <= y terms are kept only while w/y <= 1 - BRANCH_DELTA; past that
    they vanish continuously (both behave like sqrt(2 (1 - w/y))).
    """
    u1 = w / (R * y)
    if u1 >= 1.0:
        raise SolverIntegrityError(f"w/(R y) = {u1:g} left [0, 1)")
    u2 = w / y
    if u2 <= 1.0 - BRANCH_DELTA:
        s1 = math.sqrt((1.0 - u1) * (1.0 + u1))
        s2 = math.sqrt((1.0 - u2) * (1.0 + u2))
        return (math.atan2(s1, u1) - math.atan2(s2, u2)) / (R * s1 - s2)
    return _acos_ratio(u1) / R


def rhs_f(w, y, R=None):
    """Right side of the f_R equation, arccos(w/y) / sqrt(1 - (w/y)^2)."""
    u = w / y
    if u >= 1.0:
        raise SolverIntegrityError("f_R solution reached the line y = w")
    return _acos_ratio(u)


def _rk4(fun, w, y, h, R):
    k1 = fun(w, y, R)
    k2 = fun(w + 0.5 * h, y + 0.5 * h * k1, R)
    k3 = fun(w + 0.5 * h, y + 0.5 * h * k2, R)
    k4 = fun(w + h, y + h * k3, R)
    return y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def _doubled_step(fun, w, y, h, R):
    """RK4 with step doubling; returns (Richardson-corrected y, error estimate)."""
    full = _rk4(fun, w, y, h, R)
    half = _rk4(fun, w, y, 0.5 * h, R)
    two = _rk4(fun, w + 0.5 * h, half, 0.5 * h, R)
    diff = (two - full) / 15.0
    return two + diff, abs(diff)


def _integrate(fun, R, w0, y0, w1, check, h0=None, rtol=ODE_RTOL, nodes=None):
    """Adaptive step-doubling RK4 from w0 to w1.

    ``check(w, y, y_prev)`` returns False when a bound is violated; the step is
    then rejected and halved.  Accepted nodes are appended to ``nodes``.
    """
    w, y = w0, y0
    span = w1 - w0
    if span <= 0:
        return y
    h = min(span, h0 if h0 else 0.01 * max(1.0, w0, span))
    h_min = 1e-14 * max(1.0, w1)
    while w < w1:
        h = min(h, w1 - w)
        try:
            y_new, err = _doubled_step(fun, w, y, h, R)
            ok = math.isfinite(y_new) and check(w + h, y_new, y)
        except (SolverIntegrityError, ValueError):
            ok, err = False, math.inf
        tol = rtol * max(1.0, abs(y))
        if ok and err <= tol:
            w = w1 if w + h >= w1 else w + h
            y = y_new
            if nodes is not None:
                nodes.append((w, y))
            fac = 2.0 if err == 0 else min(2.0, 0.9 * (tol / err) ** 0.2)
            h *= max(fac, 0.2)
        else:
            h *= 0.5 if not ok or err == math.inf else max(0.1, 0.9 * (tol / err) ** 0.2)
            if h < h_min:
                raise SolverIntegrityError(f"step size underflow at w={w:.17g} (R={R:g})")
    return y


@dataclass(frozen=True)
class OdeSolution:
    """Tabulated ODE solution with a monotone interpolant and exact evaluation.

    ``interp`` is a PCHIP interpolant through the nodes (shape preserving);
    calling the object re-integrates from the nearest node below ``w`` and is
    accurate to the solver tolerance.
    """

    grid: np.ndarray
    values: np.ndarray
    R: float
    kind: str
    branch: float | None = None
    interp: PchipInterpolator = field(repr=False, compare=False, default=None)

    @property
    def w_max(self):
        return float(self.grid[-1])

    def __call__(self, w):
        w = float(w)
        if not (0.0 <= w <= self.w_max):
            raise DomainError(f"w={w:g} outside the solved range [0, {self.w_max:g}]")
        i = int(np.searchsorted(self.grid, w, side="right")) - 1
        w0, y0 = float(self.grid[i]), float(self.values[i])
        if w == w0:
            return y0
        fun = rhs_g if self.kind == "g" else rhs_f
        return _integrate(fun, self.R, w0, y0, w, lambda *_: True, h0=w - w0)

    def ratio(self, w):
        """w / y(w)."""
        return float(w) / self(w)


def _validate_R(R):
    R = float(R)
    if not (math.isfinite(R) and R > 1.0):
        raise DomainError("R must be finite and > 1")
    return R


def _validate_wmax(w_max):
    w_max = float(w_max)
    if not (0 < w_max <= 1e4):
        raise DomainError("w_max must lie in (0, 1e4]")
    return w_max


def check_g_solution(sol):
    """Raise SolverIntegrityError unless the g_R invariants hold at every node."""
    R, w, y = sol.R, sol.grid, sol.values
    y0 = math.pi / (R - 1.0)
    if y[0] != y0 or w[0] != 0.0:
        raise SolverIntegrityError("initial condition y(0) = pi/(R-1) not met")
    if not np.all(np.diff(w) > 0):
        raise SolverIntegrityError("grid not strictly increasing")
    if not np.all(np.diff(y) > 0):
        raise SolverIntegrityError("g_R not strictly increasing")
    inner = w[1:]
    if not np.all((y[1:] > y0) & (y[1:] < y0 + math.pi * inner / (2.0 * R))):
        raise SolverIntegrityError("g_R left the band pi/(R-1) < g < pi/(R-1) + pi w/(2R)")
    if not np.all(np.diff(inner / y[1:]) > 0):
        raise SolverIntegrityError("w/g_R(w) not strictly increasing")


def _g_bounds(R):
    y0 = math.pi / (R - 1.0)

    def check(w, y, y_prev):
        return y0 < y < y0 + math.pi * w / (2.0 * R) and y > y_prev and w / y < R

    return check


def g_R(R, w_max=100.0):
    """Solve the shell ODE for g_R on [0, w_max].

    The crossing of w = y (which is s(R)) is located and inserted as a node so
    the right side never switches branch inside a step.
    """
    R = _validate_R(R)
    w_max = _validate_wmax(w_max)
    y0 = math.pi / (R - 1.0)
    check = _g_bounds(R)
    nodes = [(0.0, y0)]
    branch = None
    w, y = 0.0, y0
    h = 0.01 * min(1.0, y0)
    while w < w_max:
        step = []
        y_next = _integrate(rhs_g, R, w, y, min(w_max, w + 64 * h), check, h0=h, nodes=step)
        cross = [i for i, (wi, yi) in enumerate(step) if wi >= yi]
        if branch is None and cross:
            i = cross[0]
            wa, ya = (w, y) if i == 0 else step[i - 1]
            wb = step[i][0]
            nodes.extend(step[:i])

            def gap(t, wa=wa, ya=ya):
                yt = ya if t == wa else _integrate(rhs_g, R, wa, ya, t, lambda *_: True, h0=t - wa)
                return t - yt

            branch = brentq(gap, wa, wb, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            yb = ya if branch == wa else _integrate(rhs_g, R, wa, ya, branch, lambda *_: True, h0=branch - wa)
            if branch > wa:
                nodes.append((branch, yb))
            w, y = nodes[-1]
            continue
        nodes.extend(step)
        w, y = w_max if not step else step[-1][0], y_next
        if len(step) >= 2:
            h = step[-1][0] - step[-2][0]
    grid = np.array([p[0] for p in nodes])
    vals = np.array([p[1] for p in nodes])
    sol = OdeSolution(grid, vals, R, "g", branch, PchipInterpolator(grid, vals))
    check_g_solution(sol)
    return sol


def f_R(R, w_max=100.0):
    """Solve the comparison ODE y' = arccos(w/y)/sqrt(1-(w/y)^2), y(0) = pi R/(R-1)."""
    R = _validate_R(R)
    w_max = _validate_wmax(w_max)
    y0 = math.pi * R / (R - 1.0)
    nodes = [(0.0, y0)]
    _integrate(rhs_f, R, 0.0, y0, w_max, lambda w, y, yp: y > w and y > yp, h0=0.01, nodes=nodes)
    grid = np.array([p[0] for p in nodes])
    vals = np.array([p[1] for p in nodes])
    sol = OdeSolution(grid, vals, R, "f", None, PchipInterpolator(grid, vals))
    if not (np.all(vals > grid) and np.all(np.diff(vals) > 0)):
        raise SolverIntegrityError("f_R must increase and stay above w")
    if not np.all(np.diff(grid[1:] / vals[1:]) > 0):
        raise SolverIntegrityError("w/f_R(w) not strictly increasing")
    return sol


def check_f_dominates(g_sol, f_sol):
    """Raise unless R g_R(w) < f_R(w) on the grid nodes of g with w > 0 (equal at 0)."""
    keep = (g_sol.grid > 0) & (g_sol.grid <= f_sol.w_max)
    w = g_sol.grid[keep]
    fv = np.array([f_sol(x) for x in w])
    gv = g_sol.values[keep]
    if not np.all(g_sol.R * gv < fv):
        raise SolverIntegrityError("R g_R(w) < f_R(w) violated")


@lru_cache(maxsize=64)
def cached_g(R, w_max=128.0):
    """Shared g_R solution, reused by zero seeding and localization queries."""
    return g_R(R, w_max)


# ---------------------------------------------------------------------------
# Critical value
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalValue:
    """Fixed point g_R(s) = s with its residual |g_R(s) - s|."""

    R: float
    s: float
    residual: float


def critical_s(R, sol=None):
    """Critical ratio s(R): bisection on w/g_R(w) - 1, then secant polishing."""
    R = _validate_R(R)
    lo = math.pi / (R - 1.0)
    if R > 0.5 * math.pi:
        hi = 2.0 * math.pi * R / ((R - 1.0) * (2.0 * R - math.pi))
    else:
        hi = 2.0 * lo
    if sol is None or sol.w_max < hi:
        while True:
            w_max = min(1e4, 1.05 * hi)
            sol = g_R(R, w_max)
            if sol.w_max / sol(sol.w_max) > 1.0 or w_max >= 1e4:
                break
            hi *= 2.0
    phi = lambda w: w / sol(w) - 1.0
    a, b = lo, min(hi, sol.w_max)
    fa, fb = phi(a), phi(b)
    if not (fa < 0 < fb):
        raise SolverIntegrityError(f"no sign change of w/g_R(w) - 1 on [{a:g}, {b:g}]")
    while b - a > 1e-6 * b:
        m = 0.5 * (a + b)
        fm = phi(m)
        if fm < 0:
            a, fa = m, fm
        else:
            b, fb = m, fm
    # secant on the final bracket
    x0, x1, f0, f1 = a, b, fa, fb
    for _ in range(30):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x0, f0 = x1, f1
        x1, f1 = x2, phi(x2)
        if abs(x1 - x0) <= 1e-14 * x1:
            break
    s = x1
    residual = abs(sol(s) - s)
    if residual > 1e-9 * s or not s > lo:
        raise SolverIntegrityError(f"critical value residual {residual:g} too large")
    return CriticalValue(R, s, residual)


@lru_cache(maxsize=64)
def cached_critical(R):
    return critical_s(R)


def localized_radius(domain: DomainSpec, w):
    """Radius of the sphere the l/k -> w family concentrates on, or None.

    Balls and sectors give 1/h(w).  Shells give w/g_R(w) above s(R), the
    inner wall at s(R) and None below it.
    """
    w = float(w)
    if not (math.isfinite(w) and w > 0):
        raise DomainError("w must be positive and finite")
    if not domain.is_annular:
        return 1.0 / h_of_w(w)
    s = cached_critical(domain.R).s
    if w == s:
        return 1.0
    if w < s:
        return None
    sol = cached_g(domain.R, max(128.0, 2.0 ** math.ceil(math.log2(w))))
    return w / sol(w)
