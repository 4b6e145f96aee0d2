"""Bessel, Airy and cylinder functions of large real order, with overflow-safe scaling.

For x well below the order nu, J_nu(x) decays like exp(-nu (alpha - tanh alpha))
with sech alpha = x / nu, and Y_nu(x) grows at the same rate.  At orders in the
thousands these leave the double range, so every kernel here can return its
result as a :class:`ScaledValue` (scalar) or :class:`ScaledArray` (vector):
a mantissa and a natural-log scale factor.

Evaluation regions
------------------
* Representable values come from the AMOS routines wrapped by
  :mod:`scipy.special` (uniform Airy-type expansions at large order).
* J underflow with x <= 2 sqrt(nu + 1): ascending power series, summed in
  log form.
* J underflow / Y overflow with nu >= ``EvalPolicy.order_switch``: Debye
  expansion with the u_k(t) polynomials tabulated below.
* Y overflow at small order: upward three-term recurrence from the
  fractional order, renormalised as it runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.special as sc

from .errors import AccuracyLossError, DomainError

LN2 = math.log(2.0)
EPS = np.finfo(float).eps

# Values with |J| below _TINY (x < nu) or |Y| above _HUGE are recomputed in
# log form; AMOS is still accurate here but the next step would not be.
_TINY = 1e-280
_HUGE = 1e280


@dataclass(frozen=True)
class EvalPolicy:
    """Accuracy and region-switch settings for the Bessel kernels."""

    target_rel_err: float = 1e-12
    order_switch: float = 50.0
    max_terms: int = 400

    def __post_init__(self):
        if not (0.0 < self.target_rel_err <= 1e-6):
            raise ValueError("target_rel_err must lie in (0, 1e-6]")
        if not self.order_switch >= 10.0:
            raise ValueError("order_switch must be >= 10")
        if self.max_terms < 10:
            raise ValueError("max_terms must be >= 10")


DEFAULT_POLICY = EvalPolicy()


def achievable_rel_err(nu):
    """Modulus-relative error estimate of the double-precision kernels at order nu."""
    return 50.0 * EPS * (1.0 + abs(nu) ** (1.0 / 3.0))


def _check_reachable(nu, policy):
    est = achievable_rel_err(nu)
    if policy.target_rel_err < est:
        raise AccuracyLossError(
            f"target_rel_err={policy.target_rel_err:g} unreachable at order {nu:g}", est
        )


# ---------------------------------------------------------------------------
# Scaled numbers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaledValue:
    """A real number ``mantissa * exp(log_scale)``.

    ``|mantissa|`` lies in [1, 2) (or is exactly 0) and ``log_scale`` is always
    an integer multiple of ln 2, so converting back to a float is an exact
    ``ldexp`` whenever the value is representable.
    """

    mantissa: float
    log_scale: float = 0.0

    @classmethod
    def from_parts(cls, m, e=0):
        """Build ``m * 2**e`` in canonical form."""
        m = float(m)
        if m == 0.0:
            return cls(0.0, 0.0)
        if not math.isfinite(m):
            raise DomainError(f"cannot scale non-finite value {m!r}")
        f, ex = math.frexp(m)
        return cls(2.0 * f, (int(e) + ex - 1) * LN2)

    @classmethod
    def from_float(cls, x):
        return cls.from_parts(x, 0)

    @classmethod
    def from_log(cls, sign, log_abs):
        """Build ``sign * exp(log_abs)``."""
        if sign == 0 or log_abs == -math.inf:
            return cls(0.0, 0.0)
        if not math.isfinite(log_abs):
            raise DomainError("log magnitude must be finite")
        e = math.floor(log_abs / LN2)
        return cls.from_parts(math.copysign(math.exp(log_abs - e * LN2), sign), e)

    @property
    def exponent(self):
        """Base-2 exponent, ``log_scale / ln 2``."""
        return int(round(self.log_scale / LN2))

    @property
    def sign(self):
        return (self.mantissa > 0) - (self.mantissa < 0)

    @property
    def is_zero(self):
        return self.mantissa == 0.0

    @property
    def log_abs(self):
        """Natural log of the magnitude (``-inf`` for zero)."""
        if self.mantissa == 0.0:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.log_scale

    def __float__(self):
        try:
            return math.ldexp(self.mantissa, self.exponent)
        except OverflowError:
            return math.copysign(math.inf, self.mantissa)

    def __neg__(self):
        return ScaledValue(-self.mantissa, self.log_scale)

    def __abs__(self):
        return ScaledValue(abs(self.mantissa), self.log_scale)

    def __mul__(self, other):
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        return ScaledValue.from_parts(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        if other.is_zero:
            raise ZeroDivisionError("division by a zero ScaledValue")
        return ScaledValue.from_parts(self.mantissa / other.mantissa, self.exponent - other.exponent)

    def __add__(self, other):
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        e = max(self.exponent, other.exponent)
        m = math.ldexp(self.mantissa, self.exponent - e) + math.ldexp(other.mantissa, other.exponent - e)
        return ScaledValue.from_parts(m, e)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __repr__(self):
        return f"ScaledValue({self.mantissa!r} * exp({self.log_scale!r}))"


ZERO = ScaledValue(0.0, 0.0)


class ScaledArray:
    """Vector counterpart of :class:`ScaledValue`: ``mant * 2**expo`` elementwise."""

    __slots__ = ("mant", "expo")

    def __init__(self, mant, expo=None):
        self.mant = np.asarray(mant, dtype=float)
        if expo is None:
            expo = np.zeros(self.mant.shape, dtype=np.int64)
        self.expo = np.asarray(expo, dtype=np.int64)

    @classmethod
    def from_log(cls, sign, log_abs):
        sign = np.asarray(sign, dtype=float)
        log_abs = np.asarray(log_abs, dtype=float)
        finite = np.isfinite(log_abs) & (sign != 0)
        e = np.where(finite, np.floor(np.where(finite, log_abs, 0.0) / LN2), 0).astype(np.int64)
        m = np.where(finite, sign * np.exp(np.where(finite, log_abs, 0.0) - e * LN2), 0.0)
        return cls(m, e)

    def __len__(self):
        return self.mant.size

    @property
    def shape(self):
        return self.mant.shape

    def normalized(self):
        f, ex = np.frexp(self.mant)
        e = np.where(f == 0.0, 0, self.expo + ex - 1)
        return ScaledArray(2.0 * f, e)

    def log_abs(self):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.mant)) + self.expo * LN2

    def sign(self):
        return np.sign(self.mant)

    def to_float(self):
        with np.errstate(over="ignore", under="ignore"):
            return np.ldexp(self.mant, np.clip(self.expo, -100000, 100000).astype(np.int32))

    def take(self, idx):
        return ScaledArray(self.mant[idx], self.expo[idx])

    def item(self, i=0):
        return ScaledValue.from_parts(self.mant.flat[i], int(self.expo.flat[i]))

    def scale_by(self, value):
        """Multiply every element by one :class:`ScaledValue`."""
        return ScaledArray(self.mant * value.mantissa, self.expo + value.exponent).normalized()

    def __mul__(self, other):
        return ScaledArray(self.mant * other.mant, self.expo + other.expo).normalized()

    def __neg__(self):
        return ScaledArray(-self.mant, self.expo)

    def __add__(self, other):
        a, b = self.normalized(), other.normalized()
        e = np.maximum(np.where(a.mant == 0, b.expo, a.expo), np.where(b.mant == 0, a.expo, b.expo))
        with np.errstate(under="ignore"):
            m = np.ldexp(a.mant, _shift(a.expo - e)) + np.ldexp(b.mant, _shift(b.expo - e))
        return ScaledArray(m, e).normalized()

    def __sub__(self, other):
        return self + (-other)


def _shift(d):
    # ldexp needs int32; anything below -2000 underflows to zero anyway
    return np.clip(d, -2000, 2000).astype(np.int32)


# ---------------------------------------------------------------------------
# Debye coefficient table
# ---------------------------------------------------------------------------


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_add(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return [x + y for x, y in zip(a, b)]


def debye_polynomials(kmax):
    """Exact coefficients (ascending powers of t) of u_0 ... u_kmax.

    u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2 + (1/8) int_0^t (1 - 5 s^2) u_k(s) ds,
    u_0 = 1.  u_1 = (3t - 5t^3)/24, u_2 = (81t^2 - 462t^4 + 385t^6)/1152.
    """
    polys = [[Fraction(1)]]
    half = [Fraction(0), Fraction(0), Fraction(1, 2), Fraction(0), Fraction(-1, 2)]
    weight = [Fraction(1), Fraction(0), Fraction(-5)]
    for _ in range(kmax):
        u = polys[-1]
        du = [i * c for i, c in enumerate(u)][1:] or [Fraction(0)]
        first = _poly_mul(half, du)
        integrand = _poly_mul(weight, u)
        integral = [Fraction(0)] + [c / (i + 1) for i, c in enumerate(integrand)]
        polys.append(_poly_add(first, [c / 8 for c in integral]))
    return polys


# Twelve terms reach double precision for nu >= 50 wherever the Debye path is
# taken (coth(alpha)^3 / nu < 1e-2 there).
DEBYE_TERMS = 12
_DEBYE_U = tuple(np.array([float(c) for c in p]) for p in debye_polynomials(DEBYE_TERMS))


def _atanh_minus_id(q):
    """arctanh(q) - q without cancellation for small q."""
    q = np.asarray(q, dtype=float)
    out = np.empty_like(q)
    small = q < 0.5
    if small.any():
        qs = q[small]
        q2 = qs * qs
        term = qs * q2
        acc = term / 3.0
        for n in range(2, 40):
            term = term * q2
            acc = acc + term / (2 * n + 1)
        out[small] = acc
    big = ~small
    if big.any():
        out[big] = np.arctanh(q[big]) - q[big]
    return out


def debye_exponent(nu, x):
    """nu (alpha - tanh alpha) with sech alpha = x / nu, for 0 < x < nu."""
    s = np.asarray(x, dtype=float) / nu
    q = np.sqrt((1.0 - s) * (1.0 + s))
    return nu * _atanh_minus_id(q)


def _debye_sums(nu, t, policy):
    sum_j = np.ones_like(t)
    sum_y = np.ones_like(t)
    active = np.ones(t.shape, dtype=bool)
    last = np.zeros_like(t)
    prev = np.full_like(t, np.inf)
    for k in range(1, len(_DEBYE_U)):
        term = np.polynomial.polynomial.polyval(t, _DEBYE_U[k]) / nu**k
        mag = np.abs(term)
        active &= mag < prev
        sum_j = sum_j + np.where(active, term, 0.0)
        sum_y = sum_y + np.where(active, term if k % 2 == 0 else -term, 0.0)
        last = np.where(active, mag, last)
        prev = mag
        active &= mag > 0.1 * EPS * np.abs(sum_j)
        if not active.any():
            break
    err = float(np.max(last / np.abs(sum_j), initial=0.0))
    if err > policy.target_rel_err:
        raise AccuracyLossError(f"Debye expansion at order {nu:g} did not converge", err)
    return sum_j, sum_y


def debye_log_jy(nu, x, policy=DEFAULT_POLICY):
    """(log J, log |Y|) for 0 < x < nu from the Debye expansion.

    J is positive and Y negative throughout this range.
    """
    x = np.asarray(x, dtype=float)
    s = x / nu
    q = np.sqrt((1.0 - s) * (1.0 + s))  # tanh(alpha)
    eta = nu * _atanh_minus_id(q)
    sum_j, sum_y = _debye_sums(nu, 1.0 / q, policy)
    log_j = -eta - 0.5 * np.log(2.0 * np.pi * nu * q) + np.log(sum_j)
    log_y = eta - 0.5 * np.log(0.5 * np.pi * nu * q) + np.log(sum_y)
    return log_j, log_y


def _log_j_series(nu, x, policy):
    q = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for m in range(1, policy.max_terms):
        term = term * q / (m * (nu + m))
        total = total + term
        if np.all(np.abs(term) <= 0.1 * EPS * np.abs(total)):
            break
    else:
        raise AccuracyLossError("ascending series for J did not converge", float(np.max(np.abs(term))))
    log_j = nu * np.log(0.5 * x) - math.lgamma(nu + 1.0) + np.log(np.abs(total))
    return np.sign(total), log_j


def _j_tail(nu, x, policy):
    sign = np.ones_like(x)
    log_j = np.empty_like(x)
    series = x <= 2.0 * math.sqrt(nu + 1.0)
    if series.any():
        sign[series], log_j[series] = _log_j_series(nu, x[series], policy)
    rest = ~series
    if rest.any():
        if nu < policy.order_switch:
            raise AccuracyLossError(f"J_{nu:g} underflows outside the series region", math.inf)
        log_j[rest], _ = debye_log_jy(nu, x[rest], policy)
    return ScaledArray.from_log(sign, log_j)


def _y_recurrence(nu, x):
    n = int(math.floor(nu))
    mu = nu - n
    with sc.errstate(all="ignore"):
        y0 = sc.yv(mu, x)
        y1 = sc.yv(mu + 1.0, x)
    if not (np.all(np.isfinite(y0)) and np.all(np.isfinite(y1))):
        raise DomainError("argument too small for Y at this order")
    if n == 0:
        return ScaledArray(y0)
    log_acc = np.zeros_like(x)
    for i in range(1, n):
        y2 = (2.0 * (mu + i) / x) * y1 - y0
        big = np.abs(y2) > 1e250
        if big.any():
            scale = np.where(big, np.abs(y2), 1.0)
            y1 = y1 / scale
            y2 = y2 / scale
            log_acc = log_acc + np.log(scale)
        y0, y1 = y1, y2
    return ScaledArray.from_log(np.sign(y1), np.log(np.abs(y1)) + log_acc)


def _y_tail(nu, x, policy):
    if nu >= policy.order_switch:
        _, log_y = debye_log_jy(nu, x, policy)
        return ScaledArray.from_log(-np.ones_like(x), log_y)
    return _y_recurrence(nu, x)


# ---------------------------------------------------------------------------
# Vector kernels
# ---------------------------------------------------------------------------


def _as_order(nu):
    nu = float(nu)
    if not math.isfinite(nu):
        raise DomainError("order must be finite")
    if nu < 0:
        raise DomainError("negative orders are not supported")
    return nu


def _as_args(x, positive):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise DomainError("argument must be finite")
    if positive and np.any(x <= 0):
        raise DomainError("Y_nu(x) requires x > 0")
    if np.any(x < 0):
        raise DomainError("negative arguments are not supported")
    return x


def _put(target, mask, values):
    target.mant[mask] = values.mant
    target.expo[mask] = values.expo


def bessel_j_array(nu, x, policy=DEFAULT_POLICY):
    """J_nu(x) for an array of x >= 0, as a :class:`ScaledArray`."""
    nu = _as_order(nu)
    x = _as_args(x, positive=False)
    _check_reachable(nu, policy)
    with sc.errstate(all="ignore"):
        j = sc.jv(nu, x)
    out = ScaledArray(j.copy())
    tail = (x > 0) & (x < nu) & ~(np.abs(j) >= _TINY)
    if tail.any():
        _put(out, tail, _j_tail(nu, x[tail], policy))
    if not np.all(np.isfinite(out.mant)):
        raise AccuracyLossError(f"J_{nu:g} evaluation failed", math.inf)
    return out


def bessel_y_array(nu, x, policy=DEFAULT_POLICY):
    """Y_nu(x) for an array of x > 0, as a :class:`ScaledArray`."""
    nu = _as_order(nu)
    x = _as_args(x, positive=True)
    _check_reachable(nu, policy)
    with sc.errstate(all="ignore"):
        y = sc.yv(nu, x)
    out = ScaledArray(y.copy())
    tail = ~(np.abs(y) <= _HUGE)
    if tail.any():
        _put(out, tail, _y_tail(nu, x[tail], policy))
    if not np.all(np.isfinite(out.mant)):
        raise AccuracyLossError(f"Y_{nu:g} evaluation failed", math.inf)
    return out


def debye_phase(nu, x):
    """Leading-order Bessel phase sqrt(x^2 - nu^2) - nu arccos(nu/x) - pi/4 (x > nu).

    Returns -pi/4 for x <= nu, where the true phase lies in (-pi/2, 0).
    """
    x = np.asarray(x, dtype=float)
    osc = x > nu
    xs = np.where(osc, x, nu + 1.0)
    val = np.sqrt((xs - nu) * (xs + nu)) - nu * np.arccos(np.minimum(nu / xs, 1.0))
    return np.where(osc, val, 0.0) - 0.25 * np.pi


def phase_modulus(nu, x, policy=DEFAULT_POLICY):
    """Continuous phase theta and log modulus of J_nu + i Y_nu.

    J = M cos(theta), Y = M sin(theta); theta increases strictly from -pi/2,
    and j_{nu,k} is the unique solution of theta = (k - 1/2) pi.
    """
    J = bessel_j_array(nu, x, policy)
    Y = bessel_y_array(nu, x, policy)
    cj, cy, e = _common_scale(J, Y)
    base = np.arctan2(cy, cj)
    approx = debye_phase(nu, np.atleast_1d(np.asarray(x, dtype=float)))
    theta = base + 2.0 * np.pi * np.rint((approx - base) / (2.0 * np.pi))
    log_mod = np.log(np.hypot(cj, cy)) + e * LN2
    return theta, log_mod


def _common_scale(a, b):
    a, b = a.normalized(), b.normalized()
    e = np.maximum(a.expo, b.expo)
    with np.errstate(under="ignore"):
        return np.ldexp(a.mant, _shift(a.expo - e)), np.ldexp(b.mant, _shift(b.expo - e)), e


def unit_jy(nu, x, policy=DEFAULT_POLICY):
    """(J/M, Y/M): cosine and sine of the Bessel phase, always representable."""
    J = bessel_j_array(nu, x, policy)
    Y = bessel_y_array(nu, x, policy)
    cj, cy, _ = _common_scale(J, Y)
    h = np.hypot(cj, cy)
    return cj / h, cy / h


def cross_product_unit(nu, R, z, policy=DEFAULT_POLICY):
    """f_{nu,R}(z) / (M(z) M(Rz)) = sin(theta(Rz) - theta(z)), bounded by 1."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    c, s = unit_jy(nu, np.concatenate([z, R * z]), policy)
    n = z.size
    return c[:n] * s[n:] - s[:n] * c[n:]


def cross_product_array(nu, R, z, policy=DEFAULT_POLICY):
    """f_{nu,R}(z) = J(z) Y(Rz) - Y(z) J(Rz) as a :class:`ScaledArray`."""
    R = float(R)
    if not R > 1.0:
        raise DomainError("cross product requires R > 1")
    z = _as_args(z, positive=True)
    pts = np.concatenate([z, R * z])
    J = bessel_j_array(nu, pts, policy)
    Y = bessel_y_array(nu, pts, policy)
    n = z.size
    lo, hi = np.arange(n), np.arange(n, 2 * n)
    return J.take(lo) * Y.take(hi) - Y.take(lo) * J.take(hi)


def cylinder_array(nu, a, z, policy=DEFAULT_POLICY):
    """F(z) = J(a) Y(z) - Y(a) J(z) as a :class:`ScaledArray`."""
    a = float(a)
    if not a > 0.0:
        raise DomainError("anchor a must be positive")
    z = _as_args(z, positive=True)
    pts = np.concatenate([[a], z])
    J = bessel_j_array(nu, pts, policy)
    Y = bessel_y_array(nu, pts, policy)
    rest = np.arange(1, pts.size)
    return J.take(rest).scale_by(-Y.item(0)) + Y.take(rest).scale_by(J.item(0))


# ---------------------------------------------------------------------------
# Scalar API
# ---------------------------------------------------------------------------


def bessel_j_scaled(nu, x, policy=DEFAULT_POLICY):
    return bessel_j_array(nu, x, policy).item(0)


def bessel_y_scaled(nu, x, policy=DEFAULT_POLICY):
    return bessel_y_array(nu, x, policy).item(0)


def bessel_j(nu, x, policy=DEFAULT_POLICY):
    """J_nu(x) as a float; underflows gracefully to 0 where the true value does."""
    return float(bessel_j_scaled(nu, x, policy))


def bessel_y(nu, x, policy=DEFAULT_POLICY):
    """Y_nu(x) as a float; -inf where the true value overflows (use the scaled form)."""
    return float(bessel_y_scaled(nu, x, policy))


def bessel_jp(nu, x):
    """dJ_nu/dx = (J_{nu-1} - J_{nu+1}) / 2."""
    nu = _as_order(nu)
    x = float(_as_args(x, positive=False)[0])
    return 0.5 * float(sc.jv(nu - 1.0, x) - sc.jv(nu + 1.0, x))


def bessel_yp(nu, x):
    """dY_nu/dx = (Y_{nu-1} - Y_{nu+1}) / 2."""
    nu = _as_order(nu)
    x = float(_as_args(x, positive=True)[0])
    return 0.5 * float(sc.yv(nu - 1.0, x) - sc.yv(nu + 1.0, x))


def cross_product(nu, R, z, policy=DEFAULT_POLICY):
    """f_{nu,R}(z) = J_nu(z) Y_nu(Rz) - Y_nu(z) J_nu(Rz)."""
    return cross_product_array(nu, R, z, policy).item(0)


def cylinder_f(nu, a, z, policy=DEFAULT_POLICY):
    """F(z) = J_nu(a) Y_nu(z) - Y_nu(a) J_nu(z); vanishes at z = a."""
    return cylinder_array(nu, a, z, policy).item(0)


def _airy(x):
    x = float(x)
    if not math.isfinite(x):
        raise DomainError("Airy argument must be finite")
    return sc.airy(x)


def airy_ai(x):
    return float(_airy(x)[0])


def airy_bi(x):
    return float(_airy(x)[2])


def airy_ai_prime(x):
    return float(_airy(x)[1])
