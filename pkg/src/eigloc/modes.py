"""Eigenmodes of balls, shells and planar sectors, with radial norms and localization ratios.

Every radial profile has the form

    v(r) = r^{1 - d/2} M(kappa r) sin(theta(kappa r) - theta_ref),

with kappa the eigenvalue zero, M and theta the Bessel modulus and phase.  In
a ball theta_ref = -pi/2 (so v is r^{1-d/2} J_nu), in a shell theta_ref is the
phase at the inner wall (so v is the cylinder function anchored there).
Values are always evaluated from scaled J and Y; the phase is used only to
place the sampling grid and the interior zeros.

Angular factors are the same in every region of interest (all regions are
radially symmetric), so norms and ratios are radial integrals with weight
r^{d-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar

from . import specfun
from .asymptotics import localized_radius
from .errors import AccuracyLossError, DomainError, InsufficientDataError
from .geometry import DomainSpec, ModeIndex, nu_of_l
from .specfun import ScaledArray, ScaledValue
from .zeros import bessel_zero_j, cross_zero

__all__ = [
    "ModeIndex",
    "DomainSpec",
    "nu_of_l",
    "RadialProfile",
    "LocalizationReport",
    "eigenvalue",
    "radial_profile",
    "field_2d",
    "heatmap",
    "lp_norm",
    "lp_log_integral",
    "sup_norm",
    "localization_ratio",
    "localization_index",
    "region_ratio",
    "decay_fit",
    "fit_decay",
    "j_ratio_bound_log",
    "cylinder_ratio_bound_log",
]

INF = math.inf
_GL_T, _GL_W = np.polynomial.legendre.leggauss(16)
# exponential-region samples are dropped once J has decayed by e^-ETA_CAP
ETA_CAP = 800.0
QUAD_RTOL = 1e-8


def eigenvalue(mode: ModeIndex, domain: DomainSpec):
    """lambda = (eigenvalue zero)^2."""
    return radial_profile(mode, domain).zero ** 2


def radial_profile(mode: ModeIndex, domain: DomainSpec):
    nu = domain.order(mode)
    if domain.is_annular:
        zero = cross_zero(nu, mode.k, domain.R)
    else:
        zero = bessel_zero_j(nu, mode.k)
    return RadialProfile(domain, mode, nu, zero)


@dataclass(frozen=True)
class RadialProfile:
    """Radial eigenfunction of one mode; immutable, with lazily cached samples and norms."""

    domain: DomainSpec
    mode: ModeIndex
    nu: float
    zero: float
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def d(self):
        return self.domain.d

    @property
    def inner(self):
        return self.domain.inner

    @property
    def outer(self):
        return self.domain.outer

    @property
    def is_shell(self):
        return self.domain.is_annular

    @cached_property
    def theta_ref(self):
        if not self.is_shell:
            return -0.5 * math.pi
        return float(specfun.phase_modulus(self.nu, [self.zero])[0][0])

    # -- evaluation -------------------------------------------------------

    def _radii(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        span = self.outer - self.inner
        if np.any(r < self.inner - 1e-12 * span) or np.any(r > self.outer + 1e-12 * span):
            raise DomainError(f"radius outside [{self.inner:g}, {self.outer:g}]")
        return np.clip(r, self.inner, self.outer)

    def values(self, r):
        """v(r) as a :class:`ScaledArray`."""
        r = self._radii(r)
        x = self.zero * r
        if self.is_shell:
            base = specfun.cylinder_array(self.nu, self.zero, x)
        else:
            base = specfun.bessel_j_array(self.nu, x)
        mu = 0.5 * self.d - 1.0
        if mu == 0.0:
            return base
        pos = r > 0
        log_abs = base.log_abs()
        log_abs[pos] -= mu * np.log(r[pos])
        sign = base.sign()
        if not pos.all():
            # r^{1-d/2} J_nu(kappa r) -> (kappa/2)^nu / Gamma(nu+1) when nu = d/2 - 1, else 0
            if abs(self.nu - mu) < 1e-14:
                log_abs[~pos] = self.nu * math.log(0.5 * self.zero) - math.lgamma(self.nu + 1.0)
                sign[~pos] = 1.0
            else:
                log_abs[~pos] = -INF
                sign[~pos] = 0.0
        return ScaledArray.from_log(sign, log_abs)

    def log_abs(self, r):
        return self.values(r).log_abs()

    def __call__(self, r):
        """v(r) as floats (may over/underflow at large order; see :meth:`normalized`)."""
        out = self.values(r).to_float()
        return float(out[0]) if np.ndim(r) == 0 else out

    def normalized(self, r):
        """v(r) / sup|v| as floats."""
        sup = self.sup
        out = self.values(r).scale_by(ScaledValue.from_parts(1.0 / sup.mantissa, -sup.exponent)).to_float()
        return float(out[0]) if np.ndim(r) == 0 else out

    # -- sampling ---------------------------------------------------------

    @cached_property
    def samples(self):
        """(r, log|v|, theta) on a grid with >= 8 points per half-period.

        The density follows the local phase rate |1 - nu^2/x^2|^{1/2} in the
        variable x = kappa r, with an Airy-scale floor near the turning point
        and no extra points once J has decayed past e^-ETA_CAP.
        """
        nu, kappa = self.nu, self.zero
        x1, x2 = kappa * self.inner, kappa * self.outer
        aux = np.linspace(x1, x2, 8193)
        mid = 0.5 * (aux[1:] + aux[:-1])
        rate = np.sqrt(np.abs(1.0 - (nu / mid) ** 2))
        ex = mid < nu
        if ex.any():
            eta = specfun.debye_exponent(nu, mid[ex])
            rate[ex] = np.where(eta < ETA_CAP, rate[ex], 0.0)
        dens = 8.0 / math.pi * rate
        if nu > 0:
            zone = np.abs(mid - nu) < 6.0 * (0.5 * nu) ** (1.0 / 3.0)
            dens[zone] = np.maximum(dens[zone], 8.0 / nu ** (1.0 / 3.0))
        dens += 64.0 / (x2 - x1)
        count = np.concatenate([[0.0], np.cumsum(dens * np.diff(aux))])
        n = int(math.ceil(count[-1]))
        x = np.interp(np.linspace(0.0, count[-1], n + 1), count, aux)
        x[0], x[-1] = x1, x2
        x = np.unique(x)
        r = x / kappa
        r[0], r[-1] = self.inner, self.outer
        theta = np.full_like(x, -0.5 * math.pi)
        pos = x > 0
        theta[pos] = specfun.phase_modulus(nu, x[pos])[0]
        return r, self.log_abs(r), theta

    @cached_property
    def nodes(self):
        """Interior zeros of v, located from the phase by safeguarded Newton."""
        r, _, theta = self.samples
        lo_m = math.floor((theta[0] - self.theta_ref) / math.pi + 1e-9) + 1
        hi_m = math.ceil((theta[-1] - self.theta_ref) / math.pi - 1e-9) - 1
        if hi_m < lo_m:
            out = np.empty(0)
        else:
            targets = self.theta_ref + math.pi * np.arange(lo_m, hi_m + 1)
            idx = np.clip(np.searchsorted(theta, targets), 1, theta.size - 1)
            a, b = r[idx - 1] * self.zero, r[idx] * self.zero
            ta, tb = theta[idx - 1], theta[idx]
            x = a + (targets - ta) * (b - a) / (tb - ta)
            for _ in range(8):
                th, log_m = specfun.phase_modulus(self.nu, x)
                dth = 2.0 / (math.pi * x) * np.exp(-2.0 * log_m)
                step = (th - targets) / dth
                x_new = np.clip(x - step, a, b)
                done = np.all(np.abs(x_new - x) <= 4e-16 * x)
                x = x_new
                if done:
                    break
            out = x / self.zero
        if out.size != self.mode.k - 1:
            raise AccuracyLossError(f"found {out.size} interior zeros, expected {self.mode.k - 1}", INF)
        return out

    # -- norms ------------------------------------------------------------

    @property
    def sup(self):
        """sup |v| over the whole radial range (cached)."""
        if "sup" not in self._cache:
            self._cache["sup"], self._cache["argmax"] = _sup(self, self.inner, self.outer)
        return self._cache["sup"]

    def argmax(self):
        """Radius where |v| is largest."""
        self.sup
        return self._cache["argmax"]

    def full_norm(self, p):
        key = ("norm", p)
        if key not in self._cache:
            self._cache[key] = sup_norm(self) if p == INF else lp_norm(self, p)
        return self._cache[key]


def _interval(profile, interval):
    if interval is None:
        return profile.inner, profile.outer
    r1, r2 = float(interval[0]), float(interval[1])
    if r1 > r2:
        raise DomainError("interval must satisfy r1 <= r2")
    profile._radii([r1, r2])
    return max(r1, profile.inner), min(r2, profile.outer)


def _sup(profile, r1, r2):
    r, L, _ = profile.samples
    inside = (r > r1) & (r < r2)
    rr = np.concatenate([[r1], r[inside], [r2]])
    LL = np.concatenate([profile.log_abs([r1]), L[inside], profile.log_abs([r2])])
    if r1 == r2:
        return ScaledValue.from_log(1, float(LL[0])), r1
    best_r, best = float(rr[np.argmax(LL)]), float(np.max(LL))
    # refine around the few largest local maxima of the samples
    interior = np.flatnonzero((LL[1:-1] >= LL[:-2]) & (LL[1:-1] >= LL[2:])) + 1
    cands = interior[np.argsort(LL[interior])[::-1][:3]]
    f = lambda t: -float(profile.log_abs([t])[0])
    for i in cands:
        a, b = rr[i - 1], rr[i + 1]
        res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-13 * max(1.0, b)})
        if -res.fun > best:
            best, best_r = -float(res.fun), float(res.x)
    return ScaledValue.from_log(1, best), best_r


def sup_norm(profile: RadialProfile, interval=None):
    """max |v| on [r1, r2] (whole range by default) as a :class:`ScaledValue`."""
    r1, r2 = _interval(profile, interval)
    if interval is None and "sup" in profile._cache:
        return profile._cache["sup"]
    return _sup(profile, r1, r2)[0]


def _panels(profile, r1, r2, p):
    r, L, _ = profile.samples
    nodes = profile.nodes
    inner = r[(r > r1) & (r < r2)]
    coarse = inner[::4]
    keep_nodes = nodes[(nodes > r1) & (nodes < r2)]
    brk = np.unique(np.concatenate([[r1, r2], coarse, keep_nodes]))
    # split panels whose log-integrand changes by more than 8 between ends
    Lb = np.interp(brk, r, L)
    Lb[np.isin(brk, keep_nodes)] = -INF
    dL = np.abs(np.diff(p * Lb))
    m = np.where(np.isfinite(dL), np.maximum(1, np.ceil(dL / 8.0)), 1).astype(int)
    a = np.repeat(brk[:-1], m)
    h = np.repeat(np.diff(brk) / m, m)
    offs = np.concatenate([np.arange(k) for k in m])
    a = a + offs * h
    return a, a + h


def _log_integral(profile, a, b, p):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = (mid[:, None] + half[:, None] * _GL_T[None, :]).ravel()
    with np.errstate(divide="ignore"):
        L = p * profile.log_abs(x) + (profile.d - 1) * np.log(x)
    L = L.reshape(a.size, -1)
    top = np.max(L)
    if not np.isfinite(top):
        return -INF
    total = np.sum(half[:, None] * _GL_W[None, :] * np.exp(L - top))
    return top + math.log(total)


def lp_log_integral(profile, p, interval=None):
    """log of int |v|^p r^{d-1} dr over the interval (-inf if empty)."""
    if not (1 <= p < INF):
        raise DomainError("p must lie in [1, inf)")
    r1, r2 = _interval(profile, interval)
    if r1 == r2:
        return -INF
    a, b = _panels(profile, r1, r2, p)
    coarse = _log_integral(profile, a, b, p)
    mid = 0.5 * (a + b)
    fine = _log_integral(profile, np.concatenate([a, mid]), np.concatenate([mid, b]), p)
    if coarse == -INF and fine == -INF:
        return -INF
    err = abs(fine - coarse) / p
    if err > QUAD_RTOL:
        raise AccuracyLossError("Gauss-Legendre panels did not converge", err)
    return fine


def lp_norm(profile: RadialProfile, p, interval=None):
    """(int_{r1}^{r2} |v|^p r^{d-1} dr)^{1/p} as a :class:`ScaledValue`."""
    return ScaledValue.from_log(1, lp_log_integral(profile, p, interval) / p)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


def _angular(profile, theta, parity):
    dom, l = profile.domain, profile.mode.l
    theta = np.asarray(theta, dtype=float)
    if dom.is_sector:
        span = dom.beta * math.pi
        if np.any(theta < -1e-12) or np.any(theta > span + 1e-12):
            raise DomainError(f"angle outside the sector [0, {span:g}]")
        return np.sin(l * theta / dom.beta)
    if parity == "cos":
        return np.cos(l * theta)
    if parity == "sin":
        return np.sin(l * theta)
    raise DomainError("parity must be 'cos' or 'sin'")


def field_2d(profile: RadialProfile, r, theta, parity="cos", normalized=True):
    """u(r, theta) = v(r) x angular factor; planar domains only."""
    if profile.d != 2:
        raise DomainError("field_2d needs d = 2")
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    ang = _angular(profile, theta, parity)
    rad = profile.normalized(r.ravel()) if normalized else profile(r.ravel())
    out = rad.reshape(r.shape) * ang
    return out if out.ndim else float(out)


def heatmap(profile: RadialProfile, n_r=400, n_theta=400, parity="cos"):
    """Polar grid (r, theta, u) with sup|u| = 1 over the domain."""
    r = np.linspace(profile.inner, profile.outer, n_r)
    if profile.domain.is_sector:
        th = np.linspace(0.0, profile.domain.beta * math.pi, n_theta)
    else:
        th = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    rad = profile.normalized(r)
    ang = _angular(profile, th, parity)
    return r, th, np.outer(rad, ang) + 0.0  # no negative zeros in exports


# ---------------------------------------------------------------------------
# Localization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalizationReport:
    """Norm ratios over D1 = [inner, r - eps], D2 = [r + eps, outer] and their union."""

    mode: ModeIndex
    domain: DomainSpec
    p: float
    eps: float
    localized_radius: float | None
    ratio_inside: float
    ratio_outside: float
    ratio_total: float
    log_ratio_inside: float
    log_ratio_outside: float
    log_ratio_total: float

    @property
    def index(self):
        """Maximum relative height outside the eps-neighbourhood (gamma)."""
        return self.ratio_total


def _regions(profile, center, eps):
    d1 = (profile.inner, center - eps) if center - eps > profile.inner else None
    d2 = (center + eps, profile.outer) if center + eps < profile.outer else None
    return d1, d2


def _log_norm(profile, p, interval):
    if interval is None:
        return -INF
    if p == INF:
        return sup_norm(profile, interval).log_abs
    return lp_log_integral(profile, p, interval) / p


def region_ratio(profile: RadialProfile, intervals, p=INF):
    """Norm over a union of disjoint radial intervals divided by the full norm."""
    full = profile.full_norm(p).log_abs
    logs = [_log_norm(profile, p, iv) for iv in intervals if iv is not None]
    if not logs:
        return 0.0
    if p == INF:
        top = max(logs)
    else:
        m = max(logs)
        top = -INF if m == -INF else m + math.log(sum(math.exp(p * (x - m)) for x in logs)) / p
    return math.exp(top - full) if top > -INF else 0.0


def _ratios(profile, center, eps, p):
    full = profile.full_norm(p).log_abs
    d1, d2 = _regions(profile, center, eps)
    l1, l2 = _log_norm(profile, p, d1), _log_norm(profile, p, d2)
    if p == INF:
        lt = max(l1, l2)
    else:
        m = max(l1, l2)
        lt = -INF if m == -INF else m + math.log(math.exp(p * (l1 - m)) + math.exp(p * (l2 - m))) / p
    lr = [x - full if x > -INF else -INF for x in (l1, l2, lt)]
    return [min(1.0, math.exp(x)) for x in lr], lr


def localization_ratio(mode: ModeIndex, domain: DomainSpec, p=INF, eps=0.1, w=None, profile=None):
    """Ratios of norms over D1, D2 and D(r, eps) to the full-domain norm.

    ``w`` defaults to the realized ratio l/k; the centre r is the localized
    radius, or the inner wall for subcritical shell families.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if not (p == INF or p >= 1):
        raise DomainError("p must lie in [1, inf]")
    if profile is None:
        profile = radial_profile(mode, domain)
    if w is None:
        w = mode.l / mode.k
    if w > 0:
        center = localized_radius(domain, w)
    else:
        center = 0.0 if not domain.is_annular else None
    if center is None:
        center = domain.inner
    (ri, ro, rt), (li, lo, lt) = _ratios(profile, center, eps, p)
    return LocalizationReport(mode, domain, p, eps, center, ri, ro, rt, li, lo, lt)


def localization_index(R, eps, w, l, k, d=2, c=1.0, profile=None):
    """Finite-(l, k) localization index gamma_{R,eps}(w) of a shell mode.

    Sup-norm ratio outside D(w/g_R(w), eps) above s(R), outside D(1, eps)
    otherwise.  An empty region gives 0.
    """
    domain = DomainSpec.shell(R, d)
    mode = ModeIndex(k, l, d, c)
    if profile is None:
        profile = radial_profile(mode, domain)
    center = localized_radius(domain, w)
    if center is None:
        center = 1.0
    return _ratios(profile, center, eps, INF)[0][2]


def fit_decay(nus, log_ratios, side):
    """Fit the decay law of log ratios against nu.

    inside: log ratio ~ nu log q + c, returns ('exponential', q).
    outside: log ratio ~ -gamma log nu + c, returns ('polynomial', gamma).
    """
    nus = np.asarray(nus, dtype=float)
    y = np.asarray(log_ratios, dtype=float)
    if nus.size < 3:
        raise InsufficientDataError("need at least 3 family members")
    if side not in ("inside", "outside"):
        raise DomainError("side must be 'inside' or 'outside'")
    if not np.all(np.isfinite(y)):
        raise DomainError("log ratios must be finite")
    if np.all(y == y[0]):
        return "polynomial", 0.0
    if side == "inside":
        slope = np.polyfit(nus, y, 1)[0]
        return "exponential", float(math.exp(slope))
    slope = np.polyfit(np.log(nus), y, 1)[0]
    return "polynomial", float(-slope)


def decay_fit(family, domain: DomainSpec, side, eps=0.1, p=INF, w=None):
    """Decay-rate fit of the D1 (inside) or D2 (outside) ratio along a family.

    ``family`` is a sequence of :class:`ModeIndex` or (l, k) pairs (d = 2, c = 1).
    """
    modes = [m if isinstance(m, ModeIndex) else ModeIndex(int(m[1]), int(m[0]), domain.d, 1.0) for m in family]
    if len(modes) < 3:
        raise InsufficientDataError("need at least 3 family members")
    nus, logs = [], []
    for m in modes:
        rep = localization_ratio(m, domain, p, eps, w)
        nus.append(domain.order(m))
        logs.append(rep.log_ratio_inside if side == "inside" else rep.log_ratio_outside)
    return fit_decay(nus, logs, side)


# ---------------------------------------------------------------------------
# Ratio bounds for J and cylinder functions
# ---------------------------------------------------------------------------


def j_ratio_bound_log(nu, z):
    """log[J_nu(nu z) / (z^nu J_nu(nu))]; lies in [0, nu (1 - z)] for 0 < z <= 1."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    lj = specfun.bessel_j_array(nu, nu * z).log_abs()
    l1 = specfun.bessel_j_array(nu, [nu]).log_abs()[0]
    return lj - nu * np.log(z) - l1


def cylinder_ratio_bound_log(nu, a, z):
    """(sign, log|ratio|) of F(nu z) / (z^nu F(nu)) for the cylinder function anchored at a."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    F = specfun.cylinder_array(nu, a, nu * z)
    F1 = specfun.cylinder_array(nu, a, [nu])
    sign = F.sign() * F1.sign()[0]
    with np.errstate(divide="ignore"):
        return sign, F.log_abs() - nu * np.log(z) - F1.log_abs()[0]
