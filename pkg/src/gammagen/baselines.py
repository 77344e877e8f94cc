"""Comparison rejection samplers for Gamma(alpha, 1), alpha > 1.

* M2, log-logistic hat (Cheng):  ``K1 x**(lam-1) / (mu + x**lam)**2``
* M3, Cauchy hat (Ahrens-Dieter), truncated to ``x >= 0``
* M4, Student-t hat with 2 degrees of freedom (Best), truncated to ``x >= 0``
* M5, ratio of uniforms with the mode moved to the origin

All samplers work at unit rate; :func:`sample` applies ``X / beta`` for
other rates.  Each hat is exposed as a log density on ``x >= 0`` so the
envelope and quadrature oracles in :mod:`gammagen.stats` can check it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from . import gamma_core
from .errors import DomainError
from .gamma_core import GammaParams, SampleBatch
from .rng import UniformSource, next_u01
from .stats import envelope_grid, integrate_exp, ln_gamma, quadrature_ar, EnvelopeReport, ENVELOPE_TOL


class MethodId(enum.Enum):
    M1 = "m1"
    M2_LOG_LOGISTIC = "m2"
    M3_CAUCHY = "m3"
    M4_TSTUDENT = "m4"
    M5_ROU = "m5"

    @classmethod
    def parse(cls, text: str) -> MethodId:
        key = text.strip().lower()
        for m in cls:
            if key in (m.value, m.name.lower()):
                return m
        raise DomainError(f"unknown method {text!r}")

    @property
    def ordinal(self) -> int:
        return list(MethodId).index(self)


BASELINES = (MethodId.M2_LOG_LOGISTIC, MethodId.M3_CAUCHY, MethodId.M4_TSTUDENT, MethodId.M5_ROU)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha > 1.0):
        raise DomainError(f"baseline samplers require alpha > 1, got {alpha}")
    return alpha


def _log_p(alpha: float, x):
    # unit-rate unnormalized target, valid for alpha > 1 (log p(0) = -inf)
    with np.errstate(divide="ignore"):
        return (alpha - 1.0) * np.log(x) - x


def _check_count(count: int) -> int:
    if count < 1:
        raise DomainError("count must be positive")
    return int(count)


# ---------------------------------------------------------------------------
#  M2: log-logistic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChengParams:
    alpha: float
    lam: float
    log_mu: float
    log_k1: float


def cheng_params(alpha: float) -> ChengParams:
    alpha = _check_alpha(alpha)
    lam = math.sqrt(2.0 * alpha - 1.0)
    log_a = math.log(alpha)
    return ChengParams(alpha, lam, lam * log_a, math.log(4.0) + (alpha + lam) * log_a - alpha)


def log_hat_cheng(alpha: float, x):
    c = cheng_params(alpha)
    xs = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        lx = np.log(xs)
        return c.log_k1 + (c.lam - 1.0) * lx - 2.0 * np.logaddexp(c.log_mu, c.lam * lx)


def theoretical_ar_cheng(alpha: float) -> float:
    """``Gamma(alpha) * mu * lam / K1``; the hat integrates to ``K1 / (lam mu)``."""
    c = cheng_params(alpha)
    return math.exp(ln_gamma(alpha) + c.log_mu + math.log(c.lam) - c.log_k1)


@njit(cache=True)
def _cheng_kernel(state, count, alpha, lam, log_mu, log_k1):
    out = np.empty(count)
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    log_alpha = np.log(alpha)
    proposed = 0
    accepted = 0
    while accepted < count:
        u1, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
        u2, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
        proposed += 1
        # inverse CDF of the log-logistic: x = alpha * (u / (1 - u))**(1/lam)
        lx = log_alpha + (np.log(u1) - np.log1p(-u1)) / lam
        x = np.exp(lx)
        a = log_mu
        b = lam * lx
        log_den = max(a, b) + np.log1p(np.exp(-abs(a - b)))
        log_ratio = (alpha - 1.0) * lx - x - (log_k1 + (lam - 1.0) * lx - 2.0 * log_den)
        if np.log(u2) <= log_ratio:
            out[accepted] = x
            accepted += 1
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return out, proposed


def sample_cheng(alpha: float, src: UniformSource, count: int) -> SampleBatch:
    c = cheng_params(alpha)
    values, proposed = _cheng_kernel(src.state, _check_count(count), c.alpha, c.lam, c.log_mu, c.log_k1)
    return SampleBatch(values, int(proposed), int(count))


# ---------------------------------------------------------------------------
#  M3: truncated Cauchy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CauchyParams:
    alpha: float
    center: float
    lam: float
    log_height: float
    offset: float  # arctan(center / lam)

    @property
    def area(self) -> float:
        return math.exp(self.log_height) * self.lam * (0.5 * math.pi + self.offset)


def _log_hat_cauchy_unit(center, lam, x):
    return -np.log1p(((np.asarray(x, dtype=float) - center) / lam) ** 2)


@lru_cache(maxsize=4096)
def cauchy_params(alpha: float) -> CauchyParams:
    """Cauchy hat centered at the mode ``alpha - 1`` with scale ``sqrt(2 alpha - 1)``.

    The height starts at the mode value ``p(alpha - 1)`` and is raised only
    if a grid scan of ``p / hat`` finds a ratio above one.
    """
    alpha = _check_alpha(alpha)
    center = alpha - 1.0
    lam = math.sqrt(2.0 * alpha - 1.0)
    log_mode = float(_log_p(alpha, center))
    xs = envelope_grid(0.0, center + 50.0 * lam, 10_000, focus=(center,))
    ratio = np.max(_log_p(alpha, xs) - log_mode - _log_hat_cauchy_unit(center, lam, xs))
    log_height = log_mode + max(0.0, float(ratio))
    return CauchyParams(alpha, center, lam, log_height, math.atan(center / lam))


def log_hat_cauchy(alpha: float, x):
    c = cauchy_params(float(alpha))
    return c.log_height + _log_hat_cauchy_unit(c.center, c.lam, x)


@njit(cache=True)
def _cauchy_kernel(state, count, alpha, center, lam, log_height, offset):
    out = np.empty(count)
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    span = 0.5 * np.pi + offset
    proposed = 0
    accepted = 0
    while accepted < count:
        u1, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
        u2, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
        proposed += 1
        y = np.tan(u1 * span - offset)
        x = center + lam * y
        if x <= 0.0:
            continue
        log_ratio = (alpha - 1.0) * np.log(x) - x - log_height + np.log1p(y * y)
        if np.log(u2) <= log_ratio:
            out[accepted] = x
            accepted += 1
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return out, proposed


def sample_ahrens_cauchy(alpha: float, src: UniformSource, count: int) -> SampleBatch:
    c = cauchy_params(_check_alpha(alpha))
    values, proposed = _cauchy_kernel(
        src.state, _check_count(count), c.alpha, c.center, c.lam, c.log_height, c.offset
    )
    return SampleBatch(values, int(proposed), int(count))


# ---------------------------------------------------------------------------
#  M4: truncated Student-t, 2 degrees of freedom
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BestParams:
    alpha: float
    center: float
    eta: float
    log_k3: float
    cdf_at_zero: float  # t_2 CDF at the standardized position of x = 0


def _t2_cdf(t: float) -> float:
    return 0.5 + t / (2.0 * math.sqrt(2.0 + t * t))


def best_params(alpha: float) -> BestParams:
    alpha = _check_alpha(alpha)
    center = alpha - 1.0
    eta = math.sqrt((3.0 * alpha - 0.75) / 2.0)
    log_k3 = center * math.log(center) - center
    return BestParams(alpha, center, eta, log_k3, _t2_cdf(-center / eta))


def log_hat_best(alpha: float, x):
    """``log K3 - 1.5 log(1 + 0.5 ((x - alpha + 1) / eta)**2)``; defined on the whole line."""
    c = best_params(alpha)
    t = (np.asarray(x, dtype=float) - c.center) / c.eta
    return c.log_k3 - 1.5 * np.log1p(0.5 * t * t)


@njit(cache=True)
def _best_kernel(state, count, alpha, center, eta, log_k3, cdf_at_zero):
    out = np.empty(count)
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    tail = 1.0 - cdf_at_zero
    proposed = 0
    accepted = 0
    while accepted < count:
        u1, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
        u2, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
        proposed += 1
        # inversion restricted to t >= -center/eta, i.e. x >= 0
        w = cdf_at_zero + tail * u1
        t = (2.0 * w - 1.0) / np.sqrt(2.0 * w * (1.0 - w))
        x = center + eta * t
        if x <= 0.0:
            continue
        log_ratio = (alpha - 1.0) * np.log(x) - x - log_k3 + 1.5 * np.log1p(0.5 * t * t)
        if np.log(u2) <= log_ratio:
            out[accepted] = x
            accepted += 1
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return out, proposed


def sample_best(alpha: float, src: UniformSource, count: int) -> SampleBatch:
    c = best_params(alpha)
    values, proposed = _best_kernel(
        src.state, _check_count(count), c.alpha, c.center, c.eta, c.log_k3, c.cdf_at_zero
    )
    return SampleBatch(values, int(proposed), int(count))


# ---------------------------------------------------------------------------
#  M5: ratio of uniforms around the mode
# ---------------------------------------------------------------------------

GOLDEN_TOL = 1e-10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    """Maximizer of a unimodal ``f`` on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def log_q_rel(alpha: float, x):
    """``log(q(x) / q(0))`` with ``q(x) = p(x + alpha - 1)``; ``-inf`` left of the support."""
    b = alpha - 1.0
    xs = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = b * np.log1p(xs / b) - xs
    return np.where(xs > -b, v, -np.inf)


@dataclass(frozen=True)
class RouBounds:
    """Bounding rectangle of ``{(u, v): 0 <= u <= sqrt(q(v / u))}``.

    Stored relative to ``u_max`` (``v_minus_rel = v_minus / u_max`` etc.)
    because ``u_max`` itself overflows for large shapes.
    """

    mode: float
    log_u_max: float
    v_minus_rel: float
    v_plus_rel: float
    x_minus: float
    x_plus: float

    @property
    def u_max(self) -> float:
        return math.exp(self.log_u_max)

    @property
    def v_minus(self) -> float:
        return self.v_minus_rel * self.u_max

    @property
    def v_plus(self) -> float:
        return self.v_plus_rel * self.u_max


@lru_cache(maxsize=4096)
def rou_bounds(alpha: float) -> RouBounds:
    alpha = _check_alpha(alpha)
    b = alpha - 1.0

    def objective(x):
        return math.log(abs(x)) + 0.5 * float(log_q_rel(alpha, x))

    # the maximizers solve x**2 - 2x - 2b = 0, i.e. x = 1 +- sqrt(2 alpha - 1)
    reach = 2.0 + 2.0 * math.sqrt(2.0 * alpha)
    x_plus = golden_section_max(objective, 0.0, reach)
    x_minus = golden_section_max(objective, -b, 0.0)
    v_plus = math.exp(objective(x_plus))
    v_minus = -math.exp(objective(x_minus))
    log_u_max = 0.5 * float(_log_p(alpha, b))
    return RouBounds(b, log_u_max, v_minus, v_plus, x_minus, x_plus)


def rou_ar(alpha: float) -> float:
    """Region area over rectangle area, with ``integral of q`` by quadrature."""
    r = rou_bounds(alpha)
    b = r.mode
    mass = integrate_exp(lambda x: log_q_rel(alpha, x), -b, math.inf, 0.0, [0.0, 50.0 * math.sqrt(alpha)])
    return 0.5 * mass / (r.v_plus_rel - r.v_minus_rel)


def rou_boundary_check(alpha: float, n_points: int = 1_000_000) -> EnvelopeReport:
    """Scan the region boundary ``(sqrt q(x), x sqrt q(x))`` against the rectangle."""
    r = rou_bounds(alpha)
    b = r.mode
    lo, hi = -b, b + 60.0 * math.sqrt(alpha) + 60.0
    xs = np.unique(np.concatenate([
        np.linspace(lo, hi, n_points // 2),
        -np.geomspace(1e-12, b * (1.0 - 1e-12), n_points // 4),
        np.geomspace(1e-12, hi, n_points // 4),
        [0.0, r.x_minus, r.x_plus],
    ]))
    xs = xs[(xs > lo) & (xs <= hi)]
    u = np.exp(0.5 * log_q_rel(alpha, xs))
    v = xs * u
    over = np.concatenate([
        u - 1.0,
        np.where(v > 0, v / r.v_plus_rel - 1.0, 0.0),
        np.where(v < 0, v / r.v_minus_rel - 1.0, 0.0),
    ])
    violation = float(max(0.0, np.max(over)))
    contacts = [0.0, r.x_minus, r.x_plus]
    return EnvelopeReport(
        grid_size=int(xs.size),
        x_lo=float(lo + b),
        x_hi=float(hi + b),
        max_relative_violation=violation,
        tangency_points=[c + b for c in contacts],
        passed=violation <= ENVELOPE_TOL,
    )


@njit(cache=True)
def _rou_kernel(state, count, b, v_lo, v_span):
    out = np.empty(count)
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    proposed = 0
    accepted = 0
    while accepted < count:
        u, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
        w, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
        proposed += 1
        x = (v_lo + v_span * w) / u
        if x <= -b:
            continue
        if 2.0 * np.log(u) <= b * np.log1p(x / b) - x:
            out[accepted] = x + b
            accepted += 1
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return out, proposed


def sample_rou(alpha: float, src: UniformSource, count: int) -> SampleBatch:
    r = rou_bounds(_check_alpha(alpha))
    values, proposed = _rou_kernel(
        src.state, _check_count(count), r.mode, r.v_minus_rel, r.v_plus_rel - r.v_minus_rel
    )
    return SampleBatch(values, int(proposed), int(count))


# ---------------------------------------------------------------------------
#  Dispatch
# ---------------------------------------------------------------------------

_SAMPLERS = {
    MethodId.M2_LOG_LOGISTIC: sample_cheng,
    MethodId.M3_CAUCHY: sample_ahrens_cauchy,
    MethodId.M4_TSTUDENT: sample_best,
    MethodId.M5_ROU: sample_rou,
}

_LOG_HATS = {
    MethodId.M2_LOG_LOGISTIC: log_hat_cheng,
    MethodId.M3_CAUCHY: log_hat_cauchy,
    MethodId.M4_TSTUDENT: log_hat_best,
}


def check_domain(method: MethodId, alpha: float, beta: float = 1.0) -> None:
    if method is MethodId.M1:
        GammaParams(alpha, beta)
    else:
        _check_alpha(alpha)
        if not (math.isfinite(beta) and beta > 0.0):
            raise DomainError(f"beta must be > 0, got {beta}")


def sample(method: MethodId, alpha: float, beta: float, src: UniformSource, count: int) -> SampleBatch:
    """Gamma(alpha, beta) variates; baselines sample at unit rate and divide by ``beta``."""
    check_domain(method, alpha, beta)
    if method is MethodId.M1:
        return gamma_core.sample_m1(GammaParams(alpha, beta), src, count)
    batch = _SAMPLERS[method](alpha, src, count)
    if beta != 1.0:
        batch.values /= beta
    return batch


def log_hat(method: MethodId, alpha: float, beta: float = 1.0):
    """Log hat on ``x >= 0`` as a callable (M1 at any rate, baselines at unit rate)."""
    if method is MethodId.M1:
        prop = gamma_core.build_proposal(GammaParams(alpha, beta))
        return lambda x: gamma_core.log_proposal(prop, x)
    if method is MethodId.M5_ROU:
        raise DomainError("the ratio-of-uniforms method has no explicit hat; use rou_boundary_check")
    fn = _LOG_HATS[method]
    return lambda x: fn(alpha, x)


def reference_ar(method: MethodId, alpha: float) -> tuple[float, str]:
    """Expected acceptance rate and its source: ``"formula"`` or ``"quadrature"``."""
    if method is MethodId.M1:
        return gamma_core.theoretical_ar_m1(alpha), "formula"
    if method is MethodId.M2_LOG_LOGISTIC:
        return theoretical_ar_cheng(alpha), "formula"
    if method is MethodId.M5_ROU:
        return rou_ar(alpha), "quadrature"
    alpha = _check_alpha(alpha)
    mode = alpha - 1.0
    upper = mode + 50.0 * math.sqrt(alpha)
    target = lambda x: _log_p(alpha, x)  # noqa: E731
    return quadrature_ar(target, log_hat(method, alpha), upper, center=mode), "quadrature"


def asymptotic_ar(method: MethodId) -> float:
    """Limit of the acceptance rate as alpha grows without bound."""
    return {
        MethodId.M1: 1.0,
        MethodId.M2_LOG_LOGISTIC: math.sqrt(math.pi) / 2.0,
        MethodId.M3_CAUCHY: 1.0 / math.sqrt(math.pi),
        MethodId.M4_TSTUDENT: math.sqrt(math.pi / 6.0),
        MethodId.M5_ROU: math.sqrt(math.e * math.pi) / 4.0,
    }[method]
