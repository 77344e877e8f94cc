"""Special functions, goodness-of-fit checks and numerical oracles.

Everything here is deterministic and reentrant.  The Gamma-distribution
helpers accept any object with ``alpha`` and ``beta`` attributes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError, DomainError

KS_COEFF_1PCT = 1.628
TANGENCY_TOL = 1e-8
ENVELOPE_TOL = 1e-12
MAX_ITER = 500

# Lanczos approximation, g = 7, nine terms.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
#  Special functions
# ---------------------------------------------------------------------------

def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the series argument >= 0.5
        return math.log(math.pi / math.sin(math.pi * x)) - ln_gamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS[0]
    for k in range(1, len(_LANCZOS)):
        acc += _LANCZOS[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def _log_prefactor(a: float, x: np.ndarray) -> np.ndarray:
    # log(x**a * exp(-x) / Gamma(a))
    with np.errstate(divide="ignore"):
        return a * np.log(x) - x - ln_gamma(a)


def _series_p(a: float, x: np.ndarray) -> np.ndarray:
    """Lower regularized incomplete gamma by its power series."""
    x = np.asarray(x, dtype=float)
    term = np.full_like(x, 1.0 / a)
    total = term.copy()
    active = np.ones(x.shape, dtype=bool)
    for n in range(1, MAX_ITER + 1):
        term = np.where(active, term * x / (a + n), 0.0)
        total += term
        active &= np.abs(term) > np.abs(total) * 1e-16
        if not active.any():
            break
    else:
        raise ConvergenceError(f"incomplete gamma series did not converge (a={a})")
    return total * np.exp(_log_prefactor(a, x))


def _continued_fraction_q(a: float, x: np.ndarray) -> np.ndarray:
    """Upper regularized incomplete gamma by modified Lentz iteration."""
    x = np.asarray(x, dtype=float)
    tiny = 1e-300
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, MAX_ITER + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = np.where(active, d * c, 1.0)
        h *= delta
        active &= np.abs(delta - 1.0) > 1e-16
        if not active.any():
            break
    else:
        raise ConvergenceError(f"incomplete gamma continued fraction did not converge (a={a})")
    return np.exp(_log_prefactor(a, x)) * h


def reg_lower_incomplete_gamma(a: float, x):
    """P(a, x); vectorized over ``x``.

    Series for ``x < a + 1``, continued fraction for the complement above.
    """
    a = float(a)
    if not a > 0.0:
        raise DomainError(f"incomplete gamma requires a > 0, got {a}")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0) or np.any(np.isnan(xs)):
        raise DomainError("incomplete gamma requires x >= 0")
    out = np.zeros(xs.shape)
    lower = (xs > 0.0) & (xs < a + 1.0)
    upper = xs >= a + 1.0
    finite_upper = upper & np.isfinite(xs)
    if lower.any():
        out[lower] = _series_p(a, xs[lower])
    if finite_upper.any():
        out[finite_upper] = 1.0 - _continued_fraction_q(a, xs[finite_upper])
    out[upper & ~finite_upper] = 1.0
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def gamma_cdf(params, x):
    """CDF of Gamma(alpha, beta) (rate parameterization)."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0):
        raise DomainError("gamma_cdf requires x >= 0")
    return reg_lower_incomplete_gamma(params.alpha, params.beta * xs)


def gamma_quantile(params, q: float) -> float:
    """Inverse CDF by bracketed root finding on :func:`gamma_cdf`."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    mean = params.alpha / params.beta
    sd = math.sqrt(params.alpha) / params.beta
    hi = mean + 10.0 * sd
    while gamma_cdf(params, hi) < q:
        hi *= 2.0
    return optimize.brentq(lambda t: gamma_cdf(params, t) - q, 0.0, hi, xtol=1e-14, rtol=1e-14)


# ---------------------------------------------------------------------------
#  Goodness of fit
# ---------------------------------------------------------------------------

def ks_critical_1pct(n: int) -> float:
    return KS_COEFF_1PCT / math.sqrt(n)


def ks_statistic(samples, cdf: Callable) -> float:
    """One-sample Kolmogorov-Smirnov distance of ``samples`` against ``cdf``."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    if n < 1:
        raise DomainError("ks_statistic needs at least one sample")
    f = np.asarray(cdf(xs), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS distance and its asymptotic 1% critical value."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    crit = KS_COEFF_1PCT * math.sqrt((a.size + b.size) / (a.size * b.size))
    return d, crit


def gamma_central_moments(alpha: float, beta: float) -> dict[int, float]:
    """Central moments 2..6 of Gamma(alpha, beta), built from cumulants."""
    k = {n: alpha * math.factorial(n - 1) / beta**n for n in range(2, 7)}
    return {
        2: k[2],
        3: k[3],
        4: k[4] + 3 * k[2] ** 2,
        5: k[5] + 10 * k[3] * k[2],
        6: k[6] + 15 * k[4] * k[2] + 10 * k[3] ** 2 + 15 * k[2] ** 3,
    }


def _skewness_asymptotic_var(mu: dict[int, float]) -> float:
    # E[IF^2] for the influence function of m3 / m2**1.5, in standardized z
    sd = math.sqrt(mu[2])
    z = {j: mu[j] / sd**j for j in range(2, 7)}
    z[0], z[1] = 1.0, 0.0
    g = z[3]
    # IF(z) = z^3 - 1.5 g z^2 - 3 z + (0.5 g), as a coefficient list
    coef = {3: 1.0, 2: -1.5 * g, 1: -3.0, 0: 0.5 * g}
    return sum(ci * cj * z[i + j] for i, ci in coef.items() for j, cj in coef.items())


@dataclass
class MomentErrors:
    mean_err: float
    var_err: float
    skew_err: float


def moment_report(samples, params) -> MomentErrors:
    """Sample mean, variance and skewness against Gamma(alpha, beta).

    Each error is divided by its asymptotic standard error, so values are
    roughly standard normal under the null.
    """
    xs = np.asarray(samples, dtype=float)
    n = xs.size
    mu = gamma_central_moments(params.alpha, params.beta)
    mean = xs.mean()
    dev = xs - mean
    m2 = float(np.mean(dev**2))
    m3 = float(np.mean(dev**3))
    mean_err = (mean - params.alpha / params.beta) / math.sqrt(mu[2] / n)
    var_err = (m2 - mu[2]) / math.sqrt((mu[4] - mu[2] ** 2) / n)
    skew = m3 / m2**1.5 if m2 > 0 else 0.0
    skew_err = (skew - 2.0 / math.sqrt(params.alpha)) / math.sqrt(_skewness_asymptotic_var(mu) / n)
    return MomentErrors(float(mean_err), float(var_err), float(skew_err))


@dataclass
class GofReport:
    n: int
    ks_statistic: float
    ks_critical_1pct: float
    mean_err: float
    var_err: float
    skew_err: float
    passed: bool

    def lines(self) -> list[str]:
        return [
            f"n={self.n}",
            f"ks_statistic={self.ks_statistic:.9g}",
            f"ks_critical_1pct={self.ks_critical_1pct:.9g}",
            f"mean_err={self.mean_err:.9g}",
            f"var_err={self.var_err:.9g}",
            f"skew_err={self.skew_err:.9g}",
            f"passed={str(self.passed).lower()}",
        ]


def goodness_of_fit(samples, params, moment_bound: float = 4.0) -> GofReport:
    """KS test at 1% plus standardized moment checks."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    if n < 1000:
        raise DomainError(f"goodness_of_fit needs n >= 1000, got {n}")
    d = ks_statistic(xs, lambda t: gamma_cdf(params, t))
    crit = ks_critical_1pct(n)
    m = moment_report(xs, params)
    ok = d < crit and all(abs(e) < moment_bound for e in (m.mean_err, m.var_err, m.skew_err))
    return GofReport(n, d, crit, m.mean_err, m.var_err, m.skew_err, bool(ok))


# ---------------------------------------------------------------------------
#  Envelope checking
# ---------------------------------------------------------------------------

@dataclass
class EnvelopeReport:
    grid_size: int
    x_lo: float
    x_hi: float
    max_relative_violation: float
    tangency_points: list[float] = field(default_factory=list)
    passed: bool = False

    def lines(self) -> list[str]:
        pts = ";".join(f"{t:.9g}" for t in self.tangency_points)
        return [
            f"grid_size={self.grid_size}",
            f"x_lo={self.x_lo:.9g}",
            f"x_hi={self.x_hi:.9g}",
            f"max_relative_violation={self.max_relative_violation:.9g}",
            f"tangency_points={pts}",
            f"passed={str(self.passed).lower()}",
        ]


def envelope_grid(x_lo: float, x_hi: float, grid_size: int, focus: Sequence[float] = ()) -> np.ndarray:
    """Linear grid over the bulk, log-spaced tails, and a dense patch per focus point."""
    n_lin = grid_size // 2
    n_log = grid_size - n_lin
    parts = [np.linspace(x_lo, x_hi, n_lin)]
    log_lo = max(x_lo, x_hi * 1e-12, 1e-300)
    parts.append(np.geomspace(log_lo, x_hi, n_log))
    for c in focus:
        if x_lo <= c <= x_hi:
            half = 1e-3 * max(abs(c), 1e-6)
            parts.append(np.clip(c + np.linspace(-half, half, 201), x_lo, x_hi))
            parts.append(np.array([c]))
    return np.unique(np.concatenate(parts))


def _clusters(xs: np.ndarray, gap: np.ndarray, mask: np.ndarray) -> list[float]:
    # one representative (smallest |gap|) per contiguous run of near-equality
    points = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return points
    breaks = np.flatnonzero(np.diff(idx) > 1)
    for run in np.split(idx, breaks + 1):
        best = run[np.argmin(np.abs(gap[run]))]
        points.append(float(xs[best]))
    return points


def envelope_check(
    log_target: Callable,
    log_hat: Callable,
    x_lo: float,
    x_hi: float,
    grid_size: int = 10_000,
    focus: Sequence[float] = (),
) -> EnvelopeReport:
    """Check ``hat >= target`` on a grid, working with log densities.

    The relative violation at a point is ``target/hat - 1`` where positive.
    Points where both functions vanish are skipped.  Runs of grid points with
    ``|log hat - log target| < 1e-8`` are reported as tangency candidates.
    """
    if x_lo < 0.0 or not x_hi > x_lo:
        raise DomainError("envelope_check requires 0 <= x_lo < x_hi")
    if grid_size < 1000:
        raise DomainError("envelope_check requires grid_size >= 1000")
    xs = envelope_grid(x_lo, x_hi, grid_size, focus)
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = np.asarray(log_target(xs), dtype=float)
        lh = np.asarray(log_hat(xs), dtype=float)
    both_zero = np.isneginf(lt) & np.isneginf(lh)
    with np.errstate(invalid="ignore"):
        gap = np.where(both_zero, np.inf, lh - lt)
    if np.any(np.isnan(gap)):
        raise ConvergenceError("log densities produced NaN on the envelope grid")
    with np.errstate(over="ignore"):
        violation = float(np.max(np.expm1(np.maximum(-gap, 0.0)), initial=0.0))
    tangent = _clusters(xs, gap, np.abs(gap) < TANGENCY_TOL)
    return EnvelopeReport(
        grid_size=int(xs.size),
        x_lo=float(x_lo),
        x_hi=float(x_hi),
        max_relative_violation=violation,
        tangency_points=tangent,
        passed=violation <= ENVELOPE_TOL,
    )


# ---------------------------------------------------------------------------
#  Quadrature oracle
# ---------------------------------------------------------------------------

QUAD_EPSREL = 1e-12


def integrate_exp(log_f: Callable, lo: float, hi: float, shift: float, breakpoints: Sequence[float] = ()) -> float:
    """``integral of exp(log_f(x) - shift)`` over ``[lo, hi]``; ``hi`` may be inf.

    Finite pieces are split at ``breakpoints``; an infinite right end is
    handled by the transformed quadrature of ``scipy.integrate.quad``.
    """

    def f(x):
        with np.errstate(divide="ignore"):
            v = float(log_f(x)) - shift
        return math.exp(v) if v > -745.0 else 0.0

    cuts = sorted(c for c in breakpoints if lo < c < hi)
    edges = [lo, *cuts]
    if math.isinf(hi):
        finite_hi = edges[-1]
    else:
        edges.append(hi)
        finite_hi = None
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=QUAD_EPSREL, limit=400)
        total += val
        err += e
    if finite_hi is not None:
        val, e = integrate.quad(f, finite_hi, math.inf, epsabs=0.0, epsrel=QUAD_EPSREL, limit=400)
        total += val
        err += e
    if not total > 0.0 or err > 1e-9 * total:
        raise ConvergenceError(f"quadrature did not converge (value={total}, error={err})")
    return total


def quadrature_ar(
    log_target: Callable,
    log_hat: Callable,
    upper_limit: float,
    *,
    center: float | None = None,
    hat_lower: float = 0.0,
) -> float:
    """Acceptance rate ``integral(target) / integral(hat)`` by adaptive quadrature.

    The bulk ``[0, upper_limit]`` is split at ``center`` (typically the
    mode) and the tails beyond ``upper_limit`` are integrated explicitly, so
    heavy-tailed hats are handled.  ``hat_lower`` lets a hat extend below 0.
    Both integrands are rescaled by ``log_target(center)`` to avoid overflow.
    """
    if center is None:
        center = 0.5 * upper_limit
    shift = float(log_target(center))
    if not np.isfinite(shift):
        shift = 0.0
    cuts = [center, upper_limit]
    num = integrate_exp(log_target, 0.0, math.inf, shift, cuts)
    den = integrate_exp(log_hat, hat_lower, math.inf, shift, [0.0, *cuts])
    return num / den
