"""Gamma(alpha, beta) sampling for alpha >= 1 with a Gamma proposal.

The proposal is ``pi(x) = K_p * x**(alpha_p - 1) * exp(-beta_p * x)`` with
integer shape ``alpha_p <= alpha``, so it can be sampled exactly as an
Erlang variate.  Its parameters are chosen so that ``pi`` touches the
unnormalized target ``p(x) = x**(alpha - 1) * exp(-beta * x)``:

* ``alpha >= 2``: ``alpha_p = floor(alpha)`` and ``pi`` matches ``p`` in
  location and height of the maximum ``x_max = (alpha - 1) / beta``.
* ``1 <= alpha < 2``: ``alpha_p = 1`` and ``log pi`` is the tangent line of
  ``log p`` at ``x* = alpha / beta``, the point minimizing the hat area.
* integer ``alpha``: ``pi == p`` and no rejection is needed.

All densities are evaluated as exp-of-log so large shapes do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import xlogy

from .errors import DomainError
from .rng import UniformSource, next_u01
from .stats import ln_gamma

INTEGER_TOL = 1e-9
# 2**-54 is the smallest uniform; 16 of them multiply to >= 2**-864, well
# clear of underflow, so Erlang draws take one log per 16 uniforms.
_PRODUCT_BLOCK = 16


def is_integer_shape(alpha: float) -> bool:
    return abs(alpha - round(alpha)) < INTEGER_TOL


@dataclass(frozen=True)
class GammaParams:
    """Shape ``alpha >= 1`` and rate ``beta > 0``."""

    alpha: float
    beta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 1.0):
            raise DomainError(f"alpha must be >= 1, got {self.alpha}")
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise DomainError(f"beta must be > 0, got {self.beta}")

    @property
    def mean(self) -> float:
        return self.alpha / self.beta

    @property
    def variance(self) -> float:
        return self.alpha / self.beta**2


@dataclass(frozen=True)
class ProposalParams:
    target: GammaParams
    alpha_p: int
    beta_p: float
    k_p: float
    log_k_p: float

    @property
    def x_max(self) -> float:
        """Mode of the target, ``(alpha - 1) / beta``."""
        return (self.target.alpha - 1.0) / self.target.beta

    @property
    def x_star(self) -> float:
        """Optimal tangent point of the exponential hat, ``alpha / beta``."""
        return self.target.alpha / self.target.beta

    @property
    def omega(self) -> float:
        return self.target.beta - self.beta_p

    @property
    def exact(self) -> bool:
        return is_integer_shape(self.target.alpha)

    @property
    def contact_point(self) -> float:
        """Where hat and target touch: ``x_max`` for alpha >= 2, else ``x*``."""
        return self.x_max if self.alpha_p >= 2 else self.x_star


@dataclass
class SampleBatch:
    values: np.ndarray
    proposed: int
    accepted: int

    def __post_init__(self):
        if self.accepted != len(self.values) or self.accepted > self.proposed:
            raise ValueError("inconsistent sample counters")

    @property
    def empirical_ar(self) -> float:
        return self.accepted / self.proposed


# ---------------------------------------------------------------------------
#  Densities
# ---------------------------------------------------------------------------

def _as_nonnegative(x):
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0):
        raise DomainError("density evaluated at x < 0")
    return xs


def _scalar_or_array(v):
    return float(v) if np.ndim(v) == 0 else v


def log_target(params: GammaParams, x):
    xs = _as_nonnegative(x)
    return _scalar_or_array(xlogy(params.alpha - 1.0, xs) - params.beta * xs)


def target_unnorm(params: GammaParams, x):
    """``x**(alpha - 1) * exp(-beta * x)``."""
    return _scalar_or_array(np.exp(log_target(params, x)))


def log_proposal(prop: ProposalParams, x):
    xs = _as_nonnegative(x)
    return _scalar_or_array(prop.log_k_p + xlogy(prop.alpha_p - 1.0, xs) - prop.beta_p * xs)


def proposal_unnorm(prop: ProposalParams, x):
    """``K_p * x**(alpha_p - 1) * exp(-beta_p * x)``."""
    return _scalar_or_array(np.exp(log_proposal(prop, x)))


def build_proposal(params: GammaParams) -> ProposalParams:
    a, b = params.alpha, params.beta
    if is_integer_shape(a):
        return ProposalParams(params, int(round(a)), b, 1.0, 0.0)
    if a >= 2.0:
        ap = math.floor(a)
        beta_p = b * (ap - 1) / (a - 1.0)
        log_k = (ap - a) + (a - ap) * math.log((a - 1.0) / b)
    else:
        ap = 1
        beta_p = b / a
        log_k = (1.0 - a) + (a - 1.0) * math.log(a / b)
    return ProposalParams(params, int(ap), beta_p, math.exp(log_k), log_k)


# ---------------------------------------------------------------------------
#  Areas and acceptance rates
# ---------------------------------------------------------------------------

def log_target_area(params: GammaParams) -> float:
    """``log integral of p = log Gamma(alpha) - alpha log beta``."""
    return ln_gamma(params.alpha) - params.alpha * math.log(params.beta)


def proposal_area(params: GammaParams) -> float:
    """``integral of pi = K_p * (alpha_p - 1)! / beta_p**alpha_p``."""
    prop = build_proposal(params)
    return math.exp(
        prop.log_k_p + ln_gamma(prop.alpha_p) - prop.alpha_p * math.log(prop.beta_p)
    )


def theoretical_ar_m1(alpha: float) -> float:
    """Expected acceptance rate; does not depend on the rate parameter.

    For ``alpha >= 2`` this is the exact ratio of areas::

        (e / (alpha - 1))**(alpha - alpha_p) * Gamma(alpha) / Gamma(alpha_p)
            * ((alpha_p - 1) / (alpha - 1))**alpha_p
    """
    GammaParams(alpha)
    if is_integer_shape(alpha):
        return 1.0
    if alpha < 2.0:
        return math.exp(ln_gamma(alpha) - alpha * math.log(alpha) - (1.0 - alpha))
    ap = math.floor(alpha)
    return math.exp(
        (alpha - ap) * (1.0 - math.log(alpha - 1.0))
        + ln_gamma(alpha)
        - ln_gamma(ap)
        + ap * math.log((ap - 1.0) / (alpha - 1.0))
    )


def uncorrected_ar_m1(alpha: float) -> float:
    """``(e / (alpha - 1))**(alpha - alpha_p) * Gamma(alpha) / Gamma(alpha_p)``.

    This omits the ``((alpha_p - 1) / (alpha - 1))**alpha_p`` factor of the
    area ratio and exceeds 1 for non-integer ``alpha >= 2`` (1.7895 at 2.5).
    Only kept to demonstrate that discrepancy; use :func:`theoretical_ar_m1`.
    """
    if alpha < 2.0:
        raise DomainError("defined for alpha >= 2 only")
    ap = math.floor(alpha)
    return math.exp((alpha - ap) * (1.0 - math.log(alpha - 1.0)) + ln_gamma(alpha) - ln_gamma(ap))


def tangent_area(theta: float, params: GammaParams) -> float:
    """Area under the exponential hat tangent to ``log p`` at ``theta``.

    ``theta**(alpha - 1) * e**(1 - alpha) / (beta - (alpha - 1) / theta)``,
    finite only for ``theta > (alpha - 1) / beta``.
    """
    a, b = params.alpha, params.beta
    if not 1.0 <= a < 2.0:
        raise DomainError("tangent_area is defined for 1 <= alpha < 2")
    if not theta > 0.0:
        raise DomainError("tangent point must be positive")
    rate = b - (a - 1.0) / theta
    if not rate > 0.0:
        raise DomainError(f"theta={theta} gives a non-integrable hat (need theta > {(a - 1.0) / b})")
    return math.exp((a - 1.0) * math.log(theta) + (1.0 - a)) / rate


def optimal_tangent(params: GammaParams) -> float:
    """Minimizer of :func:`tangent_area`: ``alpha / beta``."""
    if not 1.0 <= params.alpha < 2.0:
        raise DomainError("optimal_tangent is defined for 1 <= alpha < 2")
    return params.alpha / params.beta


# ---------------------------------------------------------------------------
#  Sampling kernels
# ---------------------------------------------------------------------------

@njit(inline="always")
def _erlang(n, beta, s0, s1, s2, s3):
    log_sum = 0.0
    remaining = n
    while remaining > 0:
        k = min(remaining, _PRODUCT_BLOCK)
        prod = 1.0
        for _ in range(k):
            u, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
            prod *= u
        log_sum += np.log(prod)
        remaining -= k
    return -log_sum / beta, s0, s1, s2, s3


@njit(cache=True)
def _erlang_kernel(state, n, beta, count):
    out = np.empty(count)
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    for i in range(count):
        x, s0, s1, s2, s3 = _erlang(n, beta, s0, s1, s2, s3)
        out[i] = x
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return out


@njit(cache=True)
def _m1_kernel(state, count, alpha_p, beta_p, shape_gap, omega, log_k_p, exact):
    out = np.empty(count)
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    proposed = 0
    accepted = 0
    while accepted < count:
        x, s0, s1, s2, s3 = _erlang(alpha_p, beta_p, s0, s1, s2, s3)
        proposed += 1
        if not exact:
            u, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
            # log p(x) - log pi(x)
            if np.log(u) > shape_gap * np.log(x) - omega * x - log_k_p:
                continue
        out[accepted] = x
        accepted += 1
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return out, proposed


def erlang_sample(n: int, beta: float, src: UniformSource) -> float:
    """``-log(u_1 * ... * u_n) / beta``; consumes exactly ``n`` uniforms."""
    return float(erlang_samples(n, beta, src, 1)[0])


def erlang_samples(n: int, beta: float, src: UniformSource, count: int) -> np.ndarray:
    if int(n) != n or n < 1:
        raise DomainError(f"Erlang shape must be a positive integer, got {n}")
    if not beta > 0.0:
        raise DomainError(f"beta must be > 0, got {beta}")
    return _erlang_kernel(src.state, int(n), float(beta), int(count))


def sample_m1(params: GammaParams, src: UniformSource, count: int) -> SampleBatch:
    """Draw ``count`` Gamma(alpha, beta) variates by rejection from the Gamma hat.

    Each trial draws ``x`` from the Erlang proposal, then ``u`` and accepts
    when ``log u <= log p(x) - log pi(x)``.  Integer shapes skip the test.
    """
    if count < 1:
        raise DomainError("count must be positive")
    prop = build_proposal(params)
    values, proposed = _m1_kernel(
        src.state,
        int(count),
        prop.alpha_p,
        prop.beta_p,
        params.alpha - prop.alpha_p,
        prop.omega,
        prop.log_k_p,
        prop.exact,
    )
    return SampleBatch(values, int(proposed), int(count))
