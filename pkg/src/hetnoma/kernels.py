"""Interference kernels of the multi-tier Poisson coverage model.

The closed-form coverage probabilities compress the whole downlink
interference field into one-dimensional integrals of the form

    interference kernel:  sum_k frac_k * (x*P_k/P_m)^(2/a) *
                          [ C(a) - int_0^{(P_m/(x*P_k))^(2/a)} dt/(1+t^(a/2)) ]

with C(a) = (2*pi/a)/sin(2*pi/a) = int_0^inf dt/(1+t^(a/2)), pathloss
exponent a > 2, tier powers P_k and tier intensity fractions frac_k.
The bracket is just the tail integral over [b, inf), which is how it is
evaluated here (no cancellation for large b).

The cooperative scheme additionally needs a void-cell gain kernel whose
integrand is the exponential moment E[1 - e^(t^(-a/2) H)] of a unit-mean
exponential gain H, i.e. -1/(t^(a/2) - 1).  That integral has a
non-integrable singularity at t = 1, so it diverges whenever the lower
limit is <= 1; divergence is reported as the typed value DIVERGENT, never
as a floating-point infinity produced by arithmetic.

All integrals are evaluated by adaptive interval bisection with an
embedded Gauss pair (10 and 21 nodes) for the per-interval error
estimate.  For a = 4 every integral has an arctan/log closed form, which
is used by default and doubles as an oracle for the adaptive path.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_ABS_TOL = 1e-10
DEFAULT_REL_TOL = 1e-8
MAX_SUBDIVISIONS = 2**20


class QuadratureError(RuntimeError):
    """Adaptive integration could not reach the requested tolerance."""

    def __init__(self, message, error_estimate):
        super().__init__(message)
        self.error_estimate = error_estimate


class _Divergent:
    """Singleton marker for a provably divergent kernel integral."""

    __slots__ = ()

    def __repr__(self):
        return "DIVERGENT"

    def __reduce__(self):
        return (_divergent_instance, ())


def _divergent_instance():
    return DIVERGENT


DIVERGENT = _Divergent()


def is_divergent(value):
    return value is DIVERGENT


@lru_cache(maxsize=8)
def _gauss_rule(n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


def _panel(f, a, b):
    """Integrate f over [a, b] with the embedded 10/21-node Gauss pair.

    Returns (value, error_estimate) where the estimate is the difference
    between the two rules.  Endpoints are never evaluated, so integrable
    endpoint singularities are tolerated.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x_hi, w_hi = _gauss_rule(21)
    hi = half * float(np.dot(w_hi, f(mid + half * x_hi)))
    x_lo, w_lo = _gauss_rule(10)
    lo = half * float(np.dot(w_lo, f(mid + half * x_lo)))
    return hi, abs(hi - lo)


def integrate_adaptive(f, a, b, abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL,
                       max_subdivisions=MAX_SUBDIVISIONS):
    """Adaptive bisection quadrature of a vectorized integrand on [a, b].

    The interval with the largest error estimate is split until the summed
    estimate meets max(abs_tol, rel_tol*|integral|).  Raises
    QuadratureError (carrying the achieved estimate) if the budget of
    subdivisions is exhausted first.
    """
    if b <= a:
        return 0.0
    value, err = _panel(f, a, b)
    # heap entries: (-error, tiebreak, a, b, value, error)
    counter = 0
    heap = [(-err, counter, a, b, value, err)]
    total = value
    total_err = err
    splits = 0
    while total_err > max(abs_tol, rel_tol * abs(total)):
        if splits >= max_subdivisions:
            raise QuadratureError(
                f"adaptive quadrature used {splits} subdivisions without reaching "
                f"tolerance (achieved error estimate {total_err:.3e})",
                total_err,
            )
        _, _, lo, hi, v, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _panel(f, lo, mid)
        v2, e2 = _panel(f, mid, hi)
        total += (v1 + v2) - v
        total_err += (e1 + e2) - e
        counter += 1
        heapq.heappush(heap, (-e1, counter, lo, mid, v1, e1))
        counter += 1
        heapq.heappush(heap, (-e2, counter, mid, hi, v2, e2))
        splits += 1
    return total


def full_line_integral(alpha):
    """int_0^inf dt/(1+t^(alpha/2)) = (2*pi/alpha)/sin(2*pi/alpha) for alpha > 2."""
    if alpha <= 2:
        raise ValueError("pathloss_exponent must exceed 2")
    u = 2.0 * math.pi / alpha
    return u / math.sin(u)


def base_integral(b, alpha, method="auto", abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL):
    """int_0^b dt/(1+t^(alpha/2)) for b >= 0, alpha > 2.

    method "auto" uses the arctan closed form at alpha = 4 and adaptive
    quadrature otherwise; "closed" and "adaptive" force one path (the
    two are cross-checked in the test suite).
    """
    if b < 0:
        raise ValueError("integration bound b must be nonnegative")
    if alpha <= 2:
        raise ValueError("pathloss_exponent must exceed 2")
    if b == 0.0:
        return 0.0
    if method == "closed" or (method == "auto" and alpha == 4.0):
        if alpha != 4.0:
            raise ValueError("closed form is only available for alpha=4")
        return math.atan(b)
    if method not in ("auto", "adaptive"):
        raise ValueError(f"unknown method {method!r}")
    half = alpha / 2.0
    return integrate_adaptive(lambda t: 1.0 / (1.0 + t**half), 0.0, b, abs_tol, rel_tol)


def tail_integral(b, alpha, method="auto", abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL):
    """int_b^inf dt/(1+t^(alpha/2)), evaluated without cancellation.

    For b > 1 the substitution t -> 1/u maps the tail onto (0, 1/b]:
    int_0^{1/b} u^(alpha/2-2)/(1+u^(alpha/2)) du.
    """
    if b < 0:
        raise ValueError("integration bound b must be nonnegative")
    if method == "closed" or (method == "auto" and alpha == 4.0):
        if alpha != 4.0:
            raise ValueError("closed form is only available for alpha=4")
        return math.pi / 2.0 if b == 0.0 else math.atan(1.0 / b)
    if b <= 1.0:
        return full_line_integral(alpha) - base_integral(b, alpha, method, abs_tol, rel_tol)
    half = alpha / 2.0
    return integrate_adaptive(
        lambda u: u ** (half - 2.0) / (1.0 + u**half), 0.0, 1.0 / b, abs_tol, rel_tol
    )


def void_tail_integral(a, alpha, exponent_sign=+1, method="auto",
                       abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL):
    """int_a^inf E[1 - e^(s*t^(-alpha/2)*H)] dt for unit-mean exponential H.

    With s = exponent_sign = +1 the integrand is -1/(t^(alpha/2)-1); the
    integral converges only for a > 1 (log-type singularity at t = 1) and
    DIVERGENT is returned for a <= 1.  With exponent_sign=-1 the
    integrand becomes 1/(t^(alpha/2)+1) and the result coincides with
    tail_integral(a, alpha).

    For alpha = 4, sign +1: -int_a^inf dt/(t^2-1) = 0.5*ln((a-1)/(a+1)).
    """
    if exponent_sign not in (+1, -1):
        raise ValueError("exponent_sign must be +1 or -1")
    if a < 0:
        raise ValueError("lower limit must be nonnegative")
    if exponent_sign == -1:
        return tail_integral(a, alpha, method, abs_tol, rel_tol)
    if a <= 1.0:
        return DIVERGENT
    if method == "closed" or (method == "auto" and alpha == 4.0):
        if alpha != 4.0:
            raise ValueError("closed form is only available for alpha=4")
        return 0.5 * math.log((a - 1.0) / (a + 1.0))
    # t -> 1/u maps int_a^inf dt/(t^(alpha/2)-1) onto (0, 1/a], 1/a < 1.
    half = alpha / 2.0
    return -integrate_adaptive(
        lambda u: u ** (half - 2.0) / (1.0 - u**half), 0.0, 1.0 / a, abs_tol, rel_tol
    )


@dataclass(frozen=True)
class KernelEvaluator:
    """Evaluates the per-tier interference kernels of an M-tier network.

    powers[k] is the tier-k transmit power and fractions[k] its share of
    the total base-station intensity (the fractions must sum to one).
    Only power ratios enter the kernels, so scaling every power by a
    common constant changes nothing.
    """

    powers: tuple
    fractions: tuple
    alpha: float
    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    use_closed_forms: bool = True

    def __post_init__(self):
        if len(self.powers) != len(self.fractions) or not self.powers:
            raise ValueError("powers and fractions must be equal-length, nonempty")
        if self.alpha <= 2:
            raise ValueError("pathloss_exponent must exceed 2")
        if any(p <= 0 for p in self.powers):
            raise ValueError("tier powers must be positive")
        if any(f < 0 for f in self.fractions):
            raise ValueError("intensity fractions must be nonnegative")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError("intensity fractions must sum to 1")

    @classmethod
    def from_params(cls, params, **kwargs):
        return cls(
            powers=tuple(t.power_watts for t in params.tiers),
            fractions=params.intensity_fractions,
            alpha=params.pathloss_exponent,
            **kwargs,
        )

    @property
    def n_tiers(self):
        return len(self.powers)

    def _method(self):
        return "auto" if self.use_closed_forms else "adaptive"

    def interference_kernel(self, m, x):
        """Mean-interference kernel of tier m at normalized threshold x.

        Nonnegative, zero at x = 0, strictly increasing, and +inf in the
        x -> inf limit (returned as math.inf without any quadrature).
        """
        if x < 0:
            raise ValueError("kernel argument must be nonnegative")
        if x == 0.0:
            return 0.0
        if math.isinf(x):
            return math.inf
        p_m = self.powers[m]
        total = 0.0
        for p_k, frac_k in zip(self.powers, self.fractions):
            if frac_k == 0.0:
                continue
            ratio = x * p_k / p_m
            b = ratio ** (-2.0 / self.alpha)
            total += frac_k * ratio ** (2.0 / self.alpha) * tail_integral(
                b, self.alpha, self._method(), self.abs_tol, self.rel_tol
            )
        return total

    def void_kernel(self, m, y, exponent_sign=+1):
        """Void-cell gain kernel of tier m at normalized threshold y > 0.

        Returns DIVERGENT when any tier's lower integration limit
        (P_m/(y*P_k))^(2/alpha) is <= 1 (sign +1 only).  Finite values are
        <= 0 for sign +1; sign -1 reproduces interference_kernel(m, y).
        """
        if y <= 0:
            raise ValueError("kernel argument must be positive")
        p_m = self.powers[m]
        total = 0.0
        for p_k, frac_k in zip(self.powers, self.fractions):
            if frac_k == 0.0:
                continue
            ratio = y * p_k / p_m
            a = ratio ** (-2.0 / self.alpha)
            tail = void_tail_integral(
                a, self.alpha, exponent_sign, self._method(), self.abs_tol, self.rel_tol
            )
            if is_divergent(tail):
                return DIVERGENT
            total += frac_k * ratio ** (2.0 / self.alpha) * tail
        return total

    def combined_kernel(self, m, x, y, nonvoid_prob, mode="appendix"):
        """Coverage exponent of tier m with void-cell cooperation.

        mode "appendix" (default, finite everywhere):
            max(q*interference_kernel(x) - (1-q)*interference_kernel(y), 0)
        mode "theorem" (additive exponential-moment form, may diverge):
            max(q*interference_kernel(x) + (1-q)*void_kernel(y), 0)

        Both reduce to interference_kernel(x) at q = 1; divergence of the
        void kernel is passed through as DIVERGENT.
        """
        q = nonvoid_prob
        if not 0.0 <= q <= 1.0:
            raise ValueError("nonvoid_prob must lie in [0, 1]")
        if mode not in ("appendix", "theorem"):
            raise ValueError(f"unknown kernel mode {mode!r}")
        if q == 1.0:
            return self.interference_kernel(m, x)
        if mode == "appendix":
            value = q * self.interference_kernel(m, x) - (1.0 - q) * self.interference_kernel(m, y)
        else:
            tilde = self.void_kernel(m, y)
            if is_divergent(tilde):
                return DIVERGENT
            value = q * self.interference_kernel(m, x) + (1.0 - q) * tilde
        return max(value, 0.0)
