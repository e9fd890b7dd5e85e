# algorithms/numerics.py
"""Special functions and adaptive quadrature shared by the analytic modules.

Incomplete gamma values are handled in the scaled form G(s, x) = e^x Gamma(s, x)
so that the e^{r/P} and e^{M/P} prefactors of the closed forms can be folded
in before exponentiation.
"""

import logging
import math
import sys
from dataclasses import dataclass
from functools import lru_cache

from scipy import integrate, special

from algorithms.errors import DomainError, QuadratureError

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329
_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITERATIONS = 500
_LOG_MAX = math.log(sys.float_info.max)
MAX_NESTING = 3


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol!r}")
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol!r}")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise ValueError(f"max_subdivisions must be a positive integer, got {self.max_subdivisions!r}")

    def tightened(self, levels):
        """One decade tighter per nesting level."""
        scale = 10.0 ** levels
        return QuadratureSpec(self.rel_tol / scale, self.abs_tol / scale, self.max_subdivisions)


DEFAULT_SPEC = QuadratureSpec()


def _as_integer_order(s):
    if int(s) != s:
        raise DomainError(f"only integer orders are supported, got s={s!r}")
    return int(s)


def _e1_series(x):
    total = 0.0
    term = 1.0
    for k in range(1, _MAX_ITERATIONS):
        term *= -x / k
        contribution = term / k
        total += contribution
        if abs(contribution) < _EPS * abs(total):
            break
    return -EULER_GAMMA - math.log(x) - total


def _scaled_gamma_continued_fraction(s, x):
    # modified Lentz evaluation of e^x Gamma(s, x), valid for any real s when x > 1
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITERATIONS):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(s * math.log(x)) * h
    raise QuadratureError("incomplete gamma continued fraction did not converge", h, float("nan"))


def _scaled_e1(x):
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _scaled_gamma_continued_fraction(0, x)


def exp_integral_e1(x):
    """Exponential integral E1(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"E1 requires x > 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    if x <= 1.0:
        return _e1_series(x)
    return math.exp(-x) * _scaled_gamma_continued_fraction(0, x)


@lru_cache(maxsize=1 << 16)
def _log_scaled_upper_gamma(s, x):
    """log(e^x Gamma(s, x)) for s >= 1 and x > 0 from the finite sum, rescaled by its largest term."""
    log_gamma_s = special.gammaln(s)
    log_x = math.log(x)
    exponents = [log_gamma_s - special.gammaln(i + 1) + i * log_x for i in range(s)]
    peak = max(exponents)
    return peak + math.log(math.fsum(math.exp(e - peak) for e in exponents))


@lru_cache(maxsize=1 << 16)
def _scaled_upper_gamma(s, x):
    if s >= 1:
        if x == 0.0:
            return float(math.factorial(s - 1))
        log_value = _log_scaled_upper_gamma(s, x)
        return math.exp(log_value) if log_value < _LOG_MAX else math.inf
    if x > 1.0:
        return _scaled_gamma_continued_fraction(s, x)
    # downward recurrence G(k-1) = (G(k) - x^(k-1)) / (k-1), anchored at G(0) = e^x E1(x)
    value = _scaled_e1(x)
    for k in range(0, s, -1):
        value = (value - x ** (k - 1)) / (k - 1)
    return value


def scaled_upper_gamma(s, x):
    """e^x * Gamma(s, x).

    s >= 1 uses the finite sum. For s <= 0 and x <= 1 the value comes from the
    downward recurrence G(s) = (G(s + 1) - x^s) / s anchored at e^x E1(x).
    For s <= 0 and x > 1 the continued fraction replaces the recurrence, whose
    steps lose about log10(x) digits each there.
    """
    s = _as_integer_order(s)
    if x < 0 or (s <= 0 and not x > 0):
        raise DomainError(f"Gamma(s, x) undefined for s={s}, x={x!r}")
    return _scaled_upper_gamma(s, float(x))


def upper_incomplete_gamma(s, x):
    """Upper incomplete gamma Gamma(s, x) for integer s."""
    return exp_shifted_gamma(s, x, 0.0)


def exp_shifted_gamma(s, x, shift):
    """e^shift * Gamma(s, x) without forming e^shift on its own."""
    s = _as_integer_order(s)
    if x < 0 or (s <= 0 and not x > 0):
        raise DomainError(f"Gamma(s, x) undefined for s={s}, x={x!r}")
    if math.isinf(x):
        return 0.0
    if s >= 1 and x > 0:
        return math.exp(shift - x + _log_scaled_upper_gamma(s, float(x)))
    return math.exp(shift - x) * _scaled_upper_gamma(s, float(x))


def regularized_lower_gamma(s, x):
    """1 - Gamma(s, x) / Gamma(s); CDF of a unit-scale Gamma(s) variable."""
    if x <= 0:
        return 0.0
    return float(special.gammainc(s, x))


def integrate_1d(f, a, b, spec=None, points=None):
    spec = spec or DEFAULT_SPEC
    if a > b:
        raise DomainError(f"integration bounds out of order: a={a!r} > b={b!r}")
    if a == b:
        return 0.0
    if math.isinf(b):
        return integrate_semi_infinite(f, a, spec)
    breaks = sorted({p for p in (points or ()) if a < p < b}) or None
    result = integrate.quad(
        f, a, b,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions, points=breaks, full_output=1,
    )
    value, error_bound, info = result[:3]
    if len(result) > 3:
        if info["last"] >= spec.max_subdivisions:
            raise QuadratureError(
                f"no convergence on [{a!r}, {b!r}] after {spec.max_subdivisions} subdivisions",
                value, error_bound,
            )
        message = str(result[3]).strip().splitlines()[0]
        if error_bound > 1e-6 * max(1.0, abs(value)):
            logger.warning("quadrature on [%g, %g]: %s (error bound %.3g)", a, b, message, error_bound)
        else:
            logger.debug("quadrature on [%g, %g]: %s", a, b, message)
    return value


def integrate_semi_infinite(f, a, spec=None):
    """Integral of f over [a, inf) through y = a + u/(1-u)."""
    if a < 0:
        raise DomainError(f"lower bound must be nonnegative, got {a!r}")

    def mapped(u):
        if u >= 1.0:
            return 0.0
        s = 1.0 - u
        return f(a + u / s) / (s * s)

    return integrate_1d(mapped, 0.0, 1.0, spec)


def integrate_nested(f, bounds, spec=None):
    """Nested adaptive quadrature.

    bounds lists (lower, upper) pairs outermost first; each limit is a number
    or a callable of the enclosing variables. f receives the variables in the
    same order.
    """
    spec = spec or DEFAULT_SPEC
    depth_total = len(bounds)
    if not 1 <= depth_total <= MAX_NESTING:
        raise DomainError(f"nested quadrature supports 1 to {MAX_NESTING} levels, got {depth_total}")

    def level(depth, outer):
        lower, upper = bounds[depth]
        lower = lower(*outer) if callable(lower) else lower
        upper = upper(*outer) if callable(upper) else upper
        if not upper > lower:
            return 0.0
        if depth == depth_total - 1:
            def integrand(x):
                return f(*outer, x)
        else:
            def integrand(x):
                return level(depth + 1, outer + (x,))
        level_spec = spec.tightened(depth)
        if math.isinf(upper):
            return integrate_semi_infinite(integrand, lower, level_spec)
        return integrate_1d(integrand, lower, upper, level_spec)

    return level(0, ())
