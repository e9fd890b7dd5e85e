# algorithms/analytic_obf.py
"""SINR distributions of adaptive OBF with r scheduled users.

Notation: a = r/P. Unordered SINRs v_1 >= ... >= v_r come from random user
selection; y_1 >= ... >= y_n are the SINRs of the greedily scheduled users.
Point arguments are given in rank order (y_1, ..., y_n) unless a function
name spells the order out (obf_I2, obf_I3).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import cumulative_trapezoid

from algorithms.errors import DomainError, RegionError
from algorithms.numerics import (
    DEFAULT_SPEC,
    QuadratureSpec,
    exp_shifted_gamma,
    integrate_1d,
    integrate_nested,
    integrate_semi_infinite,
    regularized_lower_gamma,
)
from data.experiment import DistributionGrid

logger = logging.getLogger(__name__)

CLOSED_FORM_MAX_RANK = 3
JOINT_MAX_RANK = 5
MARGINAL_MAX_RANK = 4
MARGINAL_SPEC = QuadratureSpec(rel_tol=1e-7, abs_tol=1e-11)


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ObfParams:
    M: int
    K: int
    P: float
    r: int

    def __post_init__(self):
        if not 1 <= self.r <= self.M:
            raise ValueError(f"r must lie in [1, M={self.M}], got {self.r}")
        if self.K < self.r:
            raise ValueError(f"K must be at least r={self.r}, got {self.K}")
        if not self.P > 0:
            raise ValueError(f"P must be positive, got {self.P!r}")

    @classmethod
    def from_system(cls, params, r=None):
        return cls(params.M, params.K, params.P, r if r is not None else params.r)

    @property
    def a(self):
        return self.r / self.P


def _eg(params, s, w):
    """e^a Gamma(s, a w)."""
    return exp_shifted_gamma(s, params.a * w, params.a)


def _check_ordered(ys, name="y"):
    ys = tuple(float(y) for y in ys)
    if any(y < 0 for y in ys) or any(ys[i] < ys[i + 1] for i in range(len(ys) - 1)):
        raise RegionError(f"{name} values must satisfy {name}1 >= {name}2 >= ... >= 0, got {ys}")
    return ys


def _is_ordered(ys):
    return all(y >= 0 for y in ys) and all(ys[i] >= ys[i + 1] for i in range(len(ys) - 1))


def _check_rank(n, params):
    if not 1 <= n <= params.r:
        raise DomainError(f"rank must lie in [1, r={params.r}], got {n}")


def obf_x_to_v(xs, params):
    xs = np.asarray(xs, dtype=float)
    if xs.shape != (params.r,):
        raise ValueError(f"{params.r} values expected, got shape {xs.shape}")
    if np.any(xs < 0):
        raise RegionError("x values must be nonnegative")
    a = params.a
    head = np.concatenate([[0.0], np.cumsum(xs)[:-1]])
    tail = np.cumsum(xs[::-1])[::-1]
    vs = tail / (head + a)
    vs[0] = tail[0] / a
    return vs


def obf_v_to_x(vs, params):
    """Inverse of obf_x_to_v together with |det J| of the inverse map."""
    vs = np.asarray(_check_ordered(vs, "v"), dtype=float)
    if vs.shape != (params.r,):
        raise ValueError(f"{params.r} values expected, got shape {vs.shape}")
    a = params.a
    scale = a * (1.0 + vs[0])
    following = np.append(vs[1:], 0.0)
    xs = scale * (vs - following) / ((1.0 + vs) * (1.0 + following))
    det = a ** params.r * (1.0 + vs[0]) ** (params.r - 1) / np.prod((1.0 + vs[1:]) ** 2)
    return xs, float(det)


def obf_unordered_pdf(vs, params):
    """Joint density of (v_1, ..., v_n) under random user selection."""
    vs = tuple(float(v) for v in vs)
    n = len(vs)
    _check_rank(n, params)
    if not _is_ordered(vs):
        return 0.0
    M, a = params.M, params.a
    v1, vn = vs[0], vs[-1]
    if vn == 0 and M > n:
        return 0.0
    log_density = M * math.log(a) - a * v1 - special.gammaln(M - n + 1)
    if n == 1:
        log_density += (M - 1) * math.log(v1) if M > 1 else 0.0
    else:
        log_density += (M - 1) * math.log1p(v1) - 2.0 * sum(math.log1p(v) for v in vs[1:])
        if M > n:
            log_density += (M - n) * (math.log(vn) - math.log1p(vn))
    return math.exp(log_density)


def _phi1(y1, params):
    return obf_unordered_pdf((y1,), params)


def _phi2(y1, y2, params):
    M = params.M
    bracket = _eg(params, M, 1.0 + y2) - _eg(params, M, 1.0 + y1)
    return max(0.0, y2 ** (M - 2) * bracket / (math.gamma(M - 1) * (1.0 + y2) ** M))


def _phi3(y1, y2, y3, params):
    M, a = params.M, params.a
    b3, b2 = 1.0 + y3, 1.0 + y2
    braces = (
        _eg(params, M, b3) / b3
        - _eg(params, M, b2) / b2
        - (1.0 / b3 - 1.0 / b2) * _eg(params, M, 1.0 + y1)
        + a * (_eg(params, M - 1, b2) - _eg(params, M - 1, b3))
    )
    return max(0.0, y3 ** (M - 3) / b3 ** (M - 1) * braces / math.gamma(M - 2))


def _chain_integral(n, ys, params, spec, integrated):
    """phi_n (or its integral over y_n) with v_1 integrated analytically.

    The remaining variables v_{n-1} >= ... >= v_2 are integrated numerically,
    outermost first.
    """
    M = params.M
    y1, yn = ys[0], ys[n - 1]
    tail_gamma = _eg(params, M, 1.0 + y1)
    if not integrated:
        tail_factor = (yn / (1.0 + yn)) ** (M - n) / ((1.0 + yn) ** 2 * math.gamma(M - n + 1))

    def integrand(*chain):
        v2 = chain[-1]
        value = _eg(params, M, 1.0 + v2) - tail_gamma
        for v in chain:
            value /= (1.0 + v) ** 2
        if integrated:
            m = min(yn, chain[0])
            return value * (m / (1.0 + m)) ** (M - n + 1) / math.gamma(M - n + 2)
        return value * tail_factor

    def bounds(outer_lower, outer_upper):
        # chain[0] = v_{n-1}, then v_{n-2}, ..., v_2
        levels = [(outer_lower, outer_upper)]
        for k in range(n - 2, 1, -1):
            levels.append((lambda *outer: outer[-1], ys[k - 1]))
        return levels

    if not integrated:
        return max(0.0, integrate_nested(integrand, bounds(yn, ys[n - 2]), spec))
    split = min(yn, ys[n - 2])
    total = integrate_nested(integrand, bounds(0.0, split), spec)
    if ys[n - 2] > split:
        total += integrate_nested(integrand, bounds(split, ys[n - 2]), spec)
    return max(0.0, total)


def obf_phi(n, ys, params, spec=None):
    """phi_n(y_n, ..., y_1) for ys = (y_1, ..., y_n)."""
    ys = _check_ordered(ys)
    if len(ys) != n:
        raise ValueError(f"{n} values expected, got {len(ys)}")
    _check_rank(n, params)
    if n == 1:
        return _phi1(ys[0], params)
    if n == 2:
        return _phi2(ys[0], ys[1], params)
    if n == 3:
        return _phi3(ys[0], ys[1], ys[2], params)
    if n > JOINT_MAX_RANK:
        raise DomainError(f"phi_n is evaluated for n <= {JOINT_MAX_RANK}, got {n}")
    return _chain_integral(n, ys, params, spec or DEFAULT_SPEC, integrated=False)


def obf_I2(y2, y1, params):
    """Integral of phi_2(alpha, y1) over alpha in [0, y2]."""
    y1, y2 = _check_ordered((y1, y2))
    if y2 == 0:
        return 0.0
    M, a = params.M, params.a
    z2 = y2 / (1.0 + y2)
    lower = regularized_lower_gamma(M, a * y2)
    bracket = _eg(params, M, 1.0 + y2) - _eg(params, M, 1.0 + y1)
    return max(0.0, lower + z2 ** (M - 1) * bracket / math.gamma(M))


def obf_I3(y3, y2, y1, params):
    """Integral of phi_3(alpha, y2, y1) over alpha in [0, y3]."""
    y1, y2, y3 = _check_ordered((y1, y2, y3))
    if y3 == 0:
        return 0.0
    M, a = params.M, params.a
    b3 = 1.0 + y3
    g_m_y1 = _eg(params, M, 1.0 + y1)
    g_m_y2 = _eg(params, M, 1.0 + y2)
    g_m1_y2 = _eg(params, M - 1, 1.0 + y2)
    g_m_y3 = _eg(params, M, b3)
    g_m1_y3 = _eg(params, M - 1, b3)
    g_m_0 = _eg(params, M, 1.0)
    g_m1_0 = _eg(params, M - 1, 1.0)
    middle = a * g_m1_y2 + (g_m_y1 - g_m_y2) / (1.0 + y2)
    terms = []
    for i in range(M - 2):
        low_order = M - i - 2
        upper = (
            (1.0 - b3 ** -(i + 1)) / (i + 1) * middle
            - (1.0 - b3 ** -(i + 2)) / (i + 2) * g_m_y1
            + a * g_m1_y3 / (b3 ** (i + 1) * (i + 1))
            - g_m_y3 / (b3 ** (i + 2) * (i + 2))
            - a ** (i + 2) * _eg(params, low_order, b3) / ((i + 1) * (i + 2))
        )
        lower = (
            a * g_m1_0 / (i + 1)
            - g_m_0 / (i + 2)
            - a ** (i + 2) * _eg(params, low_order, 1.0) / ((i + 1) * (i + 2))
        )
        terms.append(special.comb(M - 3, i, exact=True) * (-1) ** i * (upper - lower))
    return max(0.0, math.fsum(terms) / math.gamma(M - 2))


def obf_cdf_unordered_joint(ys, params, spec=None):
    """Pr(v_1 <= y_1, ..., v_n <= y_n), the n-th integrated phi."""
    ys = _check_ordered(ys)
    n = len(ys)
    _check_rank(n, params)
    if n == 1:
        return regularized_lower_gamma(params.M, params.a * ys[0])
    if n == 2:
        return obf_I2(ys[1], ys[0], params)
    if n == 3:
        return obf_I3(ys[2], ys[1], ys[0], params)
    if n > JOINT_MAX_RANK:
        raise DomainError(f"integrated phi_n is evaluated for n <= {JOINT_MAX_RANK}, got {n}")
    return _chain_integral(n, ys, params, spec or DEFAULT_SPEC, integrated=True)


def obf_unordered_marginal_pdf(n, y, params, spec=None):
    """Density of v_n alone under random selection."""
    if y < 0:
        return 0.0
    return obf_phi(n, (math.inf,) * (n - 1) + (y,), params, spec)


def obf_unordered_cdf(n, y, params, spec=None):
    if y <= 0:
        return 0.0
    return obf_cdf_unordered_joint((math.inf,) * (n - 1) + (y,), params, spec)


def obf_joint_pdf_scheduled(ys, params, spec=None):
    """Joint density of the first n scheduled SINRs (y_1, ..., y_n)."""
    ys = tuple(float(y) for y in ys)
    n = len(ys)
    _check_rank(n, params)
    if n > JOINT_MAX_RANK:
        raise DomainError(f"joint density is evaluated for n <= {JOINT_MAX_RANK}, got {n}")
    if not _is_ordered(ys):
        return 0.0
    K = params.K
    cdf = obf_cdf_unordered_joint(ys, params, spec)
    product = 1.0
    for i in range(1, n + 1):
        product *= obf_phi(i, ys[:i], params, spec)
        if product == 0.0:
            return 0.0
    count = math.exp(special.gammaln(K + 1) - special.gammaln(K - n + 1))
    return count * cdf ** (K - n) * product


def upper_limit(params, spec=None):
    """SINR beyond which every scheduled user has negligible mass."""
    spec = spec or DEFAULT_SPEC
    return float(special.gammainccinv(params.M, spec.abs_tol / params.K)) / params.a


def obf_marginal_pdf(n, y, params, spec=None):
    _check_rank(n, params)
    if y < 0:
        return 0.0
    if n > MARGINAL_MAX_RANK:
        raise DomainError(f"marginal density is evaluated for n <= {MARGINAL_MAX_RANK}, got {n}")
    spec = spec or MARGINAL_SPEC
    K = params.K
    if n == 1:
        return K * regularized_lower_gamma(params.M, params.a * y) ** (K - 1) * _phi1(y, params)
    y_max = upper_limit(params, spec)
    if y >= y_max:
        return 0.0
    if n == 2:
        return integrate_1d(lambda y1: obf_joint_pdf_scheduled((y1, y), params, spec), y, y_max, spec)
    if n == 3:
        return integrate_nested(
            lambda y2, y1: obf_joint_pdf_scheduled((y1, y2, y), params, spec),
            [(y, y_max), (lambda y2: y2, y_max)],
            spec,
        )
    logger.warning("numeric fallback: rank %d marginal by %d-level nested quadrature", n, n - 1)
    return integrate_nested(
        lambda y3, y2, y1: obf_joint_pdf_scheduled((y1, y2, y3, y), params, spec),
        [(y, y_max), (lambda y3: y3, y_max), (lambda y3, y2: y2, y_max)],
        spec,
    )


def obf_marginal_cdf(n, y, params, spec=None):
    if y <= 0:
        return 0.0
    if n == 1:
        return regularized_lower_gamma(params.M, params.a * y) ** params.K
    return min(1.0, integrate_1d(lambda t: obf_marginal_pdf(n, t, params, spec), 0.0, y, spec or MARGINAL_SPEC))


def sinr_grid(scale, y_max, count):
    """count points in [0, y_max] uniform in y/(y + scale)."""
    u_max = y_max / (y_max + scale)
    u = np.linspace(0.0, u_max, count)
    return scale * u / (1.0 - u)


def obf_distribution(n, params, count=200, spec=None):
    """Marginal PDF/CDF of y_n tabulated for interpolation."""
    spec = spec or MARGINAL_SPEC
    y = sinr_grid(params.M / params.a, upper_limit(params, spec), count)
    pdf = np.array([obf_marginal_pdf(n, v, params, spec) for v in y])
    if n == 1:
        cdf = np.array([obf_marginal_cdf(1, v, params) for v in y])
    else:
        cdf = cumulative_trapezoid(pdf, y, initial=0.0)
    return DistributionGrid("obf", n, y, pdf, np.clip(cdf, 0.0, 1.0))


def obf_mean_sum_rate(params, spec=None):
    """Average sum rate in nats over the r scheduled users."""
    spec = spec or MARGINAL_SPEC
    total = integrate_semi_infinite(lambda y: math.log1p(y) * obf_marginal_pdf(1, y, params), 0.0, spec)
    y_max = upper_limit(params, spec)
    for n in range(2, params.r + 1):
        total += integrate_1d(lambda y: math.log1p(y) * obf_marginal_pdf(n, y, params, spec), 0.0, y_max, spec)
    return total
