# algorithms/analytic_olbf.py
"""SINR distributions of OLBF.

A user's SINRs v_1, ..., v_M on the fixed beam set are mapped to
z_n = v_n / (1 + v_n); t_n denotes the value of z_n for the n-th scheduled
user. With a = M/P the unordered density lives on z_2 + ... + z_M <= z_1 < 1
and every CDF below is an inclusion-exclusion sum over subsets of the tail
thresholds t_2, ..., t_n.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import cumulative_trapezoid

from algorithms.analytic_obf import MARGINAL_SPEC, sinr_grid, upper_limit
from algorithms.errors import DomainError, ProbabilityRangeError, RegionError
from algorithms.numerics import (
    DEFAULT_SPEC,
    exp_shifted_gamma,
    integrate_1d,
    integrate_nested,
    regularized_lower_gamma,
)
from data.experiment import DistributionGrid

logger = logging.getLogger(__name__)

CLAMP_TOL = 1e-9
MARGINAL_MAX_RANK = 3
SEGMENTS = ("head", "split")
CDF_METHODS = ("auto", "closed", "recursion", "exact")
XI_METHODS = ("auto", "exact")


@dataclass(frozen=True)
class OlbfParams:
    M: int
    K: int
    P: float

    def __post_init__(self):
        if self.M < 2:
            raise ValueError(f"M must be at least 2, got {self.M}")
        if self.K < self.M:
            raise ValueError(f"K must be at least M={self.M}, got {self.K}")
        if not self.P > 0:
            raise ValueError(f"P must be positive, got {self.P!r}")

    @classmethod
    def from_system(cls, params):
        return cls(params.M, params.K, params.P)

    @property
    def a(self):
        return self.M / self.P


@dataclass(frozen=True)
class CdfSegment:
    """CDF value tagged with the branch t_1 >= sum(tail) ("head") or not ("split")."""

    segment: str
    value: float

    def __post_init__(self):
        if self.segment not in SEGMENTS:
            raise ValueError(f"segment must be one of {SEGMENTS}, got {self.segment!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ProbabilityRangeError(self.value)


def v_to_z(v):
    if v < 0:
        raise DomainError(f"SINR must be nonnegative, got {v!r}")
    if math.isinf(v):
        return 1.0
    return v / (1.0 + v)


def z_to_v(z):
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"z must lie in [0, 1], got {z!r}")
    if z == 1.0:
        return math.inf
    return z / (1.0 - z)


def _check_count(n, params):
    if not 1 <= n <= params.M:
        raise DomainError(f"n must lie in [1, M={params.M}], got {n}")


def _check_unit(ts, name="t"):
    ts = tuple(float(t) for t in ts)
    if any(not 0.0 <= t <= 1.0 for t in ts):
        raise RegionError(f"{name} values must lie in [0, 1], got {ts}")
    return ts


def _check_region(ts):
    ts = _check_unit(ts)
    if any(t > ts[0] for t in ts[1:]):
        raise RegionError(f"t values must satisfy t_j <= t_1, got {ts}")
    return ts


def _clamp_probability(value):
    if -CLAMP_TOL <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + CLAMP_TOL:
        return 1.0
    if not 0.0 <= value <= 1.0:
        raise ProbabilityRangeError(value)
    return value


def _subsets(values):
    """(sign, sum) for every subset, the empty one first."""
    for size in range(len(values) + 1):
        for chosen in itertools.combinations(values, size):
            yield (-1) ** size, math.fsum(chosen)


def _kernel(z, params):
    """A(z) = a^M exp(-a z / (1 - z)) / (1 - z)^(M + 1)."""
    if z >= 1.0:
        return 0.0
    M, a = params.M, params.a
    return math.exp(M * math.log(a) - a * z / (1.0 - z) - (M + 1) * math.log1p(-z))


def _truncated_power(w, m):
    if w < 0:
        return 0.0
    return w ** m / math.factorial(m)


def _eg(params, s, x):
    """e^a Gamma(s, x)."""
    return exp_shifted_gamma(s, x, params.a)


def _arg(params, t):
    return math.inf if t >= 1.0 else params.a / (1.0 - t)


def olbf_x_to_v(xs, params):
    """Per-beam SINRs of one user from x_j = |h^H w_j|^2."""
    xs = np.asarray(xs, dtype=float)
    if xs.shape != (params.M,):
        raise ValueError(f"{params.M} values expected, got shape {xs.shape}")
    if np.any(xs < 0):
        raise RegionError("x values must be nonnegative")
    a = params.a
    total = float(np.sum(xs))
    vs = xs / (total - xs + a)
    vs[0] = total / a
    return vs


def olbf_v_to_x(vs, params):
    """Inverse of olbf_x_to_v together with |det J| of the inverse map."""
    vs = np.asarray(vs, dtype=float)
    if vs.shape != (params.M,):
        raise ValueError(f"{params.M} values expected, got shape {vs.shape}")
    if np.any(vs < 0):
        raise RegionError("v values must be nonnegative")
    a, M = params.a, params.M
    scale = a * (1.0 + vs[0])
    xs = np.empty(M)
    xs[1:] = scale * vs[1:] / (1.0 + vs[1:])
    xs[0] = a * vs[0] - float(np.sum(xs[1:]))
    if xs[0] < -1e-12 * max(1.0, a * vs[0]):
        raise RegionError(f"v values violate z_2 + ... + z_M <= z_1: {tuple(vs)}")
    xs[0] = max(xs[0], 0.0)
    det = a ** M * (1.0 + vs[0]) ** (M - 1) / np.prod((1.0 + vs[1:]) ** 2)
    return xs, float(det)


def olbf_unordered_pdf_z(zs, params):
    """Joint density of (z_1, ..., z_n) for a user under a random beam set."""
    zs = tuple(float(z) for z in zs)
    n = len(zs)
    _check_count(n, params)
    z1, rest = zs[0], math.fsum(zs[1:])
    if z1 >= 1.0 or any(z < 0 for z in zs) or rest > z1:
        return 0.0
    return _kernel(z1, params) * _truncated_power(z1 - rest, params.M - n)


def olbf_unordered_pdf_v(vs, params):
    vs = tuple(float(v) for v in vs)
    n = len(vs)
    _check_count(n, params)
    if any(v < 0 for v in vs):
        return 0.0
    if n == params.M:
        try:
            _, det = olbf_v_to_x(vs, params)
        except RegionError:
            return 0.0
        return math.exp(-params.a * vs[0]) * det
    zs = [v_to_z(v) for v in vs]
    return olbf_unordered_pdf_z(zs, params) / math.prod((1.0 + v) ** 2 for v in vs)


def _q(m, c, h, params):
    """Integral of A(z) (z - c)^m / m! over z in [c, h]."""
    if c >= h:
        return 0.0
    M, a = params.M, params.a
    lower, upper = _arg(params, c), _arg(params, h)
    terms = [
        special.comb(m, i, exact=True) * (-1) ** i * (1.0 - c) ** (m - i) * a ** i
        * (_eg(params, M - i, lower) - _eg(params, M - i, upper))
        for i in range(m + 1)
    ]
    return math.fsum(terms) / math.factorial(m)


def _f_z1(t1, params):
    if t1 >= 1.0:
        return 1.0
    return regularized_lower_gamma(params.M, params.a * t1 / (1.0 - t1))


def _f_z2(t1, t2, params):
    """Pr(z_1 <= t_1, z_2 <= t_2) in closed form, t_2 <= t_1."""
    if t2 <= 0.0:
        return 0.0
    M, a = params.M, params.a
    head_arg, tail_arg = _arg(params, t1), _arg(params, t2)
    terms = []
    for i in range(M - 1):
        order = M - i - 1
        head = -_eg(params, M - i, head_arg) * (1.0 - (1.0 - t2) ** order) / order
        inner = math.fsum(
            (_eg(params, i + j + 1 - M, a) - _eg(params, i + j + 1 - M, tail_arg)) / math.factorial(j)
            for j in range(M - i)
        )
        tail = math.gamma(M - i) * a ** order * inner
        terms.append(special.comb(M - 2, i, exact=True) * (-1) ** i * a ** i * (head + tail))
    return math.fsum(terms) / math.gamma(M - 1)


def eta(x, t1, t3, params):
    """Integral of the third-user density over z_2 in [0, x] with z_3 = t_3."""
    if x <= 0.0:
        return 0.0
    M, a = params.M, params.a
    if M < 3:
        raise DomainError(f"eta needs M >= 3, got {M}")
    head_arg, start_arg, stop_arg = _arg(params, t1), _arg(params, t3), _arg(params, x + t3)
    reach = max(0.0, 1.0 - x - t3)
    terms = []
    for i in range(M - 2):
        order = M - i - 2
        head = -_eg(params, M - i, head_arg) * ((1.0 - t3) ** order - reach ** order) / order
        inner = math.fsum(
            (_eg(params, i + j + 2 - M, start_arg) - _eg(params, i + j + 2 - M, stop_arg)) / math.factorial(j)
            for j in range(M - i)
        )
        tail = math.gamma(M - i) * a ** order * inner
        terms.append(special.comb(M - 3, i, exact=True) * (-1) ** i * a ** i * (head + tail))
    return math.fsum(terms) / math.gamma(M - 2)


def _xi_exact(ts, params):
    t1, tk = ts[0], ts[-1]
    return math.fsum(sign * _q(params.M - 2, tk + shift, t1, params) for sign, shift in _subsets(ts[1:-1]))


def _xi_quadrature(ts, params, spec):
    t1, t2, t3, t4 = ts
    M = params.M
    return integrate_nested(
        lambda z2, z3: _q(M - 4, z2 + z3 + t4, t1, params),
        [(0.0, min(t2, t1 - t4)), (0.0, lambda z2: min(t3, t1 - t4 - z2))],
        spec,
    )


def olbf_xi(k, ts, params, spec=None, method="auto"):
    """Density factor of the k-th scheduled user: z_k = t_k, z_j <= t_j for j < k."""
    if method not in XI_METHODS:
        raise ValueError(f"method must be one of {XI_METHODS}, got {method!r}")
    _check_count(k, params)
    ts = _check_region(ts)
    if len(ts) != k:
        raise ValueError(f"{k} values expected, got {len(ts)}")
    M, t1 = params.M, ts[0]
    if k == 1:
        return _kernel(t1, params) * _truncated_power(t1, M - 1)
    if method == "exact" or k >= 5:
        value = _xi_exact(ts, params)
    elif k == 2:
        value = _q(M - 2, ts[1], t1, params)
    elif k == 3:
        t2, t3 = ts[1], ts[2]
        value = eta(t2 if t1 >= t2 + t3 else t1 - t3, t1, t3, params)
    else:
        value = _xi_quadrature(ts, params, spec or DEFAULT_SPEC)
    return max(0.0, value)


def _f_z3_head(t1, t2, t3, params):
    """Pr(z_1 <= t_1, z_2 <= t_2, z_3 <= t_3) in closed form, t_1 >= t_2 + t_3."""
    M, a = params.M, params.a
    corners = ((1, 1.0), (-1, 1.0 - t2), (-1, 1.0 - t3), (1, max(0.0, 1.0 - t2 - t3)))
    head_arg = _arg(params, t1)
    terms = []
    for i in range(M):
        order = M - i - 1
        weights = [(sign * base ** order, base) for sign, base in corners]
        edges = math.fsum(w * _eg(params, M - i, a / base) for w, base in weights if base > 0.0)
        bracket = math.fsum(w for w, _ in weights)
        terms.append(
            special.comb(M - 1, i, exact=True) * (-1) ** i * a ** i
            * (edges - bracket * _eg(params, M - i, head_arg))
        )
    return math.fsum(terms) / math.gamma(M)


def _cdf_closed(t1, tail, params):
    n = len(tail) + 1
    if n == 1:
        return _f_z1(t1, params)
    if n == 2:
        return _f_z2(t1, tail[0], params)
    if n == 3:
        t2, t3 = tail
        if t1 >= t2 + t3:
            return _f_z3_head(t1, t2, t3, params)
        return _f_z2(t1, t2, params) + _f_z2(t1, t3, params) - _f_z1(t1, params)
    raise DomainError(f"closed-form CDF covers n <= 3, got {n}")


def _cdf_exact(t1, tail, params):
    return math.fsum(sign * _q(params.M - 1, shift, t1, params) for sign, shift in _subsets(tail))


def _w_shape(z1, thresholds, m):
    """Integrand of the CDF in z_1, divided by A(z_1)."""
    if z1 >= math.fsum(thresholds):
        return math.fsum(sign * _truncated_power(z1 - shift, m) for sign, shift in _subsets(thresholds))
    total = _truncated_power(z1, m)
    for size in range(1, len(thresholds)):
        for chosen in itertools.combinations(thresholds, size):
            total += (-1) ** size * _w_bar_shape(z1, chosen, m)
    return total


def _w_bar_shape(z1, thresholds, m):
    if z1 < math.fsum(thresholds):
        return 0.0
    return math.fsum(
        (-1) ** size * _w_shape(z1, chosen, m)
        for size in range(len(thresholds) + 1)
        for chosen in itertools.combinations(thresholds, size)
    )


def _cdf_recursion(t1, tail, params, spec):
    m = params.M - 1
    cdf_memo, survival_memo = {}, {}

    def cdf(subset):
        if subset not in cdf_memo:
            thresholds = tuple(tail[j] for j in subset)
            if not subset:
                value = _f_z1(t1, params)
            elif t1 >= math.fsum(thresholds):
                breaks = [shift for _, shift in _subsets(thresholds)]
                value = integrate_1d(
                    lambda z1: _kernel(z1, params) * _w_shape(z1, thresholds, m),
                    0.0, t1, spec, points=breaks,
                )
            else:
                value = math.fsum(
                    (-1) ** size * survival(chosen)
                    for size in range(len(subset))
                    for chosen in itertools.combinations(subset, size)
                )
            cdf_memo[subset] = value
        return cdf_memo[subset]

    def survival(subset):
        if subset not in survival_memo:
            if t1 < math.fsum(tail[j] for j in subset):
                value = 0.0
            else:
                value = math.fsum(
                    (-1) ** size * cdf(chosen)
                    for size in range(len(subset) + 1)
                    for chosen in itertools.combinations(subset, size)
                )
            survival_memo[subset] = value
        return survival_memo[subset]

    return cdf(tuple(range(len(tail))))


def olbf_cdf_z(n, ts, params, method="auto", spec=None):
    """Pr(z_1 <= t_1, ..., z_n <= t_n) for one user.

    method "closed" covers n <= 3, "recursion" integrates over z_1 segment by
    segment for any n, "exact" sums truncated-power integrals in closed form.
    "auto" takes the closed form when it exists.
    """
    if method not in CDF_METHODS:
        raise ValueError(f"method must be one of {CDF_METHODS}, got {method!r}")
    _check_count(n, params)
    ts = _check_unit(ts)
    if len(ts) != n:
        raise ValueError(f"{n} values expected, got {len(ts)}")
    t1 = ts[0]
    # z_j <= z_1 almost surely, so thresholds above t_1 do not bind
    tail = tuple(min(t, t1) for t in ts[1:])
    segment = "head" if t1 >= math.fsum(tail) else "split"
    if method == "auto":
        method = "closed" if n <= 3 else "recursion"
    if method == "closed":
        value = _cdf_closed(t1, tail, params)
    elif method == "exact":
        value = _cdf_exact(t1, tail, params)
    else:
        if n >= 4:
            logger.warning("numeric fallback: n=%d CDF by segment-wise integration over z_1", n)
        value = _cdf_recursion(t1, tail, params, spec or DEFAULT_SPEC)
    return CdfSegment(segment, _clamp_probability(value))


def olbf_survival_z(n, ts, params, method="auto", spec=None):
    """Pr(z_1 <= t_1, z_2 > t_2, ..., z_n > t_n)."""
    _check_count(n, params)
    ts = _check_unit(ts)
    if len(ts) != n:
        raise ValueError(f"{n} values expected, got {len(ts)}")
    t1, tail = ts[0], ts[1:]
    if t1 < math.fsum(tail):
        return 0.0
    total = math.fsum(
        (-1) ** size * olbf_cdf_z(size + 1, (t1,) + chosen, params, method, spec).value
        for size in range(n)
        for chosen in itertools.combinations(tail, size)
    )
    return _clamp_probability(total)


def olbf_joint_pdf_t(ts, params, spec=None):
    """Joint density of (t_1, ..., t_n) for the first n scheduled users."""
    ts = _check_unit(ts)
    n = len(ts)
    _check_count(n, params)
    if any(t > ts[0] for t in ts[1:]):
        return 0.0
    product = 1.0
    for k in range(1, n + 1):
        product *= olbf_xi(k, ts[:k], params, spec)
        if product == 0.0:
            return 0.0
    K = params.K
    cdf = olbf_cdf_z(n, ts, params, spec=spec).value
    count = math.exp(special.gammaln(K + 1) - special.gammaln(K - n + 1))
    return count * cdf ** (K - n) * product


def olbf_joint_pdf_y(ys, params, spec=None):
    ys = tuple(float(y) for y in ys)
    if any(y < 0 for y in ys):
        raise RegionError(f"SINRs must be nonnegative, got {ys}")
    ts = [v_to_z(y) for y in ys]
    return olbf_joint_pdf_t(ts, params, spec) / math.prod((1.0 + y) ** 2 for y in ys)


def _check_marginal_rank(n, params):
    _check_count(n, params)
    if n > MARGINAL_MAX_RANK:
        raise DomainError(f"marginal density is evaluated for n <= {MARGINAL_MAX_RANK}, got {n}")


def olbf_marginal_pdf_t(n, t, params, spec=None):
    _check_marginal_rank(n, params)
    if not 0.0 < t < 1.0:
        return 0.0
    spec = spec or MARGINAL_SPEC
    K = params.K
    if n == 1:
        return K * _f_z1(t, params) ** (K - 1) * olbf_xi(1, (t,), params)
    if n == 2:
        return integrate_1d(lambda t1: olbf_joint_pdf_t((t1, t), params, spec), t, 1.0, spec)
    inner_spec = spec.tightened(1)

    def inner(t1):
        # kink where t_1 = t_2 + t_3
        return integrate_1d(
            lambda t2: olbf_joint_pdf_t((t1, t2, t), params, spec), 0.0, t1, inner_spec, points=(t1 - t,)
        )

    return integrate_1d(inner, t, 1.0, spec)


def olbf_marginal_pdf(n, y, params, spec=None):
    if y < 0:
        return 0.0
    return olbf_marginal_pdf_t(n, v_to_z(y), params, spec) / (1.0 + y) ** 2


def olbf_marginal_cdf(n, y, params, spec=None):
    if y <= 0:
        return 0.0
    t = v_to_z(y)
    if n == 1:
        return _f_z1(t, params) ** params.K
    return min(1.0, integrate_1d(lambda s: olbf_marginal_pdf_t(n, s, params, spec), 0.0, t, spec or MARGINAL_SPEC))


def olbf_distribution(n, params, count=200, spec=None):
    """Marginal PDF/CDF of the n-th scheduled SINR, computed in t and mapped back to y."""
    spec = spec or MARGINAL_SPEC
    y = sinr_grid(params.M / params.a, upper_limit(params, spec), count)
    t = y / (1.0 + y)
    pdf = np.array([olbf_marginal_pdf_t(n, s, params, spec) for s in t]) / (1.0 + y) ** 2
    if n == 1:
        cdf = np.array([_f_z1(s, params) ** params.K for s in t])
    else:
        cdf = cumulative_trapezoid(pdf, y, initial=0.0)
    return DistributionGrid("olbf", n, y, pdf, np.clip(cdf, 0.0, 1.0))


def olbf_mean_sum_rate(params, spec=None):
    """Average sum rate in nats over the M scheduled users."""
    if params.M > MARGINAL_MAX_RANK:
        raise DomainError(f"mean sum rate needs marginals up to n={params.M}; supported up to {MARGINAL_MAX_RANK}")
    spec = spec or MARGINAL_SPEC
    return math.fsum(
        integrate_1d(lambda t: -math.log1p(-t) * olbf_marginal_pdf_t(n, t, params, spec), 0.0, 1.0, spec)
        for n in range(1, params.M + 1)
    )
