"""Closed-form bias and variance of sample quantiles of exponential variates.

Periodogram values of white Gaussian noise at interior frequency bins are
independent exponential random variables, so the expectation of the sample
quantile over K segments follows from exponential order statistics:

    E{P_(i) of K} = P * sum_{k=K-i+1}^{K} 1/k

The bias factor b(q, K) used to debias the quantile estimate comes in four
flavors: the alternating series (median of an odd count only), partial
harmonic sums over a resolved (alpha, beta) case, a digamma difference that
needs no integer rounding, and the large-K limit -ln(1-q). Variances follow
from the analogous 1/k^2 sums (trigamma differences).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import specfun

BIAS_METHODS = ("none", "allen", "harmonic", "digamma", "limit")

# Tolerance for deciding that (k-1)*q hits an integer exactly.
_INTEGER_TOL = 1e-9


def round_half_away(x: float) -> int:
    """Round to the nearest integer, ties away from zero."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot round non-finite value {x!r}")
    return int(math.floor(x + 0.5)) if x >= 0.0 else int(math.ceil(x - 0.5))


def _check_q(q: float, *, allow_one: bool = True) -> float:
    q = float(q)
    if not math.isfinite(q) or q < 0.0 or q > 1.0 or (q == 1.0 and not allow_one):
        interval = "[0, 1]" if allow_one else "[0, 1)"
        raise ValueError(f"quantile must be in {interval}, got {q!r}")
    return q


@dataclass(frozen=True)
class QuantileSpec:
    """Resolved order-statistic placement of the quantile q among k values.

    alpha counts values expected above the target, beta values below;
    ``case`` records whether q lands exactly on an order statistic
    (``exact_match``, alpha + beta = k - 1) or between two
    (``between``, alpha + beta = k).
    """

    q: float
    k_eff: float
    alpha: int
    beta: int
    case: str


def resolve_case(k: float, q: float) -> QuantileSpec:
    """Resolve (k, q) into integer order-statistic parameters.

    k may be non-integer (an effective segment count); it is rounded half away
    from zero first. The quantile lands exactly on an order statistic iff
    (k-1)*q is integral; otherwise alpha = round(k*(1-q)) with beta taking the
    remainder so that alpha + beta = k always holds.
    """
    q = _check_q(q)
    k = float(k)
    if not math.isfinite(k) or k < 1.0:
        raise ValueError(f"segment count must be >= 1, got {k!r}")
    k_int = round_half_away(k)
    pos = (k_int - 1) * q
    if abs(pos - round(pos)) <= _INTEGER_TOL:
        beta = int(round(pos))
        alpha = (k_int - 1) - beta
        case = "exact_match"
    else:
        alpha = round_half_away(k_int * (1.0 - q))
        alpha = min(max(alpha, 0), k_int)
        beta = k_int - alpha
        case = "between"
    return QuantileSpec(q=q, k_eff=float(k_int), alpha=alpha, beta=beta, case=case)


def alternating_harmonic(n: int) -> float:
    """Partial sum of the alternating harmonic series, 1 - 1/2 + ... +- 1/n.

    Defined for any n >= 1; the strict median-bias use lives in bias_allen.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    total = 0.0
    for j in range(1, n + 1):
        total += 1.0 / j if j % 2 == 1 else -1.0 / j
    return total


def bias_allen(k: int) -> float:
    """Median bias factor for an odd number of segments (alternating series)."""
    k = int(k)
    if k < 1:
        raise ValueError(f"segment count must be >= 1, got {k}")
    if k % 2 == 0:
        raise ValueError(f"this bias factor requires an odd segment count, got {k}")
    return alternating_harmonic(k)


def bias_harmonic(spec: QuantileSpec) -> float:
    """Bias factor sum_{k=alpha+1}^{alpha+beta+1} 1/k for a resolved spec."""
    return specfun.harmonic_partial(spec.alpha + 1, spec.alpha + spec.beta + 1)


def bias_digamma(k: float, q: float) -> float:
    """Bias factor psi(k+2) - psi(k(1-q)+1); no integer rounding required."""
    q = _check_q(q, allow_one=False)
    k = float(k)
    if not math.isfinite(k) or k < 1.0:
        raise ValueError(f"segment count must be >= 1, got {k!r}")
    return specfun.digamma(k + 2.0) - specfun.digamma(k * (1.0 - q) + 1.0)


def bias_limit(q: float) -> float:
    """Large-K limit of the bias factor, -ln(1-q)."""
    q = _check_q(q, allow_one=False)
    return -math.log1p(-q)


def bias_factor(method: str, k_eff: float, q: float) -> float:
    """Dispatch a bias factor by method name; 'none' returns 1."""
    if method == "none":
        return 1.0
    if method == "limit":
        return bias_limit(q)
    if method == "digamma":
        return bias_digamma(k_eff, q)
    if method == "harmonic":
        return bias_harmonic(resolve_case(k_eff, q))
    if method == "allen":
        if float(q) != 0.5:
            raise ValueError("the alternating-series factor applies to q = 0.5 only")
        return bias_allen(round_half_away(k_eff))
    raise ValueError(f"unknown bias method {method!r}")


def variance_theory(spec: QuantileSpec, p: float) -> float:
    """Variance of the debiased quantile estimate from a resolved spec.

    Equals (p^2/b^2) * (psi1(alpha+1) - psi1(alpha+beta+2)); for the integer
    parameters of a resolved spec the trigamma difference is computed as the
    exact partial sum of 1/k^2.
    """
    p = float(p)
    if not math.isfinite(p) or p <= 0.0:
        raise ValueError(f"spectral level must be positive, got {p!r}")
    b = bias_harmonic(spec)
    if b <= 0.0:
        raise ValueError("degenerate spec: bias factor is not positive")
    s2 = specfun.reciprocal_square_partial(spec.alpha + 1, spec.alpha + spec.beta + 1)
    return p * p * s2 / (b * b)


def variance_digamma(k: float, q: float, p: float) -> float:
    """Variance form for non-integer effective counts.

    (p^2/b^2) * (psi1(k(1-q)+1) - psi1(k+2)) with b the digamma bias factor.
    """
    q = _check_q(q, allow_one=False)
    k = float(k)
    if not math.isfinite(k) or k < 1.0:
        raise ValueError(f"segment count must be >= 1, got {k!r}")
    p = float(p)
    if not math.isfinite(p) or p <= 0.0:
        raise ValueError(f"spectral level must be positive, got {p!r}")
    b = bias_digamma(k, q)
    spread = specfun.trigamma(k * (1.0 - q) + 1.0) - specfun.trigamma(k + 2.0)
    return p * p * spread / (b * b)


def variance_limit(k: float, q: float, p: float) -> float:
    """Limiting variance (p/b)^2 * q / (k(1-q)) with b = -ln(1-q)."""
    q = _check_q(q, allow_one=False)
    if q <= 0.0:
        raise ValueError("limiting variance needs 0 < q < 1")
    k = float(k)
    if not math.isfinite(k) or k < 1.0:
        raise ValueError(f"segment count must be >= 1, got {k!r}")
    p = float(p)
    if not math.isfinite(p) or p <= 0.0:
        raise ValueError(f"spectral level must be positive, got {p!r}")
    b = bias_limit(q)
    return (p / b) ** 2 * q / (k * (1.0 - q))


def order_statistic_mean_numeric(i: int, k: int) -> float:
    """Mean of the i-th order statistic of k unit exponentials, by quadrature.

    Independent numerical route used to validate the harmonic-sum closed form:
    -(1/B(k-i+1, i)) * int_0^1 t^(k-i) (1-t)^(i-1) ln(t) dt.
    """
    i = int(i)
    k = int(k)
    if k < 1 or k > 100:
        raise ValueError(f"segment count must be in [1, 100], got {k}")
    if not 1 <= i <= k:
        raise ValueError(f"order index must be in [1, {k}], got {i}")
    a = k - i
    b = i - 1
    log_b = specfun.log_beta(a + 1.0, b + 1.0)

    def integrand(t: float) -> float:
        return t**a * (1.0 - t) ** b * math.log(t)

    value, _err = quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=300)
    return -math.exp(-log_b) * value


def scan_variance_optimum(
    k: float, q_grid: np.ndarray | None = None, p: float = 1.0
) -> tuple[float, np.ndarray]:
    """Scan the limiting variance over a quantile grid; return (q_opt, table).

    The table has rows (q, limiting variance). The argmin is grid-resolved;
    on the default centesimal grid it sits at q = 0.80 independently of k.
    """
    if q_grid is None:
        q_grid = np.round(np.arange(0.01, 1.00, 0.01), 10)
    q_grid = np.asarray(q_grid, dtype=np.float64)
    if q_grid.size == 0:
        raise ValueError("quantile grid is empty")
    values = np.array([variance_limit(k, q, p) for q in q_grid])
    table = np.column_stack([q_grid, values])
    q_opt = float(q_grid[int(np.argmin(values))])
    return q_opt, table
