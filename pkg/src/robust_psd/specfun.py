"""Scalar special functions for the quantile bias and variance closed forms.

Everything here is plain-float math with explicit domain checks: digamma and
trigamma via a short asymptotic polynomial plus an upward recurrence, partial
harmonic sums, and the log-beta function.
"""
from __future__ import annotations

import math

# Euler-Mascheroni constant, 20 significant digits.
EULER_GAMMA = 0.57721566490153286061

# Arguments below this are lifted with the recurrence before applying the
# asymptotic polynomial; at 10 the truncation error of the five-term series is
# below 5e-11 for both functions, which keeps recurrence residuals under 1e-10.
_LIFT_THRESHOLD = 10.0


def _check_positive(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    if x <= 0.0:
        raise ValueError(f"{name} must be positive, got {x!r}")
    return x


def digamma(x: float) -> float:
    """Logarithmic derivative of the gamma function for real x > 0.

    Uses psi(x) = psi(x+1) - 1/x to lift small arguments, then the asymptotic
    expansion ln x - 1/(2x) - 1/(12x^2) + 1/(120x^4) - 1/(252x^6).
    Absolute error is below 1e-10 on [0.5, 1e6].
    """
    x = _check_positive(x, "x")
    acc = 0.0
    while x < _LIFT_THRESHOLD:
        acc -= 1.0 / x
        x += 1.0
    r = 1.0 / x
    r2 = r * r
    return acc + math.log(x) - 0.5 * r - r2 * (
        1.0 / 12.0 - r2 * (1.0 / 120.0 - r2 * (1.0 / 252.0))
    )


def trigamma(x: float) -> float:
    """Derivative of digamma for real x > 0.

    Uses psi1(x) = psi1(x+1) + 1/x^2 to lift small arguments, then the
    asymptotic expansion 1/x + 1/(2x^2) + 1/(6x^3) - 1/(30x^5) + 1/(42x^7).
    Absolute error is below 1e-10 on [0.5, 1e6].
    """
    x = _check_positive(x, "x")
    acc = 0.0
    while x < _LIFT_THRESHOLD:
        acc += 1.0 / (x * x)
        x += 1.0
    r = 1.0 / x
    r2 = r * r
    return acc + r + 0.5 * r2 + r * r2 * (
        1.0 / 6.0 - r2 * (1.0 / 30.0 - r2 * (1.0 / 42.0))
    )


def harmonic_partial(a: int, b: int) -> float:
    """Sum of 1/k for k = a..b inclusive; zero when b == a - 1.

    Summed in ascending k so identical inputs always produce identical floats.
    """
    a = int(a)
    b = int(b)
    if a < 1:
        raise ValueError(f"lower limit must be >= 1, got {a}")
    if b < a - 1:
        raise ValueError(f"upper limit must be >= {a - 1}, got {b}")
    total = 0.0
    for k in range(a, b + 1):
        total += 1.0 / k
    return total


def reciprocal_square_partial(a: int, b: int) -> float:
    """Sum of 1/k^2 for k = a..b inclusive; zero when b == a - 1."""
    a = int(a)
    b = int(b)
    if a < 1:
        raise ValueError(f"lower limit must be >= 1, got {a}")
    if b < a - 1:
        raise ValueError(f"upper limit must be >= {a - 1}, got {b}")
    total = 0.0
    for k in range(a, b + 1):
        total += 1.0 / (k * k)
    return total


def log_beta(alpha: float, beta: float) -> float:
    """Natural log of the beta function B(alpha, beta), both arguments > 0."""
    alpha = _check_positive(alpha, "alpha")
    beta = _check_positive(beta, "beta")
    return math.lgamma(alpha) + math.lgamma(beta) - math.lgamma(alpha + beta)
