"""Special functions and unit conversions with explicit accuracy targets.

Everything here is a pure function over plain floats; the rest of the
package builds on these primitives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

# Euler-Mascheroni constant, 20 significant digits.
EULER_MASCHERONI = 0.57721566490153286061

_MAX_ITERATIONS = 500


class IntegrationError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class AccuracySpec:
    """Accuracy contract shared by all quadrature-based oracles."""

    relative_tolerance: float = 1e-10
    max_quadrature_subdivisions: int = 200

    def __post_init__(self):
        if not 0.0 < self.relative_tolerance <= 1e-8:
            raise ValueError("relative_tolerance must be in (0, 1e-8]")
        if self.max_quadrature_subdivisions < 1:
            raise ValueError("max_quadrature_subdivisions must be positive")


def log_gamma(s: float) -> float:
    """Natural log of the gamma function for positive real argument."""
    if s <= 0.0:
        raise ValueError(f"log_gamma requires s > 0, got {s}")
    return math.lgamma(s)


def _lower_regularized_series(s: float, x: float) -> float:
    # Power series for P(s, x); converges fast for x < s + 1.
    if x == 0.0:
        return 0.0
    ap = s
    delta = 1.0 / s
    total = delta
    for _ in range(_MAX_ITERATIONS):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * 1e-17:
            return total * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise IntegrationError(f"incomplete-gamma series did not converge (s={s}, x={x})")


def _upper_regularized_contfrac(s: float, x: float) -> float:
    # Lentz continued fraction for Q(s, x); converges fast for x > s + 1.
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_ITERATIONS + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        factor = d * c
        h *= factor
        if abs(factor - 1.0) < 1e-17:
            return h * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise IntegrationError(
        f"incomplete-gamma continued fraction did not converge (s={s}, x={x})"
    )


def regularized_lower_gamma(s: float, x: float) -> float:
    """P(s, x) = gamma(s, x) / Gamma(s)."""
    if s <= 0.0:
        raise ValueError(f"requires s > 0, got {s}")
    if x < 0.0:
        raise ValueError(f"requires x >= 0, got {x}")
    if x < s + 1.0:
        return _lower_regularized_series(s, x)
    return 1.0 - _upper_regularized_contfrac(s, x)


def regularized_upper_gamma(s: float, x: float) -> float:
    """Q(s, x) = Gamma(s, x) / Gamma(s)."""
    if s <= 0.0:
        raise ValueError(f"requires s > 0, got {s}")
    if x < 0.0:
        raise ValueError(f"requires x >= 0, got {x}")
    if x < s + 1.0:
        return 1.0 - _lower_regularized_series(s, x)
    return _upper_regularized_contfrac(s, x)


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Unnormalized upper incomplete gamma Gamma(s, x), non-integer s allowed."""
    return regularized_upper_gamma(s, x) * math.exp(math.lgamma(s))


def digamma_integer(n: int) -> float:
    """psi(n) for integer n >= 1 via the harmonic-sum identity."""
    if n < 1 or int(n) != n:
        raise ValueError(f"digamma_integer requires an integer n >= 1, got {n}")
    return math.fsum(1.0 / k for k in range(1, int(n))) - EULER_MASCHERONI


def dbm_to_watts(p_dbm: float) -> float:
    """Convert a power level from dBm to watts."""
    if not math.isfinite(p_dbm):
        raise ValueError(f"dBm value must be finite, got {p_dbm}")
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def integrate_adaptive(f, a: float, b: float, acc: AccuracySpec = AccuracySpec()) -> float:
    """Definite integral of f on [a, b] to acc.relative_tolerance."""
    if a > b:
        raise ValueError(f"requires a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    value, _abserr, info, *rest = integrate.quad(
        f,
        a,
        b,
        epsabs=1e-300,
        epsrel=acc.relative_tolerance,
        limit=acc.max_quadrature_subdivisions,
        full_output=1,
    )
    if rest:  # scipy appends a message (and possibly more) on failure
        raise IntegrationError(f"quadrature on [{a}, {b}] failed: {rest[0]}")
    return value
