"""Scalar special functions used by the generalized Gaussian model.

The regularized lower incomplete gamma function P(r, z) and its partial
derivative with respect to the order r are the workhorses here: the model
CDF is an affine map of P, and the shape-parameter gradient of the CDF
needs dP/dr.  Everything in this module is a pure function of floats and
is safe to call concurrently.
"""

from __future__ import annotations

import math
import warnings

from .errors import AccuracyWarning, DomainError

MAX_SERIES_TERMS = 500
MAX_CF_STEPS = 300
REL_TOL = 1e-16

_TINY = 1e-300


def _require_finite(name: str, x: float) -> float:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    x = _require_finite("x", x)
    if x <= 0.0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def erf(x: float) -> float:
    """Error function, total on finite reals."""
    return math.erf(_require_finite("x", x))


def _validate_gamma_args(r: float, z: float) -> tuple[float, float]:
    r = _require_finite("r", r)
    z = _require_finite("z", z)
    if r <= 0.0:
        raise DomainError(f"order r must be positive, got {r!r}")
    if z < 0.0:
        raise DomainError(f"argument z must be nonnegative, got {z!r}")
    return r, z


def _lower_series(r: float, z: float) -> tuple[float, float]:
    """Power-series sum S = sum_n z^n / (r (r+1) ... (r+n)) and its r-derivative.

    Valid (fast-converging) for z < r + 1.
    """
    term = 1.0 / r
    harmonic = 1.0 / r
    total = term
    dtotal = -term * harmonic
    for n in range(1, MAX_SERIES_TERMS + 1):
        term *= z / (r + n)
        harmonic += 1.0 / (r + n)
        total += term
        dtotal -= term * harmonic
        if abs(term) < abs(total) * REL_TOL:
            return total, dtotal
    warnings.warn(
        f"incomplete gamma series did not converge in {MAX_SERIES_TERMS} terms "
        f"(r={r!r}, z={z!r})",
        AccuracyWarning,
        stacklevel=3,
    )
    return total, dtotal


def _upper_cf(r: float, z: float) -> float:
    """Continued fraction for Q(r, z) = 1 - P(r, z), valid for z >= r + 1."""
    b = z + 1.0 - r
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_CF_STEPS + 1):
        an = -i * (i - r)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < REL_TOL:
            break
    else:
        warnings.warn(
            f"incomplete gamma continued fraction did not converge in "
            f"{MAX_CF_STEPS} steps (r={r!r}, z={z!r})",
            AccuracyWarning,
            stacklevel=3,
        )
    return math.exp(-z + r * math.log(z) - math.lgamma(r)) * h


def reg_gamma_pair(r: float, z: float) -> tuple[float, float]:
    """(P(r, z), Q(r, z)) with the dominant branch computed natively.

    For z < r + 1 the series gives P directly; otherwise the continued
    fraction gives Q directly, so the tail that is about to underflow is
    never formed as a difference of two near-equal numbers.
    """
    r, z = _validate_gamma_args(r, z)
    if z == 0.0:
        return 0.0, 1.0
    if z < r + 1.0:
        s, _ = _lower_series(r, z)
        p = math.exp(-z + r * math.log(z) - math.lgamma(r)) * s
        p = min(max(p, 0.0), 1.0)
        return p, 1.0 - p
    q = _upper_cf(r, z)
    q = min(max(q, 0.0), 1.0)
    return 1.0 - q, q


def reg_lower_gamma(r: float, z: float) -> float:
    """Regularized lower incomplete gamma function P(r, z) = gamma(r, z) / Gamma(r)."""
    return reg_gamma_pair(r, z)[0]


def _digamma(x: float) -> float:
    # Recurrence up to x >= 10, then the asymptotic Bernoulli series; the
    # truncation error of the x^-14 tail is below 1e-16 there.
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = inv2 * (
        1.0 / 12.0
        - inv2
        * (
            1.0 / 120.0
            - inv2
            * (
                1.0 / 252.0
                - inv2
                * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0)))
            )
        )
    )
    return acc + math.log(x) - 0.5 / x - series


def dP_dr(r: float, z: float) -> float:
    """Partial derivative of P(r, z) with respect to the order r.

    On the series branch (z < r + 1) the power series is differentiated
    term by term, which is exact up to truncation.  On the continued
    fraction branch a fourth-order central stencil is applied to Q(r, z),
    whose native evaluation keeps full relative accuracy in the tail.
    """
    r, z = _validate_gamma_args(r, z)
    if z == 0.0:
        raise DomainError("dP_dr requires z > 0")
    if z < r + 1.0:
        s, ds = _lower_series(r, z)
        pref = math.exp(-z + r * math.log(z) - math.lgamma(r))
        p = pref * s
        return p * (math.log(z) - _digamma(r)) + pref * ds
    h = min(1e-3 * max(r, 1.0), 0.125 * r)
    qm2 = reg_gamma_pair(r - 2.0 * h, z)[1]
    qm1 = reg_gamma_pair(r - h, z)[1]
    qp1 = reg_gamma_pair(r + h, z)[1]
    qp2 = reg_gamma_pair(r + 2.0 * h, z)[1]
    dq = (-qp2 + 8.0 * qp1 - 8.0 * qm1 + qm2) / (12.0 * h)
    return -dq
