"""Shape-dependent lower bound for the scale parameter and gradient rules.

For each shape ``beta`` the bound is the largest scale at which the central
quantization bin still holds essentially all probability mass (threshold
``1 - 1e-5``).  Scales clamped at the bound get one-sided gradient
treatment: the scale gradient passes only when it points back above the
bound, and the rectified rule additionally kills shape gradients that
would grow ``beta`` spuriously.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .model import BETA_MAX, BETA_MIN, GgmParams, RateGradient, _std_interval

MASS_THRESHOLD = 1.0 - 1e-5
BISECT_TOL = 1e-7
_BRACKET_LO = 1e-8
_BRACKET_HI = 16.0


@dataclass(frozen=True)
class BoundTable:
    """Monotone lookup of the scale bound at linearly spaced shape knots."""

    beta_knots: np.ndarray
    alpha_bounds: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.beta_knots, dtype=np.float64)
        vals = np.asarray(self.alpha_bounds, dtype=np.float64)
        if knots.ndim != 1 or knots.shape != vals.shape or knots.size < 2:
            raise DomainError("knots and bounds must be matching 1-d arrays")
        if not np.all(np.diff(knots) > 0):
            raise DomainError("beta knots must be strictly increasing")
        object.__setattr__(self, "beta_knots", knots)
        object.__setattr__(self, "alpha_bounds", vals)

    def interpolate(self, beta: float) -> float:
        """Piecewise-linear bound value at ``beta`` (clamped to the knot range)."""
        _check_beta(beta)
        return float(np.interp(beta, self.beta_knots, self.alpha_bounds))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("beta,alpha_bound\n")
        for b, a in zip(self.beta_knots, self.alpha_bounds):
            buf.write(f"{b!r},{a!r}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class BoundedParams:
    """Parameters after clamping the scale upward to the bound."""

    params: GgmParams
    alpha_was_clamped: bool


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if math.isnan(beta) or not BETA_MIN <= beta <= BETA_MAX:
        raise DomainError(f"beta must lie in [{BETA_MIN}, {BETA_MAX}], got {beta!r}")
    return beta


def central_bin_mass(beta: float, alpha: float) -> float:
    """Mass of the central unit bin, ``c_beta(0.5/alpha) - c_beta(-0.5/alpha)``."""
    return _std_interval(beta, -0.5 / alpha, 0.5 / alpha)


def compute_bound(beta: float) -> float:
    """Largest scale whose central bin mass still exceeds the threshold.

    The mass is strictly decreasing in the scale, so plain bisection to an
    absolute tolerance of 1e-7 brackets the crossing.
    """
    beta = _check_beta(beta)
    lo, hi = _BRACKET_LO, _BRACKET_HI
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if central_bin_mass(beta, mid) > MASS_THRESHOLD:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_bound_table(knots: int = 64) -> BoundTable:
    """Bisection solutions at ``knots`` linearly spaced shapes over the full range."""
    if knots < 16:
        raise DomainError(f"need at least 16 knots, got {knots!r}")
    betas = np.linspace(BETA_MIN, BETA_MAX, int(knots))
    bounds = np.array([compute_bound(float(b)) for b in betas])
    return BoundTable(beta_knots=betas, alpha_bounds=bounds)


def apply_bound(params: GgmParams, table: BoundTable) -> BoundedParams:
    """Clamp the scale upward to the interpolated bound; flag on alpha <= bound."""
    bound = table.interpolate(params.beta)
    if params.alpha > bound:
        return BoundedParams(params=params, alpha_was_clamped=False)
    return BoundedParams(
        params=replace(params, alpha=bound), alpha_was_clamped=True
    )


def clamped_grad(
    params: GgmParams, table: BoundTable, upstream: RateGradient
) -> RateGradient:
    """One-sided scale gradient in the clamped region.

    ``upstream`` must be evaluated at the bounded parameters.  Below the
    bound the scale cannot shrink further, so a positive scale gradient
    (pushing it smaller under minimization) is dropped; the shape and mean
    components pass through.
    """
    if params.alpha > table.interpolate(params.beta):
        return upstream
    eta = upstream.d_alpha
    return RateGradient(
        d_mu=upstream.d_mu,
        d_alpha=eta if eta <= 0.0 else 0.0,
        d_beta=upstream.d_beta,
    )


def rectified_grad(
    params: GgmParams, table: BoundTable, upstream: RateGradient
) -> RateGradient:
    """Clamped rule plus the shape rectification in the clamped region.

    At the bound, a nonpositive shape gradient would only push the shape
    toward flatter distributions with even smaller entropy, away from any
    distribution actually sitting below the bound, so it is zeroed; only
    positive shape gradients survive.
    """
    if params.alpha > table.interpolate(params.beta):
        return upstream
    base = clamped_grad(params, table, upstream)
    zeta = base.d_beta
    return RateGradient(
        d_mu=base.d_mu,
        d_alpha=base.d_alpha,
        d_beta=zeta if zeta > 0.0 else 0.0,
    )
