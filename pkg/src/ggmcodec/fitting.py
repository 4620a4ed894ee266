"""Fitting the generalized Gaussian to data.

Three routes: an average-bits grid search over (shape, scale) lattices for
integer residuals, a profile maximum-likelihood fit for continuous samples
(the scale has a closed form for each fixed shape), and an r-squared
goodness-of-fit score between a density-normalized histogram and the model
density.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AccuracyWarning, DomainError
from .model import (
    BETA_MAX,
    BETA_MIN,
    LOG_PROB_FLOOR,
    GgmParams,
    _std_interval_vec,
    pdf,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class FitMethod(str, Enum):
    DISCRETE_GRID = "discrete_grid"
    MLE = "mle"
    PDF_R2 = "pdf_r2"


@dataclass(frozen=True)
class FitGrid:
    """Average bits per sample over a (shape, scale) lattice."""

    beta_values: np.ndarray
    alpha_values: np.ndarray
    avg_bits: np.ndarray  # shape (len(beta_values), len(alpha_values))

    def argmin(self) -> tuple[int, int]:
        """Lattice argmin; C-order scanning breaks ties toward smaller shape, then scale."""
        flat = int(np.argmin(self.avg_bits))
        return flat // self.avg_bits.shape[1], flat % self.avg_bits.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("beta,alpha,bits\n")
        for i, b in enumerate(self.beta_values):
            for j, a in enumerate(self.alpha_values):
                buf.write(f"{b!r},{a!r},{self.avg_bits[i, j]!r}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class FitResult:
    params: GgmParams
    objective: float
    method: FitMethod

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": 1,
                "method": self.method.value,
                "mu": self.params.mu,
                "alpha": self.params.alpha,
                "beta": self.params.beta,
                "objective": self.objective,
            },
            sort_keys=True,
        )


def _as_symbols(samples) -> np.ndarray:
    arr = np.asarray(samples)
    if arr.size == 0:
        raise DomainError("samples must be nonempty")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.all(rounded == arr):
            raise DomainError("integer residual samples required")
        arr = rounded
    return arr.astype(np.int64).ravel()


def _bits_per_symbol(
    uniq: np.ndarray, counts: np.ndarray, beta: float, alpha: float
) -> tuple[float, int]:
    probs = _std_interval_vec(beta, (uniq - 0.5) / alpha, (uniq + 0.5) / alpha)
    floored = int(counts[probs < LOG_PROB_FLOOR].sum())
    bits = -np.log2(np.maximum(probs, LOG_PROB_FLOOR))
    return float((counts * bits).sum() / counts.sum()), floored


def avg_bits(samples, params: GgmParams) -> float:
    """Mean code length in bits of integer residuals under the model.

    Bin masses are floored at 1e-300 before the log; if any sample hits the
    floor an AccuracyWarning reports how many.
    """
    syms = _as_symbols(samples)
    uniq, counts = np.unique(syms, return_counts=True)
    bits, floored = _bits_per_symbol(uniq, counts, params.beta, params.alpha)
    if floored:
        warnings.warn(
            f"{floored} of {syms.size} samples hit the probability floor",
            AccuracyWarning,
            stacklevel=2,
        )
    return bits


def grid_avg_bits(samples, beta_values, alpha_values) -> FitGrid:
    """Average bits at every lattice point of the given shape/scale values."""
    betas = np.sort(np.asarray(beta_values, dtype=np.float64).ravel())
    alphas = np.sort(np.asarray(alpha_values, dtype=np.float64).ravel())
    if betas.size < 1 or alphas.size < 1:
        raise DomainError("grid needs at least one value per axis")
    if np.any(alphas <= 0):
        raise DomainError("scale grid values must be positive")
    if np.any(betas < BETA_MIN) or np.any(betas > BETA_MAX):
        raise DomainError(f"shape grid values must lie in [{BETA_MIN}, {BETA_MAX}]")
    syms = _as_symbols(samples)
    uniq, counts = np.unique(syms, return_counts=True)
    bits = np.empty((betas.size, alphas.size))
    for i, b in enumerate(betas):
        for j, a in enumerate(alphas):
            bits[i, j] = _bits_per_symbol(uniq, counts, float(b), float(a))[0]
    return FitGrid(beta_values=betas, alpha_values=alphas, avg_bits=bits)


def discrete_grid_fit(samples, beta_values, alpha_values) -> FitResult:
    """Lattice point minimizing average bits; ties go to smaller shape then scale."""
    grid = grid_avg_bits(samples, beta_values, alpha_values)
    i, j = grid.argmin()
    return FitResult(
        params=GgmParams(
            mu=0.0, alpha=float(grid.alpha_values[j]), beta=float(grid.beta_values[i])
        ),
        objective=float(grid.avg_bits[i, j]),
        method=FitMethod.DISCRETE_GRID,
    )


def profile_alpha(abs_dev: np.ndarray, beta: float) -> float:
    """Likelihood-maximizing scale for a fixed shape: ((beta/n) sum |y-mu|^beta)^(1/beta)."""
    mean_pow = float(np.mean(abs_dev**beta))
    return (beta * mean_pow) ** (1.0 / beta)


def _profile_nll_bits(abs_dev: np.ndarray, beta: float) -> tuple[float, float]:
    alpha = profile_alpha(abs_dev, beta)
    # mean of -log2 pdf with the profile scale plugged in
    nll_nat = (
        math.log(2.0 * alpha)
        + math.lgamma(1.0 / beta)
        - math.log(beta)
        + 1.0 / beta
    )
    return nll_nat / math.log(2.0), alpha


def mle_fit(samples, mu_mode: str = "fixed_zero") -> FitResult:
    """Profile maximum likelihood over the shape range via golden-section search.

    ``mu_mode`` is "fixed_zero" for mean-subtracted residual data or
    "sample_mean" for raw data.  The objective reported is the mean
    negative log-likelihood in bits per sample.
    """
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size < 10:
        raise DomainError(f"need at least 10 samples, got {arr.size}")
    if np.all(arr == arr[0]):
        raise DomainError("degenerate input: all samples identical")
    if mu_mode == "fixed_zero":
        mu = 0.0
    elif mu_mode == "sample_mean":
        mu = float(arr.mean())
    else:
        raise DomainError(f"unknown mu_mode {mu_mode!r}")
    abs_dev = np.abs(arr - mu)
    if not np.any(abs_dev > 0):
        raise DomainError("degenerate input: no spread around the mean")

    def objective(beta: float) -> float:
        return _profile_nll_bits(abs_dev, beta)[0]

    lo, hi = BETA_MIN, BETA_MAX
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    while hi - lo > 1e-4:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = objective(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = objective(x2)
    candidates = [0.5 * (lo + hi), BETA_MIN, BETA_MAX]
    beta = min(candidates, key=objective)
    bits, alpha = _profile_nll_bits(abs_dev, beta)
    return FitResult(
        params=GgmParams(mu=mu, alpha=alpha, beta=beta),
        objective=bits,
        method=FitMethod.MLE,
    )


def _fd_bin_count(arr: np.ndarray) -> int:
    q75, q25 = np.percentile(arr, [75, 25])
    iqr = q75 - q25
    span = float(arr.max() - arr.min())
    if iqr <= 0:
        return 8
    width = 2.0 * iqr / arr.size ** (1.0 / 3.0)
    return int(np.clip(math.ceil(span / width), 8, 512))


def r_squared(samples, params: GgmParams, bins: int | None = None) -> float:
    """Goodness of fit between a density histogram and the model density.

    One minus the ratio of residual to total sum of squares over the bin
    centers; 1 is a perfect fit and the value can go negative for badly
    mismatched parameters.
    """
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size == 0:
        raise DomainError("samples must be nonempty")
    if float(arr.max()) == float(arr.min()):
        raise DomainError("degenerate input: sample range is a single point")
    if bins is None:
        bins = _fd_bin_count(arr)
    elif bins < 8:
        raise DomainError(f"need at least 8 bins, got {bins!r}")
    heights, edges = np.histogram(arr, bins=int(bins), density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    model_heights = np.array([pdf(params, float(c)) for c in centers])
    ss_res = float(((heights - model_heights) ** 2).sum())
    ss_tot = float(((heights - heights.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DomainError("histogram is flat; r-squared undefined")
    return 1.0 - ss_res / ss_tot
