"""Two-dimensional toy transform-coding simulation.

Gaussian scale-mixture sources are decorrelated with the KLT of their
covariance, uniformly quantized, and entropy-modeled per dimension either
with a Gaussian (shape frozen at 2) or with the full generalized Gaussian
grid fit.  Curves are compared with the Bjontegaard delta-rate metric on a
``-10 log10(mse)`` quality axis.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientOverlapError
from .fitting import discrete_grid_fit

BASE_COV = np.array([[4.0, 1.0], [1.0, 1.0]])

DEFAULT_SAMPLES = 2_000_000
# spans roughly 0.25 to 6 bits per sample on the toy sources
DEFAULT_STEPS = tuple(np.geomspace(0.12, 7.0, 12))

_FIT_BETAS = np.linspace(0.5, 4.0, 15)  # includes 2.0, so the GM grid is a subset
_GM_BETAS = np.array([2.0])


@dataclass(frozen=True)
class Source2dSpec:
    """Zero-mean mixture of scaled copies of one 2x2 Gaussian covariance."""

    base_cov: np.ndarray
    components: tuple[tuple[float, float], ...]  # (weight, covariance scale)

    def __post_init__(self):
        cov = np.asarray(self.base_cov, dtype=np.float64)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise DomainError("base_cov must be a symmetric 2x2 matrix")
        if np.any(np.linalg.eigvalsh(cov) <= 0):
            raise DomainError("base_cov must be positive definite")
        comps = tuple((float(w), float(s)) for w, s in self.components)
        if not comps:
            raise DomainError("at least one mixture component required")
        if any(w <= 0 or s <= 0 for w, s in comps):
            raise DomainError("weights and covariance scales must be positive")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
            raise DomainError("mixture weights must sum to 1")
        object.__setattr__(self, "base_cov", cov)
        object.__setattr__(self, "components", comps)

    def covariance(self) -> np.ndarray:
        return sum(w * s for w, s in self.components) * self.base_cov


X1 = Source2dSpec(BASE_COV, ((1.0, 1.0),))
X2 = Source2dSpec(BASE_COV, ((0.5, 1.0), (0.5, 0.25)))
X3 = Source2dSpec(BASE_COV, ((1 / 3, 1.0), (1 / 3, 0.25), (1 / 3, 0.0625)))

SOURCES = {"X1": X1, "X2": X2, "X3": X3}


def source_by_name(name: str) -> Source2dSpec:
    try:
        return SOURCES[name.upper()]
    except KeyError:
        raise DomainError(
            f"unknown source {name!r}; choose from {sorted(SOURCES)}"
        ) from None


@dataclass(frozen=True)
class RdPoint:
    rate: float  # bits per scalar sample, averaged over both dimensions
    mse: float  # squared error per scalar sample

    @property
    def quality(self) -> float:
        return -10.0 * math.log10(self.mse)


@dataclass(frozen=True)
class RdCurve:
    points: tuple[RdPoint, ...]
    label: str

    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("rate,mse,quality\n")
        for p in self.points:
            buf.write(f"{p.rate!r},{p.mse!r},{p.quality!r}\n")
        return buf.getvalue()


def sample_source(spec: Source2dSpec, n: int, seed) -> np.ndarray:
    """n i.i.d. draws from the mixture, deterministic per seed."""
    if n < 1:
        raise DomainError(f"need n >= 1 samples, got {n!r}")
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(spec.base_cov)
    z = rng.standard_normal((n, 2)) @ chol.T
    weights = np.array([w for w, _ in spec.components])
    scales = np.array([s for _, s in spec.components])
    comp = rng.choice(weights.size, size=n, p=weights)
    return z * np.sqrt(scales[comp])[:, None]


def klt(cov: np.ndarray) -> np.ndarray:
    """Rows are unit eigenvectors of ``cov`` by descending eigenvalue.

    Sign convention: the first nonzero entry of each row is positive, so
    the transform is unique.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T, atol=1e-12):
        raise DomainError("cov must be a symmetric 2x2 matrix")
    evals, evecs = np.linalg.eigh(cov)
    if np.any(evals <= 0):
        raise DomainError("cov must be positive definite")
    order = np.argsort(-evals, kind="stable")
    rows = evecs[:, order].T.copy()
    for row in rows:
        lead = row[np.abs(row) > 1e-12]
        if lead.size and lead[0] < 0:
            row *= -1.0
    return rows


def _alpha_grid(coeff_std_in_steps: float) -> np.ndarray:
    """Log-spaced scale lattice around the unquantized coefficient spread.

    The anchor must come from the continuous coefficients: the index
    standard deviation collapses once the step exceeds the spread, which
    would push every plausible scale off the grid.
    """
    anchor = max(coeff_std_in_steps, 1e-6)
    return np.geomspace(anchor / 24.0, 6.0 * anchor, 41)


def run_rd(
    spec: Source2dSpec,
    model_kind: str,
    step_grid=DEFAULT_STEPS,
    n: int = DEFAULT_SAMPLES,
    seed=0,
) -> RdCurve:
    """Rate-distortion curve of one entropy model over the quantizer steps.

    Per step, KLT coefficients are quantized to the integer lattice scaled
    by the step; each dimension gets its own grid-fitted model, and the
    rate is the fitted average bits (idealized entropy coding).
    """
    steps = np.asarray(step_grid, dtype=np.float64)
    if steps.size == 0 or np.any(steps <= 0):
        raise DomainError("step grid must be nonempty and positive")
    if model_kind not in ("gm", "ggm"):
        raise DomainError(f"model_kind must be 'gm' or 'ggm', got {model_kind!r}")
    betas = _GM_BETAS if model_kind == "gm" else _FIT_BETAS
    samples = sample_source(spec, n, seed)
    coeffs = samples @ klt(spec.covariance()).T
    points = []
    for step in steps:
        indices = np.rint(coeffs / step)
        recon = indices * step
        mse = float(((coeffs - recon) ** 2).mean())
        dim_bits = []
        for d in (0, 1):
            idx = indices[:, d].astype(np.int64)
            if np.unique(idx).size == 1:
                dim_bits.append(0.0)
                continue
            alphas = _alpha_grid(float(coeffs[:, d].std()) / step)
            fit = discrete_grid_fit(idx, betas, alphas)
            dim_bits.append(fit.objective)
        points.append(RdPoint(rate=float(np.mean(dim_bits)), mse=mse))
    points.sort(key=lambda p: p.rate)
    deduped = [points[0]]
    for p in points[1:]:
        if p.rate > deduped[-1].rate:
            deduped.append(p)
    return RdCurve(points=tuple(deduped), label=model_kind)


def bd_rate(anchor: RdCurve, test: RdCurve) -> float:
    """Bjontegaard delta rate in percent; negative means the test saves rate.

    Cubic fits of log10-rate against quality, integrated over the common
    quality interval.
    """
    for curve in (anchor, test):
        if len(curve.points) < 4:
            raise DomainError(
                f"curve {curve.label!r} needs at least 4 points, has {len(curve.points)}"
            )
        if np.any(curve.rates() <= 0):
            raise DomainError(f"curve {curve.label!r} has nonpositive rates")
    qa, qt = anchor.qualities(), test.qualities()
    lo = max(qa.min(), qt.min())
    hi = min(qa.max(), qt.max())
    if hi <= lo:
        raise InsufficientOverlapError(
            f"no common quality range between {anchor.label!r} and {test.label!r}"
        )
    pa = np.polyfit(qa, np.log10(anchor.rates()), 3)
    pt = np.polyfit(qt, np.log10(test.rates()), 3)
    ia = np.polyval(np.polyint(pa), [lo, hi])
    it = np.polyval(np.polyint(pt), [lo, hi])
    avg_diff = ((it[1] - it[0]) - (ia[1] - ia[0])) / (hi - lo)
    return (10.0**avg_diff - 1.0) * 100.0
