"""Generalized Gaussian entropy modeling and table-driven range coding."""

from .bounds import (
    BoundedParams,
    BoundTable,
    apply_bound,
    build_bound_table,
    clamped_grad,
    compute_bound,
    rectified_grad,
)
from .errors import (
    AccuracyWarning,
    CorruptionError,
    DegenerateRateError,
    DomainError,
    InsufficientOverlapError,
    NumericError,
    PmfUnderflowError,
    SingularityError,
)
from .fitting import (
    FitGrid,
    FitMethod,
    FitResult,
    avg_bits,
    discrete_grid_fit,
    grid_avg_bits,
    mle_fit,
    r_squared,
)
from .lut import (
    Bitstream,
    CdfTable,
    LutGrid,
    ParamStream,
    build_cdf_table,
    build_lut,
    decode,
    encode,
    quantize_params,
    sample_alpha_log,
    stream_estimated_bits,
)
from .model import (
    GgmParams,
    MismatchCell,
    QuantizedPmf,
    RateGradient,
    cdf,
    cdf_grad,
    mismatch,
    noisy_rate,
    pdf,
    pmf_integer_grid,
    pmf_zero_center,
    quantized_pmf,
    rate_grad,
    rounded_rate,
)
from .simulate import (
    RdCurve,
    RdPoint,
    Source2dSpec,
    bd_rate,
    klt,
    run_rd,
    sample_source,
    source_by_name,
)
from .special import dP_dr, erf, ln_gamma, reg_lower_gamma

__version__ = "0.1.0"
