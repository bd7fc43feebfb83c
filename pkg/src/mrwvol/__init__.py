"""Multifractal random walk: simulation, estimation, forecasting and smile pricing."""

from .estimation import LambdaFit, RangeSeries, VariogramEstimate, empirical_variogram, fit_loglinear, log_ranges
from .forecast import (
    ForecastWeights,
    VolForecast,
    VolHistory,
    alpha_star,
    exact_weights_oracle,
    forecast_sensitivity,
    forecast_variance,
    forecast_vol,
    weight_row,
)
from .kernels import (
    ForecastConstants,
    KernelDomainError,
    NumericalGateError,
    WindowGeometry,
    compute_pred_constant,
    g_map,
    k_conv_phi,
    kernel_K,
    kernel_K_L,
    kernel_K_LT,
    phi,
    phi_LT,
    residual_variance,
)
from .pricing import (
    KurtosisEstimate,
    PricingInputs,
    SmileCurve,
    approx_mrw_small_lambda,
    call_price,
    kurtosis_finite_T,
    kurtosis_limit,
    smile_curve,
)
from .quadrature import QuadratureResult, Singularity, SingularitySpec, integrate_1d, integrate_2d, integrate_4d_mc
from .simulation import (
    EmbeddingError,
    GaussianSequence,
    MrwParams,
    MrwPath,
    RescaledPath,
    kernel_covariance,
    rescale_to_T,
    sample_logvol,
    simulate_path,
    synthesize_path,
    validate_kernel_psd,
)

__version__ = "0.1.0"
