"""Cubic variations of fractional Brownian motion with Hurst index 1/6 on two grids.

Exact finite-n covariances, certified limits for every classified regime of
mesh pairs, and Monte Carlo validation.
"""

from .errors import CubevarError, DomainError, InvariantError, PreconditionError, ResourceError
from .exact import CovRequest, CovResult, cross_chaos_cov, exact_cov_tilde, exact_cov_W, hermite3, scaling_check
from .kernel import GridPair, Quad, cov_R, phi, phi_envelopes, phi_n
from .limits import (
    Degenerate,
    IntegralConstant,
    ModK,
    RationalConstant,
    RhoFunction,
    cum_cov,
    gamma,
    limit_cov,
    rho_value,
    sample_limit_process,
    sigma_matrix,
    validate_regime,
)
from .series import CertifiedValue, TruncationBudget, f_hat_L, f_L, f_mL, kappa_L_sq, kappa_sq, series_tail_bound
from .simulate import (
    McConfig,
    McEstimate,
    PathSample,
    coupled_sample,
    fgn_sample,
    independence_diagnostic,
    mc_cov,
    normality_diagnostics,
    w_path,
)

__version__ = "0.1.0"
