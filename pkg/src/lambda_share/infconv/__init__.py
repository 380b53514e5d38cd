"""Inf-convolution engines and allocation builders."""

from .general import finiteness_general, finiteness_monotone, gamma_general
from .homogeneous import (
    infconv_chain,
    infconv_conditional,
    infconv_homogeneous,
    infconv_var_conditional,
)
from .result import (
    CapExceededError,
    InapplicableError,
    InfConvError,
    InfConvResult,
    Witness,
    check_witness,
)
from .abscont import (
    g_comonotone,
    g_countermonotone,
    g_curve,
    g_independent,
    infconv_abscont,
    quantile_integral,
)
from .thone import infconv_lvar_rho, infconv_lvar_rho_conditional
from .corollaries import cor2_distortion, cor2_lvarplus, cor2_utility, cor3_es, cor3_utility
from .thfour import infconv_lvarplus_rho, infconv_lvarplus_step
from .pareto import pareto_check

__all__ = [
    "CapExceededError",
    "InapplicableError",
    "InfConvError",
    "InfConvResult",
    "Witness",
    "check_witness",
    "cor2_distortion",
    "cor2_lvarplus",
    "cor2_utility",
    "cor3_es",
    "cor3_utility",
    "finiteness_general",
    "finiteness_monotone",
    "g_comonotone",
    "g_countermonotone",
    "g_curve",
    "g_independent",
    "gamma_general",
    "infconv_abscont",
    "infconv_chain",
    "infconv_conditional",
    "infconv_homogeneous",
    "infconv_lvar_rho",
    "infconv_lvar_rho_conditional",
    "infconv_lvarplus_rho",
    "infconv_lvarplus_step",
    "infconv_var_conditional",
    "pareto_check",
    "quantile_integral",
]
