"""Outage, success probability and rate of mutual-information-accumulation
cooperation versus single-BS service in a Poisson cellular downlink."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .analytic import (
    analytic_ccdf,
    analytic_curve,
    diversity_gain,
    expected_time,
    gu_mia_ccdf_bound,
    gu_nc_ccdf,
    max_rate,
    outage_asymptote,
    rate,
    rate_curve,
    rate_gain,
    success_prob,
    wu_mia_ccdf_bound,
    wu_nc_ccdf,
)
from .errors import AccuracyError, DomainError, EdgeMaximumWarning, QuadratureError, RegimeError
from .model import GU_MIA, GU_NC, SCENARIOS, WU_MIA, WU_NC, CcdfCurve, NetworkParams, Scenario
from .montecarlo import TrialSet, estimate_ccdf, estimate_ps_rate
from .specfun import hyp_f, hyp_f_deriv, hyp_h
