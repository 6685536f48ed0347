"""Normal-beta prime shrinkage prior for multiple testing of sparse normal means."""

from ._backend import BACKEND
from .errors import DomainError, InputError, NBPError, NumericalError, QuadratureError
from .estimators import EsConfig, RemlConfig, es_estimate, reml_estimate
from .nbp_model import AsymptoticScheme, Hyperparams, marginal_log_density, shrinkage_weight
from .samplers import APrior, ChainSpec, PosteriorSummary, run_chain
from .stats_kernel import QuadratureSpec, RandomStream
from .testing import TwoGroupsSpec, bh_decisions, half_threshold, oracle_decisions, oracle_threshold

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DomainError", "InputError", "NBPError", "NumericalError", "QuadratureError",
    "EsConfig", "RemlConfig", "es_estimate", "reml_estimate", "AsymptoticScheme", "Hyperparams",
    "marginal_log_density", "shrinkage_weight", "APrior", "ChainSpec", "PosteriorSummary",
    "run_chain", "QuadratureSpec", "RandomStream", "TwoGroupsSpec", "bh_decisions",
    "half_threshold", "oracle_decisions", "oracle_threshold",
]
