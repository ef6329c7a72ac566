"""Continuous-time individual-level epidemic models: simulation, likelihood and Bayesian fitting."""

from .control import ControlOutcome, ControlPolicy, ring_cull_run, sweep
from .epidemic import (
    EventHistory,
    Framework,
    PeriodSpec,
    SimConfig,
    build_event_history,
    epidemic_statistics,
    simulate,
)
from .estimator import ILMSampler
from .exceptions import CtilmError, NumericError, ValidationError
from .kernels import KernelKind, KernelParams, KernelSpec, ParameterState, eval_kernel, pair_rate, total_rate
from .likelihood import LikelihoodInput, log_likelihood, log_likelihood_sinr, log_likelihood_sir
from .mcmc import (
    Datatype,
    FitConfig,
    FitProblem,
    ModelPriors,
    PeriodConfig,
    PosteriorSample,
    Prior,
    PriorAndProposal,
    gibbs_rate_update,
    run_chain,
    run_chains,
)
from .networks import ContactNetwork, NetworkKind, connection_probabilities, euclidean_distances, generate_network
from .posterior import gelman_rubin, latent_time_summary, posterior_predictive, summarize

__version__ = "0.1.0"
