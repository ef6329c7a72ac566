"""Estimator-style wrapper around the sampler (``fit`` / ``summary`` / ``predict_statistics``)."""

import numpy as np
from sklearn.base import BaseEstimator

from .epidemic import EventHistory, SimConfig
from .exceptions import InvalidConfig, NotSampled
from .kernels import KernelParams, KernelSpec, ParameterState
from .mcmc import FitConfig, FitProblem, ModelPriors, run_chains
from .posterior import gelman_rubin, posterior_predictive, summarize


class ILMSampler(BaseEstimator):
    """Bayesian fit of a continuous-time ILM to one event history.

    Parameters mirror :class:`FitConfig`; ``priors`` is a :class:`ModelPriors`.
    After ``fit`` the draws are in ``posterior_``.
    """

    def __init__(
        self,
        kernel="distance-powerlaw",
        priors=None,
        datatype="known-epidemic",
        nsim=1000,
        nchains=1,
        blockupdate=None,
        delta=None,
        latent_thin=10,
        parallel=False,
        workers=None,
        seed=0,
    ):
        self.kernel = kernel
        self.priors = priors
        self.datatype = datatype
        self.nsim = nsim
        self.nchains = nchains
        self.blockupdate = blockupdate
        self.delta = delta
        self.latent_thin = latent_thin
        self.parallel = parallel
        self.workers = workers
        self.seed = seed

    def fit(self, X, y=None, *, distances=None, network=None, sus_covariates=None, trans_covariates=None):
        """``X`` is the observed :class:`EventHistory`; ``y`` is ignored."""
        if not isinstance(X, EventHistory):
            raise InvalidConfig("X must be an EventHistory")
        if not isinstance(self.priors, ModelPriors):
            raise InvalidConfig("priors must be a ModelPriors instance")
        spec = KernelSpec(self.kernel, distances=distances, network=network)
        problem = FitProblem(X, spec, self.priors, sus_covariates, trans_covariates)
        fit = FitConfig(
            datatype=self.datatype,
            nsim=self.nsim,
            nchains=self.nchains,
            parallel=self.parallel,
            blockupdate=self.blockupdate,
            delta=self.delta,
            latent_thin=self.latent_thin,
            workers=self.workers,
        )
        self.problem_ = problem
        self.posterior_ = run_chains(problem, fit, seed=self.seed)
        self.columns_ = list(self.posterior_.columns)
        return self

    def _check_fitted(self):
        if not hasattr(self, "posterior_"):
            raise NotSampled("call fit before using the posterior")

    def summary(self, start=0, thin=1):
        self._check_fitted()
        return summarize(self.posterior_, start, thin)

    def psrf(self, start=0, thin=1):
        self._check_fitted()
        return gelman_rubin(self.posterior_, start, thin)

    def predict_statistics(self, periods, prefix=1, n_rep=100, seed=0, start=0, thin=1):
        """Posterior predictive (T1..T4) replicates conditioned on the first ``prefix`` infections.

        ``periods`` supplies the period shapes (and rates when these were not sampled).
        """
        self._check_fitted()
        p = self.problem_
        ncoef = len(p.priors.sus_coeffs)
        ntrans = len(p.priors.trans_coeffs or [])
        params = ParameterState(
            np.ones(ncoef),
            trans_coeffs=np.ones(ntrans) if ntrans else None,
            kernel=KernelParams(1.0, 0.0) if p.kernel.kind.n_params else KernelParams(),
        )
        template = SimConfig(
            p.framework, p.kernel, params, periods,
            sus_covariates=p.sus_covariates, trans_covariates=p.trans_covariates,
        )
        return posterior_predictive(self.posterior_, template, p.history, prefix, n_rep, seed, start, thin)
