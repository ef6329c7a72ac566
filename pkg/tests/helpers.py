"""Shared builders for test data."""

import numpy as np

from ctilm.epidemic import PeriodSpec, SimConfig, build_event_history, simulate
from ctilm.kernels import KernelKind, KernelParams, KernelSpec, ParameterState
from ctilm.mcmc import FitProblem, ModelPriors, Prior, PriorAndProposal
from ctilm.networks import euclidean_distances, generate_network
from ctilm.rng import stream

KINDS = [k.value for k in KernelKind]


def random_instance(rng, kind, sinr, n=None, spark=None):
    """Simulated history plus every model ingredient, for oracle comparisons."""
    n = n or int(rng.integers(2, 7))
    loc = rng.uniform(0, 3, size=(n, 2))
    D = euclidean_distances(loc)
    C = (rng.random((n, n)) < 0.6).astype(float)
    if kind == "network-weighted":
        C = C * rng.uniform(0.2, 2.0, size=(n, n))
    np.fill_diagonal(C, 0.0)
    spec = KernelSpec(
        kind,
        distances=D if KernelKind(kind).uses_distance else None,
        network=C if KernelKind(kind).uses_network else None,
    )
    p = int(rng.integers(1, 3))
    X = rng.uniform(0.1, 2.0, size=(p, n))
    S = rng.uniform(0.2, 1.5, size=p)
    phi = rng.uniform(0.5, 2.0, size=p)
    use_t = rng.random() < 0.5
    Z = rng.uniform(0.1, 2.0, size=(1, n)) if use_t else None
    T = rng.uniform(0.5, 1.5, size=1) if use_t else None
    xi = rng.uniform(0.5, 2.0, size=1) if use_t else None
    beta = float(rng.uniform(0.5, 2.5))
    beta2 = float(rng.uniform(0.1, 1.0))
    eps = float(rng.uniform(0, 0.3)) if spark is None else spark
    gamma = float(rng.uniform(0.3, 2.0)) if sinr else 1.0
    params = ParameterState(S, phi, T, xi, KernelParams(beta, beta2), eps, gamma)
    periods = (PeriodSpec(2.0, 2.0), PeriodSpec(1.5, 1.0)) if sinr else PeriodSpec(2.0, 1.5)
    cfg = SimConfig("SINR" if sinr else "SIR", spec, params, periods, X, Z)
    hist = simulate(cfg, rng)
    return dict(
        n=n, D=D, C=C, spec=spec, X=X, Z=Z, S=S, phi=phi, T=T, xi=xi,
        beta=beta, beta2=beta2, spark=eps, gamma=gamma, params=params, hist=hist, cfg=cfg,
    )


def network_study_setup(seed, n=50):
    """Individuals on a square (10x10 for 50, same density otherwise), binary covariate,
    power-law contact network (beta 1.8, nu 1), alpha = (0.08, 0.5), periods Gamma(4, 2)."""
    side = 10.0 * np.sqrt(n / 50)
    rng = stream(seed, 0)
    loc = rng.uniform(0, side, size=(n, 2))
    X = np.vstack([np.ones(n), rng.binomial(1, 0.5, n)])
    net = generate_network("powerlaw", loc=loc, beta=1.8, nu=1.0, rng=rng)
    spec = KernelSpec("network-binary", network=net.matrix)
    cfg = SimConfig("SIR", spec, ParameterState([0.08, 0.5]), PeriodSpec(4.0, 2.0), sus_covariates=X)
    return cfg, rng


def network_study_epidemic(min_infected=20, first_seed=0, n=50):
    """First seed (counting up from ``first_seed``) whose epidemic infects at least ``min_infected``.

    A tiny outbreak carries almost no information about the parameters, so
    the recovery checks condition on a non-trivial epidemic.
    """
    seed = first_seed
    while True:
        cfg, rng = network_study_setup(seed, n)
        hist = simulate(cfg, rng)
        if hist.m >= min_infected:
            return seed, cfg, hist
        seed += 1


def gamma_pp(initial, variance, shape=1.0, rate=0.1):
    return PriorAndProposal(Prior("gamma", (shape, rate)), initial, variance)


def known_epidemic_problem(cfg, hist):
    priors = ModelPriors(sus_coeffs=[gamma_pp(0.01, 0.5), gamma_pp(0.1, 1.0)])
    return FitProblem(hist, cfg.kernel, priors, sus_covariates=cfg.sus_covariates)


def known_removal_problem(cfg, hist):
    priors = ModelPriors(
        sus_coeffs=[gamma_pp(0.01, 0.2), gamma_pp(0.1, 0.8)],
        spark=PriorAndProposal(Prior("gamma", (1.0, 0.01)), 0.01, 0.1),
    )
    return FitProblem(hist, cfg.kernel, priors, sus_covariates=cfg.sus_covariates)


def two_person_history(framework="SIR", inf2=1.0, rem2=3.0):
    if framework == "SIR":
        return build_event_history("SIR", [0.0, inf2], [2.0, rem2])
    return build_event_history("SINR", [0.0, inf2], [2.5, rem2 + 0.5], notif_times=[1.5, rem2])
