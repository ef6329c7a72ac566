import math

import numpy as np
import pytest
from scipy import stats

from ctilm.epidemic import build_event_history
from ctilm.exceptions import InitializationError, InvalidConfig, ValidationError, WrongDatatype
from ctilm.kernels import KernelSpec
from ctilm.mcmc import (
    LOGLIK,
    ChainState,
    Datatype,
    FitConfig,
    FitProblem,
    ModelPriors,
    PeriodConfig,
    Prior,
    PriorAndProposal,
    block_update_event_times,
    gibbs_rate_update,
    independence_update_infection,
    independence_update_removal,
    run_chain,
    run_chains,
)
from ctilm.rng import stream

import oracles
from helpers import gamma_pp, known_epidemic_problem, known_removal_problem, network_study_epidemic, random_instance

D3 = np.array([[0, 1.0, 2.0], [1.0, 0, 1.5], [2.0, 1.5, 0]])
ALPHA, BETA = 0.8, 1.0


@pytest.fixture(scope="module")
def network_data():
    _, cfg, hist = network_study_epidemic(min_infected=20)
    return cfg, hist


def fixed_priors(sinr=False, gamma=0.5):
    return ModelPriors(
        sus_coeffs=[gamma_pp(ALPHA, 0.0)],
        kernel=[gamma_pp(BETA, 0.0)],
        gamma=gamma_pp(gamma, 0.0) if sinr else None,
    )


def sir_delta(shape=2.0, rate=1.0):
    return {"infectious": PeriodConfig(shape, rate)}


def sinr_delta():
    return {"incubation": PeriodConfig(2.0, 2.0), "delay": PeriodConfig(2.0, 1.0)}


def make_state(problem, fit, seed=0, chain=0):
    return ChainState(problem, fit, chain, stream(seed, chain))


def tv_distance(draws, grid, masses, bins):
    hist, _ = np.histogram(draws, bins=bins)
    ref, _ = np.histogram(grid, bins=bins, weights=masses)
    return 0.5 * np.abs(hist / draws.size - ref / ref.sum()).sum()


# random-walk updates -------------------------------------------------------


def test_zero_variance_fixes_parameter(network_data):
    cfg, hist = network_data
    problem = known_epidemic_problem(cfg, hist)
    problem.priors.sus_coeffs[1] = gamma_pp(0.3, 0.0)
    res = run_chain(problem, FitConfig(nsim=300), seed=2)
    assert np.all(res.draws[:, 1] == 0.3)
    assert "Alpha_s[2]" not in res.acceptance
    assert len(np.unique(res.draws[:, 0])) > 1


class _FixedStep:
    """RNG stand-in returning a fixed normal increment and a zero uniform."""

    def __init__(self, step):
        self.step = step

    def normal(self, loc, scale):
        return self.step

    def random(self):
        return 0.0


def test_out_of_support_proposals_rejected(network_data):
    cfg, hist = network_data
    state = make_state(known_epidemic_problem(cfg, hist), FitConfig(nsim=1))
    before = state.values.copy()
    state.rng = _FixedStep(-5.0)
    assert state.rw_update(0) is False
    assert np.array_equal(state.values, before)

    problem = known_epidemic_problem(cfg, hist)
    problem.priors.sus_coeffs[0] = PriorAndProposal(Prior("uniform", (0.0, 1.0)), 0.5, 0.1)
    state = make_state(problem, FitConfig(nsim=1))
    state.rng = _FixedStep(0.7)
    assert state.rw_update(0) is False
    assert state.values[0] == 0.5


def test_flat_likelihood_uniform_prior_acceptance(network_data):
    cfg, hist = network_data
    problem = known_epidemic_problem(cfg, hist)
    problem.priors.sus_coeffs[0] = PriorAndProposal(Prior("uniform", (0.0, 1.0)), 0.5, 0.1)
    problem.priors.sus_coeffs[1] = gamma_pp(0.1, 0.0)
    state = make_state(problem, FitConfig(nsim=1), seed=4)
    state.core_loglik = lambda *a, **k: 0.0
    state.core = 0.0
    steps = 40_000
    for _ in range(steps):
        state.rw_update(0)
    rate = state.accepted[0] / state.proposed[0]

    # stationary law is U(0, 1): count proposals that land inside (0, 1)
    rng = np.random.default_rng(99)
    x = rng.uniform(0, 1, 1_000_000)
    prop = x + rng.normal(0, math.sqrt(0.1), x.size)
    expected = np.mean((prop > 0) & (prop < 1))
    assert abs(rate - expected) < 0.015


def test_three_individual_parameter_posterior_matches_grid():
    hist = build_event_history("SIR", [0.0, 0.7, np.nan], [1.5, 2.2, np.nan])
    spec = KernelSpec("distance-powerlaw", distances=D3)
    prior = Prior("gamma", (2.0, 2.0))
    priors = ModelPriors(sus_coeffs=[PriorAndProposal(prior, 1.0, 0.5)], kernel=[gamma_pp(BETA, 0.0)])
    state = make_state(FitProblem(hist, spec, priors), FitConfig(nsim=1), seed=7)
    draws = np.empty(100_000)
    for t in range(draws.size):
        state.rw_update(0)
        draws[t] = state.values[0]

    inf, _, rem = hist.times_by_index(3)

    def logpost(a):
        lam = oracles.pair_rates("distance-powerlaw", D3, None, BETA, None, [a], [1.0], np.ones((1, 3)))
        return oracles.integrated_loglik(False, inf, None, rem, lam, 3) + oracles.gamma_logpdf(a, 2.0, 2.0)

    grid = np.linspace(0.0025, 6.0, 2400)
    masses = oracles.grid_posterior(logpost, grid)
    bins = np.linspace(0, 6.0, 61)
    assert tv_distance(draws, grid, masses, bins) <= 0.05


# Gibbs updates --------------------------------------------------------------


def _five_cases():
    # five infectious periods of length 2, summing to 10
    return build_event_history("SIR", [0.0, 0.5, 1.0, 1.5, 2.0], [2.0, 2.5, 3.0, 3.5, 4.0])


def test_gibbs_example_and_ks():
    h = _five_cases()
    rng = stream(1, 0)
    draws = np.array([gibbs_rate_update("SIR", h, "infectious", (1.0, 1.0), rng) for _ in range(10_000)])
    assert stats.kstest(draws, stats.gamma(a=6, scale=1 / 11).cdf).pvalue > 0.01
    assert abs(draws.mean() - 6 / 11) < 4 * math.sqrt(6) / 11 / 100


def test_gibbs_uses_period_shape():
    h = _five_cases()
    rng = stream(1, 1)
    draws = np.array([gibbs_rate_update("SIR", h, "infectious", (1.0, 1.0), rng, shape=4.0) for _ in range(10_000)])
    # m * shape + a = 21, M + b = 11
    assert stats.kstest(draws, stats.gamma(a=21, scale=1 / 11).cdf).pvalue > 0.01


def test_gibbs_sinr_sums():
    h = build_event_history("SINR", [0.0, 1.0], [4.0, 6.0], notif_times=[1.0, 4.0])
    rng = stream(2, 0)
    inc = np.array([gibbs_rate_update("SINR", h, "incubation", (2.0, 1.0), rng) for _ in range(5000)])
    dly = np.array([gibbs_rate_update("SINR", h, "delay", (2.0, 1.0), rng) for _ in range(5000)])
    # incubation periods 1 and 3, delays 3 and 2
    assert stats.kstest(inc, stats.gamma(a=4, scale=1 / 5).cdf).pvalue > 0.01
    assert stats.kstest(dly, stats.gamma(a=4, scale=1 / 6).cdf).pvalue > 0.01
    with pytest.raises(ValidationError):
        gibbs_rate_update("SINR", h, "infectious", (1.0, 1.0), rng)


def test_gibbs_without_infected_draws_prior():
    h = build_event_history("SIR", [np.inf, np.inf], [np.inf, np.inf])
    rng = stream(3, 0)
    draws = np.array([gibbs_rate_update("SIR", h, "infectious", (3.0, 2.0), rng) for _ in range(5000)])
    assert stats.kstest(draws, stats.gamma(a=3, scale=1 / 2).cdf).pvalue > 0.01


def test_gibbs_rejects_known_epidemic():
    with pytest.raises(WrongDatatype):
        gibbs_rate_update("SIR", _five_cases(), "infectious", (1.0, 1.0), stream(0), datatype="known-epidemic")


# latent event times ----------------------------------------------------------


def two_case_sir_problem(delta=None, spark=None):
    hist = build_event_history("SIR", [0.0, 1.0, np.nan], [2.0, 3.0, np.nan])
    priors = fixed_priors()
    priors.spark = spark
    fit = FitConfig(datatype="known-removal", nsim=1, delta=delta or sir_delta())
    return FitProblem(hist, KernelSpec("distance-powerlaw", distances=D3), priors), fit


def test_infection_time_posterior_matches_grid():
    problem, fit = two_case_sir_problem()
    state = make_state(problem, fit, seed=11)
    draws = np.empty(100_000)
    for t in range(draws.size):
        independence_update_infection(state, 2)
        draws[t] = state.inf[1]

    lam = oracles.pair_rates("distance-powerlaw", D3, None, BETA, None, [ALPHA], [1.0], np.ones((1, 3)))

    def logpost(x):
        inf = [0.0, x, np.inf]
        rem = [2.0, 3.0, np.inf]
        return oracles.integrated_loglik(False, inf, None, rem, lam, 3) + oracles.gamma_logpdf(3.0 - x, 2.0, 1.0)

    grid = np.linspace(-12.0, 2.0, 2801)[:-1] + 0.0025
    masses = oracles.grid_posterior(logpost, grid)
    bins = np.linspace(-12.0, 2.0, 71)
    assert tv_distance(draws, grid, masses, bins) <= 0.05


def test_removal_time_posterior_matches_grid():
    hist = build_event_history("SINR", [0.0, 1.0, np.nan], [2.5, 3.0, np.nan], notif_times=[1.0, 2.0, np.nan])
    problem = FitProblem(hist, KernelSpec("distance-powerlaw", distances=D3), fixed_priors(sinr=True))
    fit = FitConfig(datatype="unknown-removal", nsim=1, delta=sinr_delta())
    state = make_state(problem, fit, seed=12)
    draws = np.empty(100_000)
    for t in range(draws.size):
        independence_update_removal(state, 2)
        draws[t] = state.rem[1]

    lam = oracles.pair_rates("distance-powerlaw", D3, None, BETA, None, [ALPHA], [1.0], np.ones((1, 3)))
    inf, notif = [0.0, state.inf[1], np.inf], [1.0, 2.0, np.inf]
    rem1 = state.rem[0]

    def logpost(x):
        rem = [rem1, x, np.inf]
        ll = oracles.integrated_loglik(True, inf, notif, rem, lam, 3, gamma=0.5)
        return ll + oracles.gamma_logpdf(x - 2.0, 2.0, 1.0)

    grid = np.linspace(2.0, 14.0, 2401)[:-1] + 0.0025
    masses = oracles.grid_posterior(logpost, grid)
    bins = np.linspace(2.0, 14.0, 61)
    assert tv_distance(draws, grid, masses, bins) <= 0.05


def test_matching_proposal_with_flat_likelihood_always_accepts():
    problem, fit = two_case_sir_problem()
    state = make_state(problem, fit)
    state.core_loglik = lambda *a, **k: 0.0
    state.core = 0.0
    for _ in range(500):
        assert independence_update_infection(state, 2)


def test_sourceless_proposal_rejected():
    # initial periods near 2 put individual 2's infection inside individual 1's infectious window
    problem, fit = two_case_sir_problem(delta={"infectious": PeriodConfig(400.0, 200.0)})
    state = make_state(problem, fit)
    before, core = state.inf.copy(), state.core
    # periods near 0.5 put the infection after individual 1 is removed
    assert not independence_update_infection(state, 2, proposal=(1000.0, 2000.0))
    assert np.array_equal(state.inf, before) and state.core == core


def test_infeasible_start_raises():
    problem, fit = two_case_sir_problem(delta={"infectious": PeriodConfig(1000.0, 2000.0)})
    with pytest.raises(InitializationError):
        make_state(problem, fit)


def test_latent_update_errors():
    problem, fit = two_case_sir_problem()
    state = make_state(problem, fit)
    with pytest.raises(ValidationError):
        independence_update_infection(state, 1)
    with pytest.raises(WrongDatatype):
        independence_update_removal(state, 2)
    known = make_state(problem, FitConfig(nsim=1))
    with pytest.raises(WrongDatatype):
        independence_update_infection(known, 2)


def test_block_size_one_is_single_site(network_data):
    cfg, hist = network_data
    problem = known_removal_problem(cfg, hist)
    fit = FitConfig(datatype="known-removal", nsim=1, delta=sir_delta(4.0, 2.0))
    a = make_state(problem, fit, seed=5)
    b = make_state(problem, fit, seed=5)
    for _ in range(5):
        a.block_update("inf")
        for i in b.rng.permutation(b.updatable):
            independence_update_infection(b, i + 1)
    assert np.array_equal(a.inf, b.inf)
    assert a.loglik == b.loglik


def test_block_count_per_sweep(network_data):
    cfg, hist = network_data
    problem = known_removal_problem(cfg, hist)
    fit = FitConfig(datatype="known-removal", nsim=1, blockupdate=(1, 5), delta=sir_delta(4.0, 2.0))
    state = make_state(problem, fit)
    state.block_update("inf")
    assert state.latent_proposed["inf"] == math.ceil(state.updatable.size / 5)
    block = state.updatable[:3] + 1
    block_update_event_times(state, block)
    assert state.latent_proposed["inf"] == math.ceil(state.updatable.size / 5) + 1


def _sinr_unknown_removal(seed):
    inst = random_instance(np.random.default_rng(seed), "both-cauchy", sinr=True, n=6, spark=0.1)
    priors = ModelPriors(
        sus_coeffs=[gamma_pp(0.5, 0.1) for _ in inst["S"]],
        kernel=[gamma_pp(1.0, 0.3), gamma_pp(0.5, 0.1)],
        spark=PriorAndProposal(Prior("gamma", (1.0, 1.0)), 0.1, 0.01),
        gamma=PriorAndProposal(Prior("halfnormal", (0.0, 2.0)), 1.0, 0.2),
    )
    problem = FitProblem(inst["hist"], inst["spec"], priors, sus_covariates=inst["X"])
    delta = {
        "incubation": PeriodConfig(2.0, 2.0, prior=(1.0, 1.0)),
        "delay": PeriodConfig(1.5, 1.0, prior=(1.0, 1.0)),
    }
    fit = FitConfig(datatype="unknown-removal", nsim=1, blockupdate=(1, 2), delta=delta)
    return problem, fit


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_cache_and_latent_invariants(seed):
    problem, fit = _sinr_unknown_removal(seed)
    if problem.history.m < 2:
        pytest.skip("needs at least two infected")
    state = make_state(problem, fit, seed=seed)
    first = state.order[0]
    obs_notif = state.notif.copy()
    for _ in range(200):
        state.sweep()
        core, dens = state.recompute()
        assert abs(core - state.core) <= 1e-10
        assert abs(dens - state.dens) <= 1e-10
        i = state.infected
        assert np.all(state.inf[i] <= state.notif[i]) and np.all(state.notif[i] <= state.rem[i])
        assert np.array_equal(state.notif, obs_notif)
        assert state.inf[first] == state.obs_inf[first] and state.rem[first] == state.obs_rem[first]
        h = state.history()
        assert np.all(np.diff(h.inf_times[: h.m]) >= 0)
    acc = state.acceptance()
    assert "Infection times" in acc and "Removal times" in acc


# chains --------------------------------------------------------------------


def test_known_epidemic_chain_shape(network_data):
    cfg, hist = network_data
    res = run_chain(known_epidemic_problem(cfg, hist), FitConfig(nsim=1))
    assert res.draws.shape == (2, 3)
    assert res.columns == ["Alpha_s[1]", "Alpha_s[2]", LOGLIK]
    assert res.inf_draws is None and res.rem_draws is None


def test_known_removal_columns_and_latent_draws(network_data):
    cfg, hist = network_data
    delta = {"infectious": PeriodConfig(4.0, 2.0, prior=(4.0, 2.0))}
    fit = FitConfig(datatype="known-removal", nsim=25, latent_thin=10, delta=delta)
    res = run_chain(known_removal_problem(cfg, hist), fit, seed=3)
    assert res.columns == ["Alpha_s[1]", "Alpha_s[2]", "Spark", "Infectious period rate", LOGLIK]
    assert res.draws.shape == (26, 5)
    assert res.latent_iterations.tolist() == [0, 10, 20]
    assert res.inf_draws.shape == (3, hist.m)
    assert np.array_equal(res.inf_draws[:, 0], np.full(3, hist.inf_times[0]))


def test_single_chain_equals_run_chain(network_data):
    cfg, hist = network_data
    problem = known_epidemic_problem(cfg, hist)
    fit = FitConfig(nsim=50)
    assert np.array_equal(run_chains(problem, fit, seed=9).chains[0].draws, run_chain(problem, fit, 0, 9).draws)


def test_parallel_matches_sequential(network_data):
    cfg, hist = network_data
    problem = known_removal_problem(cfg, hist)
    base = dict(datatype="known-removal", nsim=40, nchains=3, delta=sir_delta(4.0, 2.0), workers=2)
    seq = run_chains(problem, FitConfig(parallel=False, **base), seed=5)
    par = run_chains(problem, FitConfig(parallel=True, **base), seed=5)
    for a, b in zip(seq.chains, par.chains):
        assert np.array_equal(a.draws, b.draws)
        assert np.array_equal(a.inf_draws, b.inf_draws)
        assert a.acceptance == b.acceptance
    assert not np.array_equal(seq.chains[0].draws, seq.chains[1].draws)


def test_invalid_configurations(network_data):
    cfg, hist = network_data
    problem = known_removal_problem(cfg, hist)
    with pytest.raises(InvalidConfig):
        run_chain(problem, FitConfig(datatype="unknown-removal", nsim=1, delta=sir_delta()))
    with pytest.raises(InvalidConfig):
        run_chain(problem, FitConfig(datatype="known-removal", nsim=1))
    with pytest.raises(InvalidConfig):
        FitConfig(blockupdate=(0, 1))
    with pytest.raises(InvalidConfig):
        Prior("uniform", (1.0, 1.0))
    bad = known_epidemic_problem(cfg, hist)
    bad.priors.sus_coeffs[0] = PriorAndProposal(Prior("uniform", (0.5, 1.0)), 0.1, 0.1)
    with pytest.raises(InvalidConfig):
        run_chain(bad, FitConfig(nsim=1))
    sir_gamma = known_epidemic_problem(cfg, hist)
    sir_gamma.priors.gamma = gamma_pp(1.0, 0.1)
    with pytest.raises(InvalidConfig):
        run_chain(sir_gamma, FitConfig(nsim=1))
    assert Datatype("known-removal") is Datatype.KNOWN_REMOVAL


def test_prior_densities():
    assert Prior("gamma", (2.0, 3.0)).logpdf(0.7) == pytest.approx(stats.gamma(a=2, scale=1 / 3).logpdf(0.7))
    assert Prior("halfnormal", (0.0, 2.0)).logpdf(1.1) == pytest.approx(stats.halfnorm(scale=2).logpdf(1.1))
    truncated = stats.truncnorm(a=-1.0 / 0.5, b=np.inf, loc=1.0, scale=0.5)
    assert Prior("half-normal", (1.0, 0.5)).logpdf(0.3) == pytest.approx(truncated.logpdf(0.3))
    assert Prior("uniform", (0.0, 4.0)).logpdf(1.0) == pytest.approx(-math.log(4))
    assert Prior("gamma", (2.0, 3.0)).logpdf(-1.0) == -math.inf
