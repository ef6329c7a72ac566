"""Data-augmented Metropolis-Hastings for continuous-time ILMs.

One iteration sweeps, in this order:

1. every transmission parameter with a positive proposal variance, each by a
   random-walk Metropolis step with a normal proposal;
2. every period rate that has a gamma prior, by an exact Gibbs draw
   (skipped for known epidemics);
3. latent event times by independence-sampler moves: a new period is drawn
   from a gamma proposal and anchored at the observed removal (SIR) or
   notification (SINR) time. Updatable individuals (all infected except the
   first ``m0`` in the observed record order) are randomly partitioned into
   blocks that are accepted or rejected jointly.

Each chain owns a PCG64 stream derived from ``(seed, chain_index)``, so
chains are reproducible whether they run sequentially or in worker processes.
"""

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .epidemic import EventHistory, Framework, PeriodSpec, history_from_index_arrays
from .exceptions import InitializationError, InvalidConfig, ValidationError, WrongDatatype
from .kernels import KernelParams, KernelSpec, ParameterState
from .likelihood import _gamma_logpdf_sum, _infection_core
from .rng import stream
from .validation import check_covariates

LOGLIK = "Log-likelihood"
PERIOD_RATE_NAMES = {
    "infectious": "Infectious period rate",
    "incubation": "Incubation period rate",
    "delay": "Delay period rate",
}


class Datatype(str, Enum):
    KNOWN_EPIDEMIC = "known-epidemic"
    KNOWN_REMOVAL = "known-removal"
    UNKNOWN_REMOVAL = "unknown-removal"


@dataclass(frozen=True)
class Prior:
    """Prior on one scalar: ``gamma`` (shape, rate), ``halfnormal`` (loc, scale) or ``uniform`` (lower, upper).

    The half-normal is a normal with the given loc and scale truncated to the
    positive half-line.
    """

    family: str
    hyper: tuple

    def __post_init__(self):
        family = self.family.lower().replace("-", "").replace("_", "")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "hyper", tuple(float(h) for h in self.hyper))
        if len(self.hyper) != 2:
            raise InvalidConfig("priors take exactly two hyperparameters")
        a, b = self.hyper
        if family == "gamma":
            if a <= 0 or b <= 0:
                raise InvalidConfig("gamma prior needs shape > 0 and rate > 0")
        elif family == "halfnormal":
            if b <= 0:
                raise InvalidConfig("half-normal prior needs scale > 0")
        elif family == "uniform":
            if not a < b:
                raise InvalidConfig("uniform prior needs lower < upper")
        else:
            raise InvalidConfig(f"unknown prior family {self.family!r}")

    def in_support(self, x):
        if self.family == "uniform":
            return self.hyper[0] <= x <= self.hyper[1]
        return x > 0

    def logpdf(self, x):
        a, b = self.hyper
        if not self.in_support(x):
            return -math.inf
        if self.family == "gamma":
            return a * math.log(b) - math.lgamma(a) + (a - 1) * math.log(x) - b * x
        if self.family == "halfnormal":
            z = (x - a) / b
            mass = 0.5 * math.erfc(-a / (b * math.sqrt(2.0)))
            return -0.5 * z * z - math.log(b * math.sqrt(2 * math.pi) * mass)
        return -math.log(b - a)


@dataclass
class PriorAndProposal:
    """Prior, per-chain initial values and random-walk variance (0 fixes the parameter)."""

    prior: Prior
    initial: tuple
    variance: float = 0.0

    def __post_init__(self):
        if not isinstance(self.prior, Prior):
            self.prior = Prior(*self.prior)
        self.initial = tuple(float(v) for v in np.atleast_1d(self.initial))
        if not self.initial:
            raise InvalidConfig("at least one initial value is required")
        if not self.variance >= 0:
            raise InvalidConfig("proposal variance must be >= 0")
        self.variance = float(self.variance)

    def initial_for(self, chain):
        if len(self.initial) == 1:
            return self.initial[0]
        if chain >= len(self.initial):
            raise InvalidConfig(f"no initial value for chain {chain + 1}")
        return self.initial[chain]


@dataclass
class ModelPriors:
    """Priors for every estimated transmission parameter.

    Omitted groups are fixed: powers at 1, spark at 0, gamma at 1, and no
    transmissibility covariates.
    """

    sus_coeffs: list
    sus_powers: list | None = None
    trans_coeffs: list | None = None
    trans_powers: list | None = None
    kernel: list = field(default_factory=list)
    spark: PriorAndProposal | None = None
    gamma: PriorAndProposal | None = None

    def slots(self, kernel_kind):
        """(column name, group, position, PriorAndProposal) for every parameter."""
        out = []
        for k, pp in enumerate(self.sus_coeffs):
            out.append((f"Alpha_s[{k + 1}]", "sus", k, pp))
        for k, pp in enumerate(self.sus_powers or []):
            out.append((f"Psi_s[{k + 1}]", "sus_pow", k, pp))
        for k, pp in enumerate(self.trans_coeffs or []):
            out.append((f"Alpha_t[{k + 1}]", "trans", k, pp))
        for k, pp in enumerate(self.trans_powers or []):
            out.append((f"Psi_t[{k + 1}]", "trans_pow", k, pp))
        names = kernel_kind.param_names
        if len(self.kernel) != len(names):
            raise InvalidConfig(f"kernel {kernel_kind.value} needs {len(names)} kernel parameter(s)")
        for k, (name, pp) in enumerate(zip(names, self.kernel)):
            out.append((name, "kernel", k, pp))
        if self.spark is not None:
            out.append(("Spark", "spark", 0, self.spark))
        if self.gamma is not None:
            out.append(("Notification effect", "gamma", 0, self.gamma))
        for name, _, _, pp in out:
            pp_ = pp if isinstance(pp, PriorAndProposal) else None
            if pp_ is None:
                raise InvalidConfig(f"{name}: expected a PriorAndProposal")
        return out


@dataclass
class PeriodConfig:
    """Gamma period distribution with fixed shape and a rate that may be Gibbs-updated.

    ``prior`` is the gamma (a, b) prior on the rate; None keeps the rate at
    its initial value. ``proposal`` overrides the independence-sampler
    proposal (shape, rate); by default the fixed shape and current rate are
    used.
    """

    shape: float
    initial: tuple
    prior: tuple | None = None
    proposal: tuple | None = None

    def __post_init__(self):
        self.shape = float(self.shape)
        self.initial = tuple(float(v) for v in np.atleast_1d(self.initial))
        if self.shape <= 0 or not self.initial or min(self.initial) <= 0:
            raise InvalidConfig("period shape and initial rates must be > 0")
        if self.prior is not None:
            self.prior = tuple(float(v) for v in self.prior)
            if len(self.prior) != 2 or min(self.prior) <= 0:
                raise InvalidConfig("period-rate prior needs (a > 0, b > 0)")
        if self.proposal is not None:
            self.proposal = tuple(float(v) for v in self.proposal)
            if len(self.proposal) != 2 or min(self.proposal) <= 0:
                raise InvalidConfig("period proposal needs (shape > 0, rate > 0)")

    def initial_for(self, chain):
        if len(self.initial) == 1:
            return self.initial[0]
        if chain >= len(self.initial):
            raise InvalidConfig(f"no initial period rate for chain {chain + 1}")
        return self.initial[chain]


@dataclass
class FitConfig:
    datatype: Datatype = Datatype.KNOWN_EPIDEMIC
    nsim: int = 1000
    nchains: int = 1
    parallel: bool = False
    blockupdate: tuple | None = None
    delta: dict | None = None
    latent_thin: int = 10
    workers: int | None = None

    def __post_init__(self):
        self.datatype = Datatype(self.datatype)
        if self.nsim < 1 or self.nchains < 1 or self.latent_thin < 1:
            raise InvalidConfig("nsim, nchains and latent_thin must be >= 1")
        m0, size = self.blockupdate if self.blockupdate is not None else (1, 1)
        if m0 < 1 or size < 1:
            raise InvalidConfig("blockupdate needs m0 >= 1 and block size >= 1")
        self.blockupdate = (int(m0), int(size))
        if self.delta is not None:
            self.delta = {k: v if isinstance(v, PeriodConfig) else PeriodConfig(**v) for k, v in self.delta.items()}


@dataclass
class FitProblem:
    """Observed data plus model: history, kernel, covariates and priors."""

    history: EventHistory
    kernel: KernelSpec
    priors: ModelPriors
    sus_covariates: np.ndarray | None = None
    trans_covariates: np.ndarray | None = None

    @property
    def framework(self):
        return self.history.framework


def period_types(framework):
    return ("infectious",) if Framework(framework) is Framework.SIR else ("incubation", "delay")


def validate_fit(problem, fit):
    framework = problem.framework
    if fit.datatype is Datatype.UNKNOWN_REMOVAL and framework is not Framework.SINR:
        raise InvalidConfig("unknown-removal data needs the SINR framework")
    if fit.datatype is not Datatype.KNOWN_EPIDEMIC:
        types = period_types(framework)
        if fit.delta is None or set(fit.delta) != set(types):
            raise InvalidConfig(f"{fit.datatype.value} fits need delta entries for {', '.join(types)}")
    n = problem.kernel.n
    if problem.history.ids.max() > n:
        raise InvalidConfig("history ids exceed the population size")
    if problem.history.m < 1:
        raise InvalidConfig("history has no infected individuals")
    if fit.blockupdate[0] > problem.history.m:
        raise InvalidConfig("blockupdate m0 exceeds the number of infected individuals")
    slots = problem.priors.slots(problem.kernel.kind)
    for name, _, _, pp in slots:
        for v in pp.initial:
            if not pp.prior.in_support(v) and not (name == "Spark" and v == 0):
                raise InvalidConfig(f"{name}: initial value {v} outside the prior support")
        if len(pp.initial) not in (1, fit.nchains):
            raise InvalidConfig(f"{name}: give one initial value or one per chain")
    if framework is Framework.SIR and problem.priors.gamma is not None:
        raise InvalidConfig("the notification effect only exists in SINR models")


@dataclass
class ChainResult:
    columns: list
    draws: np.ndarray
    iterations: np.ndarray
    acceptance: dict
    latent_ids: np.ndarray
    latent_iterations: np.ndarray
    inf_draws: np.ndarray | None
    rem_draws: np.ndarray | None
    chain_index: int
    seed: int
    wall_time: float = 0.0

    @property
    def parameter_columns(self):
        return [c for c in self.columns if c != LOGLIK]


@dataclass
class PosteriorSample:
    chains: list
    framework: str
    datatype: str
    meta: dict = field(default_factory=dict)

    @property
    def columns(self):
        return self.chains[0].columns

    @property
    def parameter_columns(self):
        return self.chains[0].parameter_columns

    @property
    def nchains(self):
        return len(self.chains)


def gibbs_rate_update(framework, history, period, prior, rng, shape=1.0, datatype=Datatype.KNOWN_REMOVAL):
    """One draw of a period rate from its gamma full conditional.

    With fixed period shape ``k`` and a Gamma(a, b) prior the conditional is
    Gamma(m * k + a, M + b), M being the summed periods of the m infected.
    """
    if Datatype(datatype) is Datatype.KNOWN_EPIDEMIC:
        raise WrongDatatype("period rates are fixed for known epidemics")
    framework = Framework(framework)
    if period not in period_types(framework):
        raise ValidationError(f"{framework.value} has no {period} period")
    inf = history.infected
    if period == "infectious":
        d = history.rem_times[inf] - history.inf_times[inf]
    elif period == "incubation":
        d = history.notif_times[inf] - history.inf_times[inf]
    else:
        d = history.rem_times[inf] - history.notif_times[inf]
    return _gibbs_draw(d, shape, prior, rng)


def _gibbs_draw(periods, shape, prior, rng):
    a, b = prior
    return float(rng.gamma(periods.size * shape + a, 1.0 / (float(np.sum(periods)) + b)))


class ChainState:
    """Mutable state of one chain: parameters, period rates, latent times and cached log-likelihood.

    The cached value is split into the infection component (``core``) and the
    period-density component (``dens``); ``loglik`` is their sum.
    """

    def __init__(self, problem, fit, chain_index, rng):
        validate_fit(problem, fit)
        self.problem = problem
        self.fit = fit
        self.rng = rng
        self.chain_index = chain_index
        self.framework = problem.framework
        self.sinr = self.framework is Framework.SINR
        self.datatype = fit.datatype
        kernel = problem.kernel
        self.kernel = kernel
        n = kernel.n
        self.n = n

        hist = problem.history
        self.obs_inf, self.obs_notif, self.obs_rem = hist.times_by_index(n)
        self.order = (hist.ids[: hist.m] - 1).astype(np.int64)
        self.infected = np.sort(self.order)
        m0, self.block_size = fit.blockupdate
        self.updatable = self.order[m0:] if self.datatype is not Datatype.KNOWN_EPIDEMIC else self.order[:0]

        self.slots = problem.priors.slots(kernel.kind)
        self.names = [s[0] for s in self.slots]
        self.values = np.array([pp.initial_for(chain_index) for _, _, _, pp in self.slots])
        self.accepted = np.zeros(len(self.slots), dtype=np.int64)
        self.proposed = np.zeros(len(self.slots), dtype=np.int64)
        self.latent_accepted = {"inf": 0, "rem": 0}
        self.latent_proposed = {"inf": 0, "rem": 0}

        self.X = self._covariates(problem.sus_covariates, problem.priors.sus_coeffs, "susceptibility")
        self.Z = None
        if problem.priors.trans_coeffs:
            if problem.trans_covariates is None:
                raise InvalidConfig("transmissibility coefficients need transmissibility covariates")
            self.Z = self._covariates(problem.trans_covariates, problem.priors.trans_coeffs, "transmissibility")

        self.ptypes = period_types(self.framework)
        self.use_periods = self.datatype is not Datatype.KNOWN_EPIDEMIC
        self.rates = {}
        self.shapes = {}
        self.period_prior = {}
        self.period_proposal = {}
        if self.use_periods:
            for p in self.ptypes:
                pc = fit.delta[p]
                self.rates[p] = pc.initial_for(chain_index)
                self.shapes[p] = pc.shape
                self.period_prior[p] = pc.prior
                self.period_proposal[p] = pc.proposal
        self.gibbs_types = [p for p in self.ptypes if self.use_periods and self.period_prior[p] is not None]

        self._refresh_all()
        self._init_latent()

    def _covariates(self, x, coeffs, label):
        if x is None:
            x = np.ones((1, self.n))
        x = check_covariates(x, self.n, f"{label} covariates")
        if x.shape[0] != len(coeffs):
            raise InvalidConfig(f"{len(coeffs)} {label} coefficients for {x.shape[0]} covariates")
        return x

    # parameter bookkeeping -------------------------------------------------

    def _group_values(self, values, group, default):
        out = [v for (name, g, k, _), v in zip(self.slots, values) if g == group]
        return np.array(out) if out else default

    def parameter_state(self, values=None):
        values = self.values if values is None else values
        sus = self._group_values(values, "sus", None)
        sus_pow = self._group_values(values, "sus_pow", None)
        trans = self._group_values(values, "trans", None)
        trans_pow = self._group_values(values, "trans_pow", None)
        kern = self._group_values(values, "kernel", np.array([]))
        spark = self._group_values(values, "spark", np.array([0.0]))[0]
        gamma = self._group_values(values, "gamma", np.array([1.0]))[0]
        return ParameterState(
            sus_coeffs=sus,
            sus_powers=sus_pow,
            trans_coeffs=trans,
            trans_powers=trans_pow,
            kernel=KernelParams.from_list(list(kern)),
            spark=spark,
            gamma=gamma,
        )

    def _omega(self, values, group):
        if group == "sus":
            coeffs = self._group_values(values, "sus", None)
            powers = self._group_values(values, "sus_pow", np.ones(coeffs.size))
            return coeffs @ (self.X ** powers[:, None])
        if self.Z is None:
            return np.ones(self.n)
        coeffs = self._group_values(values, "trans", None)
        powers = self._group_values(values, "trans_pow", np.ones(coeffs.size))
        return coeffs @ (self.Z ** powers[:, None])

    def _kernel_matrix(self, values):
        kern = self._group_values(values, "kernel", np.array([]))
        return self.kernel.matrix(list(kern))

    def _scalars(self, values):
        spark = self._group_values(values, "spark", np.array([0.0]))[0]
        gamma = self._group_values(values, "gamma", np.array([1.0]))[0]
        return float(spark), float(gamma)

    def _refresh_all(self):
        self.omega_s = self._omega(self.values, "sus")
        self.omega_t = self._omega(self.values, "trans")
        self.K = self._kernel_matrix(self.values)
        self.spark, self.gamma = self._scalars(self.values)

    # likelihood pieces -----------------------------------------------------

    def core_loglik(self, inf, notif, rem, omega_s=None, omega_t=None, K=None, spark=None, gamma=None):
        infected = self.infected
        first = int(infected[np.argmin(inf[infected])])
        t_obs = float(rem[infected].max())
        return _infection_core(
            inf,
            rem if notif is None else notif,
            rem,
            infected,
            first,
            self.omega_s if omega_s is None else omega_s,
            self.omega_t if omega_t is None else omega_t,
            self.K if K is None else K,
            self.spark if spark is None else spark,
            self.gamma if gamma is None else gamma,
            t_obs,
            self.sinr,
        )

    def dens_loglik(self, inf, notif, rem, rates=None):
        if not self.use_periods:
            return 0.0
        rates = self.rates if rates is None else rates
        i = self.infected
        if not self.sinr:
            return _gamma_logpdf_sum(rem[i] - inf[i], self.shapes["infectious"], rates["infectious"])
        return _gamma_logpdf_sum(notif[i] - inf[i], self.shapes["incubation"], rates["incubation"]) + _gamma_logpdf_sum(
            rem[i] - notif[i], self.shapes["delay"], rates["delay"]
        )

    @property
    def loglik(self):
        return self.core + self.dens

    def recompute(self):
        """(core, dens) evaluated from scratch, ignoring the cache."""
        values = self.values
        core = self.core_loglik(
            self.inf, self.notif, self.rem,
            omega_s=self._omega(values, "sus"),
            omega_t=self._omega(values, "trans"),
            K=self._kernel_matrix(values),
            spark=self._scalars(values)[0],
            gamma=self._scalars(values)[1],
        )
        return core, self.dens_loglik(self.inf, self.notif, self.rem)

    def history(self):
        return history_from_index_arrays(self.framework, self.inf, self.rem, self.notif)

    # initialisation --------------------------------------------------------

    def _proposal(self, ptype):
        prop = self.period_proposal.get(ptype)
        if prop is not None:
            return prop
        return self.shapes[ptype], self.rates[ptype]

    def _init_latent(self):
        self.inf = self.obs_inf.copy()
        self.rem = self.obs_rem.copy()
        self.notif = None if self.obs_notif is None else self.obs_notif.copy()
        upd = self.updatable
        tries = 0
        while True:
            if upd.size:
                if self.sinr:
                    d_inc = self.rng.gamma(self.shapes["incubation"], 1.0 / self.rates["incubation"], size=upd.size)
                    self.inf[upd] = self.notif[upd] - d_inc
                    if self.datatype is Datatype.UNKNOWN_REMOVAL:
                        d_del = self.rng.gamma(self.shapes["delay"], 1.0 / self.rates["delay"], size=upd.size)
                        self.rem[upd] = self.notif[upd] + d_del
                else:
                    d = self.rng.gamma(self.shapes["infectious"], 1.0 / self.rates["infectious"], size=upd.size)
                    self.inf[upd] = self.rem[upd] - d
            self.core = self.core_loglik(self.inf, self.notif, self.rem)
            self.dens = self.dens_loglik(self.inf, self.notif, self.rem)
            if np.isfinite(self.core) and np.isfinite(self.dens):
                return
            tries += 1
            if not upd.size or tries >= 100:
                raise InitializationError(
                    f"chain {self.chain_index + 1}: initial state has zero likelihood"
                    + (f" after {tries} latent draws" if upd.size else "")
                )

    # moves -----------------------------------------------------------------

    def rw_update(self, k):
        """Random-walk Metropolis step for parameter slot ``k``; returns True on acceptance."""
        name, group, pos, pp = self.slots[k]
        if pp.variance <= 0:
            return False
        rng = self.rng
        cur = self.values[k]
        prop = cur + rng.normal(0.0, math.sqrt(pp.variance))
        self.proposed[k] += 1
        prior = pp.prior
        if not prior.in_support(prop) or (group != "spark" and prop <= 0) or prop < 0:
            return False
        values = self.values.copy()
        values[k] = prop
        omega_s, omega_t, K, spark, gamma = self.omega_s, self.omega_t, self.K, self.spark, self.gamma
        if group in ("sus", "sus_pow"):
            omega_s = self._omega(values, "sus")
        elif group in ("trans", "trans_pow"):
            omega_t = self._omega(values, "trans")
        elif group == "kernel":
            K = self._kernel_matrix(values)
        elif group == "spark":
            spark = float(prop)
        else:
            gamma = float(prop)
        core = self.core_loglik(self.inf, self.notif, self.rem, omega_s, omega_t, K, spark, gamma)
        if core == -np.inf:
            return False
        log_a = core - self.core + prior.logpdf(prop) - prior.logpdf(cur)
        if math.log(rng.random()) < log_a:
            self.values = values
            self.omega_s, self.omega_t, self.K, self.spark, self.gamma = omega_s, omega_t, K, spark, gamma
            self.core = core
            self.accepted[k] += 1
            return True
        return False

    def gibbs_update(self, ptype):
        i = self.infected
        if ptype == "infectious":
            d = self.rem[i] - self.inf[i]
        elif ptype == "incubation":
            d = self.notif[i] - self.inf[i]
        else:
            d = self.rem[i] - self.notif[i]
        self.rates[ptype] = _gibbs_draw(d, self.shapes[ptype], self.period_prior[ptype], self.rng)
        self.dens = self.dens_loglik(self.inf, self.notif, self.rem)

    def latent_update(self, members, which, proposal=None):
        """Joint independence-sampler move of infection (``"inf"``) or removal (``"rem"``) times.

        ``members`` are 0-based indices; ``proposal`` overrides the gamma (shape, rate) proposal.
        """
        members = np.asarray(members, dtype=np.int64)
        if which == "inf":
            ptype = "incubation" if self.sinr else "infectious"
        else:
            ptype = "delay"
        a, b = self._proposal(ptype) if proposal is None else proposal
        rng = self.rng
        d_new = rng.gamma(a, 1.0 / b, size=members.size)
        inf, notif, rem = self.inf, self.notif, self.rem
        if which == "inf":
            anchor = notif[members] if self.sinr else rem[members]
            d_old = anchor - inf[members]
            inf = inf.copy()
            inf[members] = anchor - d_new
        else:
            anchor = notif[members]
            d_old = rem[members] - anchor
            rem = rem.copy()
            rem[members] = anchor + d_new
        self.latent_proposed[which] += 1
        core = self.core_loglik(inf, notif, rem)
        if core == -np.inf:
            return False
        dens = self.dens_loglik(inf, notif, rem)
        log_q = _gamma_logpdf_sum(d_old, a, b) - _gamma_logpdf_sum(d_new, a, b)
        log_a = core + dens - self.core - self.dens + log_q
        if math.log(rng.random()) < log_a:
            self.inf, self.rem = inf, rem
            self.core, self.dens = core, dens
            self.latent_accepted[which] += 1
            return True
        return False

    def block_update(self, which):
        upd = self.updatable
        if not upd.size:
            return
        perm = self.rng.permutation(upd)
        for start in range(0, perm.size, self.block_size):
            self.latent_update(perm[start : start + self.block_size], which)

    def sweep(self):
        for k in range(len(self.slots)):
            self.rw_update(k)
        for p in self.gibbs_types:
            self.gibbs_update(p)
        if self.datatype is not Datatype.KNOWN_EPIDEMIC:
            self.block_update("inf")
            if self.datatype is Datatype.UNKNOWN_REMOVAL:
                self.block_update("rem")

    # recording -------------------------------------------------------------

    def columns(self):
        cols = list(self.names)
        cols += [PERIOD_RATE_NAMES[p] for p in self.gibbs_types]
        return cols + [LOGLIK]

    def row(self):
        return np.concatenate([self.values, [self.rates[p] for p in self.gibbs_types], [self.loglik]])

    def acceptance(self):
        out = {}
        for k, name in enumerate(self.names):
            if self.slots[k][3].variance > 0:
                out[name] = float(self.accepted[k] / self.proposed[k]) if self.proposed[k] else 0.0
        if self.datatype is not Datatype.KNOWN_EPIDEMIC and self.updatable.size:
            labels = {"inf": "Infection times", "rem": "Removal times"}
            for key, label in labels.items():
                if self.latent_proposed[key]:
                    out[label] = float(self.latent_accepted[key] / self.latent_proposed[key])
        return out


def rw_mh_update(state, k):
    """Random-walk step for parameter slot ``k`` of ``state``."""
    return state.rw_update(k)


def _updatable_indices(state, ids):
    idx = np.atleast_1d(np.asarray(ids, dtype=np.int64)) - 1
    if not np.isin(idx, state.updatable).all():
        raise ValidationError("only infected individuals beyond the first m0 records can be updated")
    return idx


def independence_update_infection(state, i, proposal=None):
    """Independence-sampler move of the infection time of individual id ``i``."""
    if state.datatype is Datatype.KNOWN_EPIDEMIC:
        raise WrongDatatype("infection times are observed for known epidemics")
    return state.latent_update(_updatable_indices(state, i), "inf", proposal)


def independence_update_removal(state, i, proposal=None):
    """Independence-sampler move of the removal time of individual id ``i`` (SINR, unknown removals)."""
    if state.datatype is not Datatype.UNKNOWN_REMOVAL:
        raise WrongDatatype("removal times are only latent for unknown-removal fits")
    return state.latent_update(_updatable_indices(state, i), "rem", proposal)


def block_update_event_times(state, block, which="inf", proposal=None):
    """Joint move of the infection (or removal) times of every id in ``block``."""
    if which == "rem":
        if state.datatype is not Datatype.UNKNOWN_REMOVAL:
            raise WrongDatatype("removal times are only latent for unknown-removal fits")
    elif state.datatype is Datatype.KNOWN_EPIDEMIC:
        raise WrongDatatype("infection times are observed for known epidemics")
    return state.latent_update(_updatable_indices(state, block), which, proposal)


def run_chain(problem, fit, chain_index=0, seed=0):
    """Run one chain for ``fit.nsim`` iterations; row 0 of the draws is the initial state."""
    t0 = time.perf_counter()
    rng = stream(seed, chain_index)
    state = ChainState(problem, fit, chain_index, rng)
    nsim = fit.nsim
    cols = state.columns()
    draws = np.empty((nsim + 1, len(cols)))
    draws[0] = state.row()
    latent = state.datatype is not Datatype.KNOWN_EPIDEMIC
    order = state.order
    lat_iters = list(range(0, nsim + 1, fit.latent_thin)) if latent else []
    inf_draws = np.empty((len(lat_iters), order.size)) if latent else None
    rem_draws = (
        np.empty((len(lat_iters), order.size)) if state.datatype is Datatype.UNKNOWN_REMOVAL else None
    )
    slot = 0

    def record_latent():
        nonlocal slot
        inf_draws[slot] = state.inf[order]
        if rem_draws is not None:
            rem_draws[slot] = state.rem[order]
        slot += 1

    if latent:
        record_latent()
    for it in range(1, nsim + 1):
        state.sweep()
        draws[it] = state.row()
        if latent and it % fit.latent_thin == 0:
            record_latent()
    return ChainResult(
        columns=cols,
        draws=draws,
        iterations=np.arange(nsim + 1),
        acceptance=state.acceptance(),
        latent_ids=order + 1,
        latent_iterations=np.array(lat_iters, dtype=np.int64),
        inf_draws=inf_draws,
        rem_draws=rem_draws,
        chain_index=chain_index,
        seed=int(seed),
        wall_time=time.perf_counter() - t0,
    )


def default_workers():
    env = os.environ.get("CTILM_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_chain_task(args):
    return run_chain(*args)


def run_chains(problem, fit, seed=0):
    """Run ``fit.nchains`` independent chains; results do not depend on ``fit.parallel``."""
    validate_fit(problem, fit)
    tasks = [(problem, fit, k, seed) for k in range(fit.nchains)]
    workers = min(fit.nchains, fit.workers or default_workers())
    if fit.parallel and fit.nchains > 1 and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chains = list(ex.map(_run_chain_task, tasks))
    else:
        chains = [_run_chain_task(t) for t in tasks]
    return PosteriorSample(
        chains=chains,
        framework=problem.framework.value,
        datatype=fit.datatype.value,
        meta={"seed": int(seed), "nsim": fit.nsim, "nchains": fit.nchains},
    )


def periods_from_rates(framework, shapes, rates):
    """PeriodSpec (SIR) or (incubation, delay) pair from shape and rate dicts."""
    if Framework(framework) is Framework.SIR:
        return PeriodSpec(shapes["infectious"], rates["infectious"])
    return PeriodSpec(shapes["incubation"], rates["incubation"]), PeriodSpec(shapes["delay"], rates["delay"])
