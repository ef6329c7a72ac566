"""Event histories and forward simulation of SIR / SINR epidemics.

Individuals carry 1-based ids; id ``k`` maps to row/column ``k - 1`` of the
kernel and covariate matrices. Uninfected individuals have infinite event
times and zero periods.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import (
    DimensionMismatch,
    DuplicateId,
    InconsistentDimensions,
    InvalidHistory,
    NoInfected,
    OrderingViolation,
    ValidationError,
)
from .kernels import KernelSpec, ParameterState, susceptibility_vector, transmissibility_vector
from .rng import make_rng
from .validation import check_positive

INF = np.inf


class Framework(str, Enum):
    SIR = "SIR"
    SINR = "SINR"


@dataclass(frozen=True)
class PeriodSpec:
    """Gamma period distribution with fixed ``shape`` and ``rate``; shape 1 is exponential."""

    shape: float
    rate: float

    def __post_init__(self):
        check_positive(float(self.shape), "period shape")
        check_positive(float(self.rate), "period rate")

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)


@dataclass
class EventHistory:
    """Per-individual event times, sorted by infection time with uninfected last.

    Construct through :func:`build_event_history` unless the arrays are
    already sorted and consistent.
    """

    framework: Framework
    ids: np.ndarray
    inf_times: np.ndarray
    rem_times: np.ndarray
    notif_times: np.ndarray | None = None

    def __post_init__(self):
        self.framework = Framework(self.framework)
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.inf_times = np.asarray(self.inf_times, dtype=float)
        self.rem_times = np.asarray(self.rem_times, dtype=float)
        if self.notif_times is not None:
            self.notif_times = np.asarray(self.notif_times, dtype=float)
        self.validate()

    @property
    def infected(self):
        return np.isfinite(self.inf_times)

    @property
    def m(self):
        return int(self.infected.sum())

    @property
    def n(self):
        return int(self.ids.size)

    @property
    def t_obs(self):
        r = self.rem_times[np.isfinite(self.rem_times)]
        return float(r.max()) if r.size else INF

    @property
    def infectious_periods(self):
        return self._period(self.inf_times, self.rem_times)

    @property
    def incubation_periods(self):
        self._need_sinr()
        return self._period(self.inf_times, self.notif_times)

    @property
    def delay_periods(self):
        self._need_sinr()
        return self._period(self.notif_times, self.rem_times)

    def _period(self, start, end):
        out = np.zeros(self.n)
        inf = self.infected
        out[inf] = end[inf] - start[inf]
        return out

    def _need_sinr(self):
        if self.framework is not Framework.SINR:
            raise ValidationError("only SINR histories have incubation/delay periods")

    def validate(self):
        n = self.ids.size
        arrays = [self.inf_times, self.rem_times]
        if self.framework is Framework.SINR:
            if self.notif_times is None:
                raise InvalidHistory("SINR history needs notification times")
            arrays.append(self.notif_times)
        elif self.notif_times is not None:
            raise InvalidHistory("SIR history must not carry notification times")
        if any(a.shape != (n,) for a in arrays):
            raise DimensionMismatch("event-time vectors differ in length")
        if len(np.unique(self.ids)) != n:
            raise DuplicateId("duplicate individual ids")
        if (self.ids < 1).any():
            raise InvalidHistory("ids must be positive integers")
        if any(np.isnan(a).any() for a in arrays):
            raise InvalidHistory("event times must not be NaN")
        inf = self.infected
        for a in arrays[1:]:
            if (np.isfinite(a) != inf).any():
                raise InvalidHistory("infected individuals need finite times for every event")
        I, R = self.inf_times[inf], self.rem_times[inf]
        # zero-length periods are allowed (e.g. N = R when reducing SINR to SIR)
        if self.framework is Framework.SIR:
            if (R < I).any():
                raise OrderingViolation("removal must not precede infection")
        else:
            N = self.notif_times[inf]
            if (N < I).any() or (R < N).any():
                raise OrderingViolation("need infection <= notification <= removal")
        if np.any(np.diff(self.inf_times[inf]) < 0) or not inf[: self.m].all():
            raise InvalidHistory("records must be sorted by infection time, uninfected last")

    def times_by_index(self, n=None):
        """Event-time arrays indexed by ``id - 1`` for a population of ``n``."""
        n = int(self.ids.max()) if n is None else int(n)
        if self.ids.max() > n:
            raise InconsistentDimensions(f"history has id {self.ids.max()} but population is {n}")
        idx = self.ids - 1
        inf = np.full(n, INF)
        rem = np.full(n, INF)
        inf[idx] = self.inf_times
        rem[idx] = self.rem_times
        notif = None
        if self.framework is Framework.SINR:
            notif = np.full(n, INF)
            notif[idx] = self.notif_times
        return inf, notif, rem

    def head(self, k):
        """First ``k`` infected records as a new history (initial conditions for simulation)."""
        k = min(int(k), self.m)
        sl = slice(0, k)
        return EventHistory(
            self.framework,
            self.ids[sl],
            self.inf_times[sl],
            self.rem_times[sl],
            None if self.notif_times is None else self.notif_times[sl],
        )

    def infected_part(self):
        return self.head(self.m)

    def equals(self, other):
        if self.framework is not other.framework:
            return False
        pairs = [(self.ids, other.ids), (self.inf_times, other.inf_times), (self.rem_times, other.rem_times)]
        if self.notif_times is not None:
            pairs.append((self.notif_times, other.notif_times))
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in pairs)


def build_event_history(framework, inf_times, rem_times, notif_times=None, ids=None):
    """Validate raw event vectors and return a sorted :class:`EventHistory`.

    Missing values (NaN) mark uninfected individuals and become infinity.
    Records are sorted by infection time; ties and uninfected individuals
    are ordered by id.
    """
    framework = Framework(framework)
    inf = np.asarray(inf_times, dtype=float).copy()
    rem = np.asarray(rem_times, dtype=float).copy()
    n = inf.size
    if rem.size != n:
        raise DimensionMismatch("inf_times and rem_times differ in length")
    ids = np.arange(1, n + 1) if ids is None else np.asarray(ids)
    if ids.size != n:
        raise DimensionMismatch("ids and event times differ in length")
    if not np.all(np.equal(np.mod(ids, 1), 0)):
        raise InvalidHistory("ids must be integers")
    ids = ids.astype(np.int64)
    if len(np.unique(ids)) != n:
        raise DuplicateId("duplicate individual ids")
    if framework is Framework.SINR:
        if notif_times is None:
            raise InvalidHistory("SINR history needs notification times")
        notif = np.asarray(notif_times, dtype=float).copy()
        if notif.size != n:
            raise DimensionMismatch("notification times differ in length")
        arrays = (inf, notif, rem)
    else:
        notif = None
        arrays = (inf, rem)
    for a in arrays:
        a[np.isnan(a)] = INF
    finite = np.isfinite(inf)
    for a in arrays[1:]:
        if (np.isfinite(a) != finite).any():
            raise InvalidHistory("each individual must have all event times finite or all infinite")
    if framework is Framework.SIR:
        bad = finite & (rem < inf)
    else:
        bad = finite & ((notif < inf) | (rem < notif))
    if bad.any():
        raise OrderingViolation(f"event times out of order for ids {ids[bad].tolist()}")
    order = np.lexsort((ids, inf))
    return EventHistory(
        framework,
        ids[order],
        inf[order],
        rem[order],
        None if notif is None else notif[order],
    )


def history_from_index_arrays(framework, inf, rem, notif=None):
    """History for a population where position ``k`` holds id ``k + 1``."""
    return build_event_history(framework, inf, rem, notif, ids=np.arange(1, len(inf) + 1))


def epidemic_statistics(hist):
    """(T1, T2, T3, T4): infected count, mean and variance of removal times, epidemic length.

    The variance uses divisor m - 1 and is 0 for a single infected individual;
    the length is the last removal minus the first infection.
    """
    inf = hist.infected
    m = int(inf.sum())
    if m == 0:
        raise NoInfected("no infected individuals")
    r = hist.rem_times[inf]
    t2 = float(np.mean(r))
    t3 = float(np.var(r, ddof=1)) if m > 1 else 0.0
    t4 = float(r.max() - hist.inf_times[inf].min())
    return m, t2, t3, t4


@dataclass
class SimConfig:
    """Everything needed to simulate one epidemic.

    ``periods`` is a :class:`PeriodSpec` for SIR and an (incubation, delay)
    pair for SINR. ``initial_epi`` holds already-infected records; without it
    a uniformly chosen individual is infected at time 0. ``start_time``
    (default: last infection time in ``initial_epi``) is where the clock
    resumes when restarting from a partial history.
    """

    framework: Framework
    kernel: KernelSpec
    params: ParameterState
    periods: object
    sus_covariates: np.ndarray | None = None
    trans_covariates: np.ndarray | None = None
    initial_epi: EventHistory | None = None
    tmax: float = INF
    start_time: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.framework = Framework(self.framework)
        if self.framework is Framework.SIR:
            if not isinstance(self.periods, PeriodSpec):
                raise ValidationError("SIR needs a single PeriodSpec")
        else:
            if len(self.periods) != 2 or not all(isinstance(p, PeriodSpec) for p in self.periods):
                raise ValidationError("SINR needs (incubation, delay) PeriodSpecs")
        n = self.kernel.n
        for name in ("sus_covariates", "trans_covariates"):
            x = getattr(self, name)
            if x is not None and np.atleast_2d(x).shape[1] != n:
                raise InconsistentDimensions(f"{name} has {np.atleast_2d(x).shape[1]} columns, kernel has {n}")
        if self.initial_epi is not None:
            if self.initial_epi.framework is not self.framework:
                raise ValidationError("initial_epi framework differs from the simulation framework")
            if self.initial_epi.m and self.initial_epi.ids[self.initial_epi.infected].max() > n:
                raise InconsistentDimensions("initial_epi refers to ids beyond the population")
        if not self.tmax > 0:
            raise ValidationError("tmax must be positive")

    @property
    def n(self):
        return self.kernel.n

    def rate_inputs(self):
        """(kernel matrix, Omega_S, Omega_T); cached since they do not change during a run."""
        if "K" not in self._cache:
            self._cache["K"] = self.kernel.matrix(self.params.kernel)
        if "omega" not in self._cache:
            omega_s = susceptibility_vector(self.params, self.sus_covariates, self.n)
            omega_t = transmissibility_vector(self.params, self.trans_covariates, self.n)
            self._cache["omega"] = (omega_s, omega_t)
        return (self._cache["K"], *self._cache["omega"])

    def replace(self, **changes):
        values = {k: getattr(self, k) for k in (
            "framework", "kernel", "params", "periods", "sus_covariates",
            "trans_covariates", "initial_epi", "tmax", "start_time")}
        values.update(changes)
        out = SimConfig(**values)
        # the kernel matrix only depends on the kernel and its parameters
        if "K" in self._cache and out.kernel is self.kernel and out.params is self.params:
            out._cache["K"] = self._cache["K"]
        return out


def _draw_periods(cfg, rng):
    if cfg.framework is Framework.SIR:
        return (cfg.periods.sample(rng),)
    inc, delay = cfg.periods
    return inc.sample(rng), delay.sample(rng)


def simulate(cfg, rng=None):
    """Simulate an epidemic with competing exponential waiting times.

    After every event (infection, notification or removal) each susceptible
    with positive hazard draws ``W_j ~ Exp(lambda_j)`` in id order; the
    smallest wins unless a scheduled notification/removal comes first, in
    which case the clock moves to that event and all waiting times are
    redrawn. Ties go to the lowest id. The run stops when nobody is
    infectious or when the next infection would fall after ``tmax``.
    Removal times drawn before ``tmax`` are kept even if they exceed it.
    """
    rng = make_rng(rng)
    n = cfg.n
    sinr = cfg.framework is Framework.SINR
    K, omega_s, omega_t = cfg.rate_inputs()
    spark = cfg.params.spark
    gamma = cfg.params.gamma

    inf = np.full(n, INF)
    rem = np.full(n, INF)
    notif = np.full(n, INF) if sinr else None

    if cfg.initial_epi is not None and cfg.initial_epi.m > 0:
        init = cfg.initial_epi.infected_part()
        idx = init.ids - 1
        inf[idx] = init.inf_times
        rem[idx] = init.rem_times
        if sinr:
            notif[idx] = init.notif_times
        t = float(init.inf_times.max())
    else:
        k = int(rng.integers(n))
        inf[k] = 0.0
        periods = _draw_periods(cfg, rng)
        if sinr:
            notif[k] = periods[0]
            rem[k] = periods[0] + periods[1]
        else:
            rem[k] = periods[0]
        t = 0.0
    if cfg.start_time is not None:
        if cfg.start_time < t:
            raise ValidationError("start_time precedes the last initial infection")
        t = float(cfg.start_time)

    tmax = cfg.tmax
    while True:
        active = (inf <= t) & (rem > t)
        if not active.any():
            break
        src = np.flatnonzero(active)
        w = omega_t[src].copy()
        if sinr:
            w[notif[src] <= t] *= gamma
            pending = np.where(notif[src] > t, notif[src], rem[src])
        else:
            pending = rem[src]
        next_sched = pending.min()

        pressure = w @ K[src]
        rates = omega_s * pressure + spark
        susceptible = np.isinf(inf)
        cand = np.flatnonzero(susceptible & (rates > 0))
        t_inf = INF
        if cand.size:
            waits = rng.exponential(1.0 / rates[cand])
            k = int(np.argmin(waits))
            t_inf = t + waits[k]
        if min(t_inf, next_sched) > tmax:
            break
        if t_inf >= next_sched:
            t = next_sched
            continue
        j = int(cand[k])
        inf[j] = t_inf
        periods = _draw_periods(cfg, rng)
        if sinr:
            notif[j] = t_inf + periods[0]
            rem[j] = notif[j] + periods[1]
        else:
            rem[j] = t_inf + periods[0]
        t = t_inf

    return history_from_index_arrays(cfg.framework, inf, rem, notif)
