"""Exact log-likelihood of SIR and SINR event histories.

For SIR the log-likelihood is

    sum_{j >= 2} log(eps + Omega_S(j) sum_{i: I_i < I_j <= R_i} Omega_T(i) k(i, j))
  - sum_{i infected} sum_j ((R_i ^ I_j) - (I_i ^ I_j)) lambda_ij
  - eps * sum_j ((t_obs ^ I_j) - I_1)
  + sum_i log f(R_i - I_i; delta)

where ``^`` is the minimum and the first infection (the earliest, lowest id
on ties) is conditioned on. SINR splits each source's infectious window at
its notification time; after notification the pair rate is multiplied by
``gamma``. Period-density terms are dropped when the periods are declared
fixed (``periods=None``).
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .epidemic import EventHistory, Framework, PeriodSpec
from .exceptions import DimensionMismatch, InvalidHistory
from .kernels import KernelSpec, ParameterState, susceptibility_vector, transmissibility_vector


@njit(cache=True)
def _infection_core(inf, notif, rem, infected, first, omega_s, omega_t, K, spark, gamma, t_obs, sinr):
    n = inf.shape[0]
    total = 0.0
    for jj in range(infected.shape[0]):
        j = infected[jj]
        if j == first:
            continue
        tj = inf[j]
        s = 0.0
        for ii in range(infected.shape[0]):
            i = infected[ii]
            k = K[i, j]
            if k == 0.0 or inf[i] >= tj:
                continue
            if sinr:
                if tj <= notif[i]:
                    s += omega_t[i] * k
                elif tj <= rem[i]:
                    s += gamma * omega_t[i] * k
            elif tj <= rem[i]:
                s += omega_t[i] * k
        pressure = omega_s[j] * s + spark
        if pressure <= 0.0:
            return -np.inf
        total += math.log(pressure)

    exposure = 0.0
    for ii in range(infected.shape[0]):
        i = infected[ii]
        ti = inf[i]
        wt = omega_t[i]
        for j in range(n):
            k = K[i, j]
            if k == 0.0 or omega_s[j] == 0.0:
                continue
            tj = inf[j]
            lo = min(ti, tj)
            if sinr:
                a = min(t_obs, notif[i], tj)
                b = min(t_obs, rem[i], tj)
                exposure += wt * k * omega_s[j] * ((a - lo) + gamma * (b - a))
            else:
                exposure += wt * k * omega_s[j] * (min(rem[i], tj) - lo)
    total -= exposure

    if spark > 0.0:
        t1 = inf[first]
        acc = 0.0
        for j in range(n):
            acc += min(t_obs, inf[j]) - t1
        total -= spark * acc
    return total


@njit(cache=True)
def _gamma_logpdf_sum(x, shape, rate):
    if x.shape[0] == 0:
        return 0.0
    const = shape * math.log(rate) - math.lgamma(shape)
    acc = 0.0
    for v in x:
        if v <= 0.0:
            return -np.inf
        acc += (shape - 1.0) * math.log(v) - rate * v
    return acc + const * x.shape[0]


def gamma_logpdf_sum(x, shape, rate):
    return float(_gamma_logpdf_sum(np.ascontiguousarray(x, dtype=float), float(shape), float(rate)))


def infection_loglik(inf, notif, rem, omega_s, omega_t, K, spark, gamma, sinr):
    """Infection component on index-ordered arrays (no period densities)."""
    infected = np.flatnonzero(np.isfinite(inf))
    if infected.size == 0:
        raise InvalidHistory("history has no infected individuals")
    first = int(infected[np.argmin(inf[infected])])
    t_obs = float(rem[infected].max())
    if notif is None:
        notif = rem
    return float(
        _infection_core(
            inf, notif, rem, infected, first, omega_s, omega_t, K,
            float(spark), float(gamma), t_obs, bool(sinr),
        )
    )


def period_logdensity(framework, inf, notif, rem, periods):
    """Sum of gamma log-densities of the observed periods; 0 when ``periods`` is None."""
    if periods is None:
        return 0.0
    infected = np.isfinite(inf)
    if Framework(framework) is Framework.SIR:
        return gamma_logpdf_sum(rem[infected] - inf[infected], periods.shape, periods.rate)
    inc, delay = periods
    return gamma_logpdf_sum(notif[infected] - inf[infected], inc.shape, inc.rate) + gamma_logpdf_sum(
        rem[infected] - notif[infected], delay.shape, delay.rate
    )


@dataclass
class LikelihoodInput:
    """History plus model. ``periods=None`` treats the periods as fixed."""

    history: EventHistory
    kernel: KernelSpec
    params: ParameterState
    sus_covariates: np.ndarray | None = None
    trans_covariates: np.ndarray | None = None
    periods: PeriodSpec | tuple | None = None

    def arrays(self):
        n = self.kernel.n
        if self.history.ids.max() > n:
            raise DimensionMismatch(
                f"history refers to id {self.history.ids.max()} but the kernel has {n} individuals"
            )
        inf, notif, rem = self.history.times_by_index(n)
        omega_s = susceptibility_vector(self.params, self.sus_covariates, n)
        omega_t = transmissibility_vector(self.params, self.trans_covariates, n)
        K = self.kernel.matrix(self.params.kernel)
        return inf, notif, rem, omega_s, omega_t, K


def _loglik(inp, framework):
    if inp.history.framework is not framework:
        raise InvalidHistory(f"expected a {framework.value} history")
    if inp.history.m == 0:
        raise InvalidHistory("history has no infected individuals")
    inf, notif, rem, omega_s, omega_t, K = inp.arrays()
    sinr = framework is Framework.SINR
    ll = infection_loglik(inf, notif, rem, omega_s, omega_t, K, inp.params.spark, inp.params.gamma, sinr)
    if ll == -np.inf:
        return ll
    return ll + period_logdensity(framework, inf, notif, rem, inp.periods)


def log_likelihood_sir(inp):
    return _loglik(inp, Framework.SIR)


def log_likelihood_sinr(inp):
    return _loglik(inp, Framework.SINR)


def log_likelihood(inp):
    if inp.history.framework is Framework.SIR:
        return log_likelihood_sir(inp)
    return log_likelihood_sinr(inp)
