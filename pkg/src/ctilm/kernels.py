"""Infection kernels and infectivity rates.

A susceptible ``j`` is exposed to an infectious ``i`` at rate

    Omega_S(j) * Omega_T(i) * kappa(i, j)

multiplied by ``gamma`` once ``i`` has been notified (SINR only). Indices in
this module are 0-based positions into the kernel matrices; matrices are
oriented source-by-target, so ``kappa(i, j)`` reads row ``i``, column ``j``.
Covariate matrices are stored one column per individual (p x n).
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import (
    DimensionMismatch,
    MissingMatrix,
    ValidationError,
    ZeroDistanceWithPowerLaw,
)
from .validation import check_covariates, check_positive, check_square_matrix


class KernelKind(str, Enum):
    DISTANCE_POWERLAW = "distance-powerlaw"
    DISTANCE_CAUCHY = "distance-cauchy"
    NETWORK_BINARY = "network-binary"
    NETWORK_WEIGHTED = "network-weighted"
    BOTH_POWERLAW = "both-powerlaw"
    BOTH_CAUCHY = "both-cauchy"

    @property
    def uses_distance(self):
        return self in (
            KernelKind.DISTANCE_POWERLAW,
            KernelKind.DISTANCE_CAUCHY,
            KernelKind.BOTH_POWERLAW,
            KernelKind.BOTH_CAUCHY,
        )

    @property
    def uses_network(self):
        return self in (
            KernelKind.NETWORK_BINARY,
            KernelKind.NETWORK_WEIGHTED,
            KernelKind.BOTH_POWERLAW,
            KernelKind.BOTH_CAUCHY,
        )

    @property
    def powerlaw(self):
        return self in (KernelKind.DISTANCE_POWERLAW, KernelKind.BOTH_POWERLAW)

    @property
    def n_params(self):
        return int(self.uses_distance) + int(self.uses_distance and self.uses_network)

    @property
    def param_names(self):
        if self.uses_distance and self.uses_network:
            return ["Spatial parameter", "Network parameter"]
        if self.uses_distance:
            return ["Spatial parameter"]
        return []


@dataclass(frozen=True)
class KernelParams:
    """Kernel parameters: ``beta`` alone, or ``beta`` (=beta1) and ``beta2``."""

    beta: float | None = None
    beta2: float | None = None

    @property
    def beta1(self):
        return self.beta

    def as_list(self, kind):
        kind = KernelKind(kind)
        values = [self.beta, self.beta2][: kind.n_params]
        for name, v in zip(kind.param_names, values):
            if v is None:
                raise ValidationError(f"kernel {kind.value} requires {name}")
            check_positive(float(v), name, allow_zero=name == "Network parameter")
        return [float(v) for v in values]

    @classmethod
    def from_list(cls, values):
        values = list(values) + [None, None]
        return cls(values[0], values[1])


class KernelSpec:
    """Kernel form plus the pairwise matrices it needs.

    Distance kinds need ``distances``, network kinds need ``network`` and the
    combined kinds need both.
    """

    def __init__(self, kind, distances=None, network=None):
        self.kind = KernelKind(kind)
        if self.kind.uses_distance:
            if distances is None:
                raise MissingMatrix(f"kernel {self.kind.value} requires a distance matrix")
            distances = check_square_matrix(distances, "distance matrix", symmetric=True)
        else:
            distances = None
        if self.kind.uses_network:
            if network is None:
                raise MissingMatrix(f"kernel {self.kind.value} requires a contact network")
            network = check_square_matrix(network, "contact network")
            if self.kind is KernelKind.NETWORK_BINARY and not np.isin(network, (0.0, 1.0)).all():
                raise ValidationError("binary network kernel needs a 0/1 contact matrix")
        else:
            network = None
        if distances is not None and network is not None and distances.shape != network.shape:
            raise DimensionMismatch("distance matrix and contact network sizes differ")
        self.distances = distances
        self.network = network
        if self.kind.powerlaw:
            off = ~np.eye(distances.shape[0], dtype=bool)
            if (distances[off] == 0).any():
                raise ZeroDistanceWithPowerLaw(
                    "zero distance between distinct individuals under a power-law kernel"
                )

    @property
    def n(self):
        m = self.distances if self.distances is not None else self.network
        return m.shape[0]

    def __repr__(self):
        return f"KernelSpec({self.kind.value!r}, n={self.n})"

    def matrix(self, params):
        """Dense n x n kernel matrix with zero diagonal."""
        kind = self.kind
        values = params.as_list(kind) if isinstance(params, KernelParams) else list(params)
        if kind is KernelKind.NETWORK_BINARY or kind is KernelKind.NETWORK_WEIGHTED:
            return self.network.copy()
        beta = values[0]
        d = self.distances
        with np.errstate(divide="ignore"):
            if kind.powerlaw:
                k = d ** (-beta)
            else:
                k = beta / (d * d + beta * beta)
        np.fill_diagonal(k, 0.0)
        if kind.uses_network:
            k = k + values[1] * self.network
        return k


def eval_kernel(spec, params, i, j):
    """Kernel value ``kappa(i, j)`` for one ordered pair, straight from the table of forms."""
    if i == j:
        raise ValidationError("kernel is undefined for i == j")
    kind = spec.kind
    values = params.as_list(kind)
    value = 0.0
    if kind.uses_distance:
        d = float(spec.distances[i, j])
        beta = values[0]
        if kind.powerlaw:
            if d == 0:
                raise ZeroDistanceWithPowerLaw(f"d[{i},{j}] = 0 under a power-law kernel")
            value = d ** (-beta)
        else:
            value = beta / (d * d + beta * beta)
    if kind.uses_network:
        c = float(spec.network[i, j])
        value = value + values[1] * c if kind.uses_distance else c
    return value


@dataclass
class ParameterState:
    """Full transmission parameter vector.

    ``sus_powers``/``trans_powers`` default to ones; ``trans_coeffs=None``
    means no transmissibility covariates (Omega_T = 1).
    """

    sus_coeffs: np.ndarray
    sus_powers: np.ndarray | None = None
    trans_coeffs: np.ndarray | None = None
    trans_powers: np.ndarray | None = None
    kernel: KernelParams = field(default_factory=KernelParams)
    spark: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        self.sus_coeffs = _positive_array(self.sus_coeffs, "sus_coeffs", allow_zero=True)
        if self.sus_powers is None:
            self.sus_powers = np.ones_like(self.sus_coeffs)
        self.sus_powers = _positive_array(self.sus_powers, "sus_powers")
        if self.sus_powers.shape != self.sus_coeffs.shape:
            raise DimensionMismatch("sus_powers and sus_coeffs differ in length")
        if self.trans_coeffs is not None:
            self.trans_coeffs = _positive_array(self.trans_coeffs, "trans_coeffs", allow_zero=True)
            if self.trans_powers is None:
                self.trans_powers = np.ones_like(self.trans_coeffs)
            self.trans_powers = _positive_array(self.trans_powers, "trans_powers")
            if self.trans_powers.shape != self.trans_coeffs.shape:
                raise DimensionMismatch("trans_powers and trans_coeffs differ in length")
        if not isinstance(self.kernel, KernelParams):
            self.kernel = KernelParams.from_list(self.kernel)
        self.spark = check_positive(float(self.spark), "spark", allow_zero=True)
        self.gamma = check_positive(float(self.gamma), "gamma")


def _positive_array(values, name, allow_zero=False):
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty vector")
    bad = (v < 0) if allow_zero else (v <= 0)
    if not np.isfinite(v).all() or bad.any():
        raise ValidationError(f"{name} must be {'>= 0' if allow_zero else '> 0'}")
    return v


def _weighted_power_sum(coeffs, powers, x):
    return coeffs @ (x ** powers[:, None])


def susceptibility_vector(params, X, n=None):
    """Omega_S for every individual. ``X=None`` means a single intercept covariate."""
    if X is None:
        if n is None:
            raise DimensionMismatch("population size needed when X is None")
        X = np.ones((1, n))
    X = check_covariates(X, X.shape[-1] if n is None else n, "susceptibility covariates")
    if X.shape[0] != params.sus_coeffs.size:
        raise DimensionMismatch(
            f"{params.sus_coeffs.size} susceptibility coefficients for {X.shape[0]} covariates"
        )
    return _weighted_power_sum(params.sus_coeffs, params.sus_powers, X)


def transmissibility_vector(params, Z, n):
    """Omega_T for every individual; ones when no transmissibility covariates are set."""
    if Z is None or params.trans_coeffs is None:
        return np.ones(n)
    Z = check_covariates(Z, n, "transmissibility covariates")
    if Z.shape[0] != params.trans_coeffs.size:
        raise DimensionMismatch(
            f"{params.trans_coeffs.size} transmissibility coefficients for {Z.shape[0]} covariates"
        )
    return _weighted_power_sum(params.trans_coeffs, params.trans_powers, Z)


def susceptibility(params, X, j):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not 0 <= j < X.shape[1]:
        raise DimensionMismatch(f"no covariate column {j}")
    col = check_covariates(X[:, j : j + 1], 1, "susceptibility covariates")[:, 0]
    if col.size != params.sus_coeffs.size:
        raise DimensionMismatch("coefficient / covariate count mismatch")
    return float(np.sum(params.sus_coeffs * col ** params.sus_powers))


def transmissibility(params, Z, i):
    if Z is None or params.trans_coeffs is None:
        return 1.0
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if not 0 <= i < Z.shape[1]:
        raise DimensionMismatch(f"no covariate column {i}")
    col = check_covariates(Z[:, i : i + 1], 1, "transmissibility covariates")[:, 0]
    if col.size != params.trans_coeffs.size:
        raise DimensionMismatch("coefficient / covariate count mismatch")
    return float(np.sum(params.trans_coeffs * col ** params.trans_powers))


def pair_rate(params, spec, X, Z, i, j, notified=False):
    """lambda^- (or lambda^+ = gamma * lambda^- when ``notified``) for source i, target j."""
    rate = (
        susceptibility(params, _cov_or_ones(X, spec.n), j)
        * transmissibility(params, Z, i)
        * eval_kernel(spec, params.kernel, i, j)
    )
    return params.gamma * rate if notified else rate


def total_rate(params, spec, X, Z, j, infectious=(), notified=()):
    """Total hazard on susceptible ``j``.

    ``infectious`` lists sources not yet notified (all of I(t) under SIR),
    ``notified`` lists notified sources (SINR only).
    """
    total = 0.0
    for i in infectious:
        total += pair_rate(params, spec, X, Z, i, j, notified=False)
    for i in notified:
        total += pair_rate(params, spec, X, Z, i, j, notified=True)
    return total + params.spark


def _cov_or_ones(X, n):
    return np.ones((1, n)) if X is None else X
