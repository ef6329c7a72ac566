"""Contact networks and distance matrices.

Spatial networks connect each unordered pair independently with a
probability that decays with distance:

* power-law: ``p = 1 - exp(-nu * d**-beta)``
* Cauchy: ``p = 1 - exp(-beta / (d**2 + beta**2))``
* random: ``p = beta``

Pairs are visited row-major over ``i < j`` and consume one uniform draw each,
so a seed reproduces the same network on any platform.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import BetaOutOfRange, MissingLocations, ValidationError
from .rng import make_rng
from .validation import check_locations, check_positive, check_square_matrix


class NetworkKind(str, Enum):
    BINARY_UNDIRECTED = "binary-undirected"
    BINARY_DIRECTED = "binary-directed"
    WEIGHTED_UNDIRECTED = "weighted-undirected"
    WEIGHTED_DIRECTED = "weighted-directed"

    @property
    def directed(self):
        return self in (NetworkKind.BINARY_DIRECTED, NetworkKind.WEIGHTED_DIRECTED)

    @property
    def binary(self):
        return self in (NetworkKind.BINARY_UNDIRECTED, NetworkKind.BINARY_DIRECTED)

    @classmethod
    def infer(cls, matrix, directed=None):
        if directed is None:
            directed = not np.array_equal(matrix, matrix.T)
        binary = np.isin(matrix, (0.0, 1.0)).all()
        if binary:
            return cls.BINARY_DIRECTED if directed else cls.BINARY_UNDIRECTED
        return cls.WEIGHTED_DIRECTED if directed else cls.WEIGHTED_UNDIRECTED


@dataclass
class ContactNetwork:
    matrix: np.ndarray
    kind: NetworkKind = NetworkKind.BINARY_UNDIRECTED

    def __post_init__(self):
        self.kind = NetworkKind(self.kind)
        self.matrix = check_square_matrix(
            self.matrix, "contact network", symmetric=not self.kind.directed
        )
        if self.kind.binary and not np.isin(self.matrix, (0.0, 1.0)).all():
            raise ValidationError("binary network entries must be 0 or 1")

    @property
    def n(self):
        return self.matrix.shape[0]

    def edges(self):
        """(i, j, weight) triples, 0-based; ``i < j`` only for undirected kinds."""
        m = self.matrix
        if self.kind.directed:
            rows, cols = np.nonzero(m)
        else:
            rows, cols = np.nonzero(np.triu(m, 1))
        return [(int(i), int(j), float(m[i, j])) for i, j in zip(rows, cols)]

    @classmethod
    def from_edges(cls, n, edges, directed=False):
        m = np.zeros((n, n))
        for i, j, w in edges:
            if i == j:
                raise ValidationError(f"self-loop on individual {i + 1}")
            m[i, j] = w
            if not directed:
                m[j, i] = w
        return cls(m, NetworkKind.infer(m, directed=directed))


def euclidean_distances(loc):
    loc = check_locations(loc)
    diff = loc[:, None, :] - loc[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(d, 0.0)
    return d


def connection_probabilities(model, distances=None, beta=None, nu=None, n=None):
    """Pairwise connection probabilities (n x n, zero diagonal)."""
    model = model.lower()
    if model == "random":
        if beta is None or not 0 < beta <= 1:
            raise BetaOutOfRange(f"random network beta must lie in (0, 1], got {beta!r}")
        p = np.full((n, n), float(beta))
    elif model in ("powerlaw", "cauchy"):
        if distances is None:
            raise MissingLocations(f"{model} network model needs locations")
        beta = check_positive(beta, "beta")
        d = np.asarray(distances, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            if model == "powerlaw":
                nu = check_positive(nu, "nu")
                p = -np.expm1(-nu * d ** (-beta))
            else:
                p = -np.expm1(-beta / (d * d + beta * beta))
    else:
        raise ValidationError(f"unknown network model {model!r}")
    np.fill_diagonal(p, 0.0)
    return p


def generate_network(model, loc=None, n=None, beta=None, nu=None, rng=None):
    """Sample an undirected binary contact network.

    ``model`` is one of ``"powerlaw"``, ``"cauchy"`` or ``"random"``; the
    spatial models need ``loc`` (n x 2), the random model only ``n``.
    """
    model = model.lower()
    rng = make_rng(rng)
    if model in ("powerlaw", "cauchy"):
        if loc is None:
            raise MissingLocations(f"{model} network model needs locations")
        d = euclidean_distances(loc)
        n = d.shape[0]
    else:
        if n is None:
            if loc is None:
                raise ValidationError("random network model needs n")
            n = np.asarray(loc).shape[0]
        n = int(n)
        if n < 2:
            raise ValidationError("network needs at least two individuals")
        d = None
    p = connection_probabilities(model, d, beta=beta, nu=nu, n=n)
    iu, ju = np.triu_indices(n, 1)
    u = rng.random(iu.size)
    hit = u < p[iu, ju]
    m = np.zeros((n, n))
    m[iu[hit], ju[hit]] = 1.0
    m[ju[hit], iu[hit]] = 1.0
    return ContactNetwork(m, NetworkKind.BINARY_UNDIRECTED)
