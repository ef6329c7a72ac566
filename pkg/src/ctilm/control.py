"""Ring-culling control experiments.

The epidemic is simulated one checkpoint interval at a time. After each
step, every uninfected individual within distance ``r`` of someone infected
during that step has all susceptibility covariates set to zero, which removes
them from further risk when the spark is 0.
"""

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .epidemic import simulate
from .exceptions import InvalidConfig
from .io import write_rows
from .networks import euclidean_distances
from .rng import stream

# spawn-key tag for control replicate streams
CONTROL_STREAM = 3


class CullMechanism(str, Enum):
    SUSCEPTIBILITY_ZERO = "susceptibility-zero"


def default_grid():
    return np.arange(1.0, 31.0)


@dataclass
class ControlPolicy:
    """Cull radius and the checkpoint times at which culls are applied."""

    radius: float
    time_grid: np.ndarray = field(default_factory=default_grid)
    mechanism: CullMechanism = CullMechanism.SUSCEPTIBILITY_ZERO

    def __post_init__(self):
        self.radius = float(self.radius)
        if not self.radius > 0:
            raise InvalidConfig("cull radius must be > 0")
        self.time_grid = np.asarray(self.time_grid, dtype=float)
        g = self.time_grid
        if g.ndim != 1 or g.size == 0 or g[0] <= 0 or np.any(np.diff(g) <= 0):
            raise InvalidConfig("checkpoint grid must be strictly increasing and start after 0")
        self.mechanism = CullMechanism(self.mechanism)

    def with_radius(self, radius):
        return ControlPolicy(radius, self.time_grid, self.mechanism)


@dataclass
class ControlOutcome:
    n_infected: int
    n_culled: int
    epidemic_length: float
    culled: np.ndarray | None = field(default=None, repr=False)
    history: object = field(default=None, repr=False)


def ring_cull_run(model, loc, init, policy, rng, distances=None):
    """Simulate one controlled epidemic starting from the records in ``init``."""
    n = model.n
    d = euclidean_distances(loc) if distances is None else distances
    if d.shape != (n, n):
        raise InvalidConfig("locations do not match the population size")
    if model.params.spark > 0:
        warnings.warn("spark > 0: culled individuals can still be infected", RuntimeWarning, stacklevel=2)
    X = np.ones((1, n)) if model.sus_covariates is None else np.array(model.sus_covariates, dtype=float)
    X = np.atleast_2d(X)
    culled = np.zeros(n, dtype=bool)
    hist = init
    prev = 0.0
    cfg = model
    for step, cur in enumerate(policy.time_grid):
        # later steps resume at the previous checkpoint, not at the last infection
        start = prev if step else None
        cfg = cfg.replace(sus_covariates=X, initial_epi=hist, tmax=float(cur), start_time=start)
        hist = simulate(cfg, rng)
        inf, _, rem = hist.times_by_index(n)
        infected = np.isfinite(inf)
        new = np.flatnonzero((inf > prev) & (inf <= cur))
        if new.size:
            ring = (d[new] < policy.radius).any(axis=0) & ~infected & ~culled
            if ring.any():
                culled |= ring
                X = X.copy()
                X[:, ring] = 0.0
        prev = float(cur)
        if not ((inf <= prev) & (rem > prev)).any():
            break
    inf, _, rem = hist.times_by_index(n)
    infected = np.isfinite(inf)
    length = float(rem[infected].max() - inf[infected].min())
    return ControlOutcome(int(infected.sum()), int(culled.sum()), length, np.flatnonzero(culled) + 1, hist)


@dataclass
class SweepResult:
    radii: np.ndarray
    infected: np.ndarray
    culled: np.ndarray
    length: np.ndarray

    def means(self):
        return self.infected.mean(axis=1), self.culled.mean(axis=1), self.length.mean(axis=1)

    def sds(self):
        ddof = 1 if self.infected.shape[1] > 1 else 0
        return self.infected.std(axis=1, ddof=ddof), self.culled.std(axis=1, ddof=ddof), self.length.std(axis=1, ddof=ddof)

    def to_csv(self, path=None):
        header = ["radius", "mean_infected", "mean_culled", "mean_length", "sd_infected", "sd_culled", "sd_length"]
        rows = [[r, *m, *s] for r, m, s in zip(self.radii, zip(*self.means()), zip(*self.sds()))]
        return write_rows(path, header, rows)


def _sweep_task(args):
    model, loc, init, policy, seed, ri, rep, d = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = ring_cull_run(model, loc, init, policy, stream(seed, CONTROL_STREAM, ri, rep), distances=d)
    return out.n_infected, out.n_culled, out.epidemic_length


def sweep(model, loc, init, radii, replicates, policy=None, seed=0, workers=1):
    """Replicate-averaged outcomes per radius; replicate ``(k, r)`` uses stream ``(seed, CONTROL_STREAM, k, r)``."""
    if replicates < 1:
        raise InvalidConfig("replicates must be >= 1")
    radii = np.asarray(radii, dtype=float)
    template = policy if policy is not None else ControlPolicy(1.0)
    if model.params.spark > 0:
        warnings.warn("spark > 0: culled individuals can still be infected", RuntimeWarning, stacklevel=2)
    d = euclidean_distances(loc)
    model.rate_inputs()
    tasks = [
        (model, loc, init, template.with_radius(r), int(seed), ri, rep, d)
        for ri, r in enumerate(radii)
        for rep in range(replicates)
    ]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(_sweep_task, tasks))
    else:
        out = [_sweep_task(t) for t in tasks]
    arr = np.array(out, dtype=float).reshape(radii.size, replicates, 3)
    return SweepResult(radii, arr[:, :, 0], arr[:, :, 1], arr[:, :, 2])

