"""Random number streams.

Every stochastic routine takes a :class:`numpy.random.Generator` backed by
PCG64. Independent streams (one per MCMC chain, per predictive replicate,
per control replicate) are derived from a master seed with
``SeedSequence(seed, spawn_key=(k, ...))``, so stream ``k`` is the same no
matter how many workers run or in which order streams are consumed.
"""

import numpy as np


def make_rng(seed):
    """Return a PCG64 generator; a Generator passes through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def stream(seed, *key):
    """Independent generator for the sub-task identified by ``key``."""
    if seed is None:
        raise ValueError("a master seed is required to derive streams")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
