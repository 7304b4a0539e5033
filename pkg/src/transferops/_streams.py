"""Named, splittable random streams.

Every stochastic routine in the package derives its generators from a
single integer seed through :func:`stream`, keyed by small integer tuples.
Derived streams are independent of each other and of execution order, so
batched and serial runs produce bit-identical results.
"""

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for stream ``key`` of the given seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))
