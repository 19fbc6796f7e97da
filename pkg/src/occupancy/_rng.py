"""Counter-based random streams keyed by (seed, *keys)."""
import numpy as np


def make_rng(seed, *keys):
    """Return a Philox generator whose stream depends only on ``seed`` and ``keys``.

    Distinct key tuples give statistically independent streams, so work can be
    split across threads without changing any draw.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
