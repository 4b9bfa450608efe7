"""Seed-to-stream mapping used by every simulator.

Replica ``r`` of a run with base seed ``seed`` draws from a Philox
(counter-based) generator keyed by ``seed ^ r``.  The mapping is part of the
reproducibility contract: the same (seed, r) always gives the same stream.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def replica_rng(seed: int, replica: int = 0) -> np.random.Generator:
    if seed < 0 or replica < 0:
        raise ValueError("seed and replica index must be nonnegative")
    return np.random.Generator(np.random.Philox(key=(int(seed) ^ int(replica)) & _MASK64))
