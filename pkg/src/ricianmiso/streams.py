"""Counter-style random streams keyed by (seed, purpose, indices).

Every draw in the package goes through a :class:`RandomStreams` so that a
given (seed, trial, user) always sees the same numbers, whatever order or
process the work is executed in.
"""
import numpy as np

_GEOMETRY = 0
_REGULARIZER = 1
_CHANNEL = 2


class RandomStreams:
    """Factory of independent ``numpy.random.Generator`` objects.

    Parameters
    ----------
    seed : int
        Root entropy, any non-negative integer (u64 in practice).
    """

    def __init__(self, seed):
        seed = int(seed)
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed

    def __repr__(self):
        return f"RandomStreams(seed={self.seed})"

    def _gen(self, *key):
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.PCG64(ss))

    def geometry(self, drop=0, K=0):
        """Generator for user positions of one drop."""
        return self._gen(_GEOMETRY, K, drop)

    def regularizer(self, K=0):
        """Generator for the Monte Carlo estimate of E[1/beta]."""
        return self._gen(_REGULARIZER, K)

    def user(self, trial, k):
        """Generator for the small-scale fading of user ``k`` in ``trial``."""
        return self._gen(_CHANNEL, trial, k)

    def trial(self, trial, K):
        """Per-user generators for one channel realization."""
        return [self.user(trial, k) for k in range(K)]
