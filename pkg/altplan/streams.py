#
# altplan - Simulation-based accelerated life test planning.
#
"""
Reproducible random sub-streams.

All the randomness in altplan flows from a single integer *master seed*.
A :class:`Stream` is a master seed plus a *key*, a tuple of non-negative
integers. Child streams are derived by appending integers to the key, and
each stream is turned into a `numpy.random.Generator` through
`numpy.random.SeedSequence(seed, spawn_key=key)`. Streams with different keys
produce independent, non-overlapping random sequences, and the sequence of a
given stream does not depend on which process (or in which order) it is
consumed. This is what makes Monte Carlo results identical for any number of
parallel workers.

The first element of a key selects the *branch* of the computation, so that,
for instance, the evaluations used during the optimizer search never share
random numbers with the evaluations used to report the final RMSE:

=========  ===============================================
Branch     Used by
=========  ===============================================
DE         optimizer moves (mutation, crossover, init)
SEARCH     objective evaluations during the search
REPORT     final re-evaluation of the best plans
COMPARE    neighbourhood comparisons (common random numbers)
SIMULATE   single simulated datasets (CLI `simulate`)
=========  ===============================================
"""

from collections import namedtuple
import numpy as np


DE, SEARCH, REPORT, COMPARE, SIMULATE = range(5)


class Stream(namedtuple('Stream', ['seed', 'key'])):
    """A random sub-stream identified by a master seed and an integer key.

    Arguments:
        seed (int): master seed (>= 0).
        key (tuple of ints): path of the sub-stream, () for the root.
    """
    def __new__(cls, seed, key=()):
        seed = int(seed)
        if seed < 0:
            raise ValueError('The master seed must be >= 0 (got %d).' % seed)
        key = tuple(int(k) for k in key)
        if any(k < 0 for k in key):
            raise ValueError('Stream keys must be non-negative integers.')
        return super(Stream, cls).__new__(cls, seed, key)

    def child(self, *keys):
        """Return the sub-stream obtained appending `keys` to this key."""
        return Stream(self.seed, self.key + tuple(keys))

    def seed_sequence(self):
        return np.random.SeedSequence(self.seed, spawn_key=self.key)

    def generator(self):
        """Return a new `numpy.random.Generator` for this stream."""
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def __str__(self):
        return '%d/%s' % (self.seed, '.'.join(str(k) for k in self.key))
