"""Counter-based random streams.

Every draw is addressed by an integer key such as ``(seed, purpose, episode)``,
so results never depend on the order in which runs or cells execute.
"""

import numpy as np

# stream purposes
EXPLORE = 1
MAXIMIZER = 2
INSTANCE = 3
EVAL = 4
TASK = 5


def generator(*key):
    """Return a fresh ``np.random.Generator`` determined only by ``key``."""
    words = [int(k) & 0xFFFFFFFFFFFFFFFF for k in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))

