"""Seeded random streams.

Every random quantity is drawn from a Philox counter-based generator. A stream
is identified by ``(seed, stream)``: the seed is a 64-bit integer and the
stream index selects an independent key so that, for example, the data drawn
for a trial and the bootstrap draws of each test never share random numbers.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed, stream=0):
    """Return a ``numpy.random.Generator`` backed by Philox.

    ``seed`` fills the low 64 bits of the Philox key and ``stream`` the high
    64 bits.
    """
    key = (int(seed) & _MASK64) | ((int(stream) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def trial_seed(seed, trial_index):
    """Per-trial seed, ``seed XOR trial_index`` (64-bit)."""
    return (int(seed) ^ int(trial_index)) & _MASK64
