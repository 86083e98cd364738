"""Counter-based random streams.

Every random draw in the package comes from a generator keyed by
``(root seed, *key)``.  The key is a tuple of small integers such as
``(sweep point, imputation index)`` or ``(trial index,)``, so the stream a
unit of work sees never depends on which worker ran it or in what order.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def _seed_sequence(seed, key):
    return np.random.SeedSequence(entropy=int(seed) & _MASK64,
                                  spawn_key=tuple(int(k) for k in key))


def substream(seed, *key):
    """Return an independent Philox generator for ``(seed, *key)``."""
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, key)))


def derive_seed(seed, *key):
    """Derive a 64-bit child seed, e.g. to hand a trial its own imputation seed."""
    state = _seed_sequence(seed, key).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])


def open_uniform(rng, size):
    """Uniform draws on the open interval (0, 1)."""
    # 53-bit grid shifted by half a step: never 0, never 1.
    k = rng.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (k + 0.5) / float(1 << 53)
