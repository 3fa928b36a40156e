"""Counter-based random streams.

Every random draw in the package comes from ``stream(seed, *keys)``. A stream
is a Philox generator keyed by the base seed plus a tuple of integer counters
(model index, chunk index, ...), so any block of work can be generated on any
worker and the result never depends on how the blocks were scheduled.
"""
import zlib

import numpy as np

# Draw blocks for path sampling; part of the reproducibility contract, since
# changing it regroups which counters produce which draws.
CHUNK_SIZE = 1024


def _key(k):
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError("stream keys must be non-negative")
        return int(k)
    return zlib.crc32(str(k).encode("utf-8"))


def stream(seed, *keys):
    """Return an independent ``numpy.random.Generator`` for ``(seed, keys)``."""
    if isinstance(seed, np.random.Generator):
        if keys:
            raise ValueError("keys are only meaningful with an integer seed")
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def chunks(total, size=CHUNK_SIZE):
    """Yield ``(index, start, stop)`` for fixed-size blocks covering ``range(total)``."""
    for i, start in enumerate(range(0, total, size)):
        yield i, start, min(start + size, total)
