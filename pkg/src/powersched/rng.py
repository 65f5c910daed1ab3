"""Counter-based random streams.

Every random draw in the package comes from ``stream(master_seed, *path)``:

* ``path`` is a tuple of non-negative integers (for example ``(instance_index,
  trial_index)``).  It is folded into a single 64-bit ``stream_id`` with
  splitmix64: ``sid = 0; for p in path: sid = splitmix64(sid ^ splitmix64(p + 1))``.
* The generator is Philox-4x64-10 keyed with ``(master_seed mod 2**64, sid)``
  and counter starting at zero.

Philox is a published counter-based generator, so another implementation can
rebuild the same streams from the same two key words.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def stream_id(*path: int) -> int:
    sid = 0
    for p in path:
        if p < 0:
            raise ValueError("stream path components must be non-negative")
        sid = splitmix64(sid ^ splitmix64(int(p) + 1))
    return sid


def stream(master_seed: int, *path: int) -> np.random.Generator:
    key = np.array([int(master_seed) & MASK64, stream_id(*path)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
