"""Seeded random streams.

Every stochastic routine derives its generator from ``(seed, *keys)`` through
a Philox counter-based bit generator, so independent jobs (runs, trials,
draws) get independent streams regardless of execution order.
"""

import numpy as np


def make_rng(seed, *keys):
    """Return a ``numpy.random.Generator`` keyed by ``seed`` and integer keys."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def normals(rng, size):
    """Standard normal variates by the Box-Muller transform.

    Uses only ``rng.random`` so the output is fixed by the Philox stream.
    """
    size = tuple(np.atleast_1d(size)) if np.ndim(size) else (int(size),)
    n = int(np.prod(size))
    half = (n + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1], keeps the log finite
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * half)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n].reshape(size)
