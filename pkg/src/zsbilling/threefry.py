"""Threefry-2xW counter-based block generator (20 rounds), vectorized over counters.

Output block ``n`` is a pure function of ``(key, counter n)``, so any position
of a stream can be regenerated without replaying the positions before it.
"""

from __future__ import annotations

import numpy as np

_PARAMS = {
    64: (np.uint64, 0x1BD11BDAA9FC1A22, (16, 42, 12, 31, 16, 32, 24, 21)),
    32: (np.uint32, 0x1BD11BDA, (13, 15, 26, 6, 17, 29, 16, 24)),
}


def threefry2x(key, counters, width: int = 64, rounds: int = 20):
    """Encrypt counter pairs under a two-word key.

    ``key`` is a pair of ints; ``counters`` is an array of shape ``(n, 2)``
    (or a single pair). Returns an array of the same shape.
    """
    dtype, parity, rotations = _PARAMS[width]
    ctr = np.asarray(counters, dtype=dtype)
    single = ctr.ndim == 1
    ctr = np.atleast_2d(ctr)

    mask = (1 << width) - 1
    k0, k1 = int(key[0]) & mask, int(key[1]) & mask
    ks = [dtype(k0), dtype(k1), dtype(parity ^ k0 ^ k1)]
    w = dtype(width)

    with np.errstate(over="ignore"):
        x0 = ctr[:, 0] + ks[0]
        x1 = ctr[:, 1] + ks[1]
        for r in range(rounds):
            rot = dtype(rotations[r % 8])
            x0 = x0 + x1
            x1 = (x1 << rot) | (x1 >> (w - rot))
            x1 = x1 ^ x0
            if r % 4 == 3:
                i = r // 4 + 1
                x0 = x0 + ks[i % 3]
                x1 = x1 + ks[(i + 1) % 3] + dtype(i)

    out = np.stack([x0, x1], axis=1)
    return out[0] if single else out
