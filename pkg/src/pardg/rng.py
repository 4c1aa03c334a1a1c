"""Deterministic keyed random streams.

Every random draw in the package comes from a Philox4x64-10 counter-based
generator (numpy's ``Philox`` bit generator) whose 128-bit key is::

    key = (seed, (tag << 32) | index)

where ``tag`` names the purpose of the stream (:class:`Tag`) and ``index``
distinguishes sub-streams (e.g. the instance number). Uniform doubles are
formed from raw 64-bit outputs as ``(raw >> 11) * 2**-53``, so the stream
depends only on the Philox algorithm, not on numpy's ``Generator`` methods.
"""

from enum import IntEnum

import numpy as np

_MASK64 = (1 << 64) - 1
_TWO_M53 = 1.0 / (1 << 53)


class Tag(IntEnum):
    ROUNDING = 1
    RANDOM_HALF = 2
    SEQUENTIAL_DG = 3
    GRAPH = 4
    QUADRATIC = 5
    CHECK = 6
    DYNAMICS = 7


def stream(seed, tag, index=0):
    if seed < 0 or index < 0 or index >= (1 << 32):
        raise ValueError(f"seed/index out of range: seed={seed}, index={index}")
    key = np.array([seed & _MASK64, ((int(tag) << 32) | index) & _MASK64], dtype=np.uint64)
    return np.random.Philox(key=key)


def uniform(seed, tag, size, index=0):
    """Return ``size`` uniform doubles in [0, 1) from the keyed stream."""
    if size == 0:
        return np.zeros(0)
    raw = stream(seed, tag, index).random_raw(size)
    return (raw >> np.uint64(11)).astype(np.float64) * _TWO_M53

