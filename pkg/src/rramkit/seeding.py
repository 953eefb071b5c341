"""Deterministic substream derivation.

Every random draw in the toolchain comes from a generator obtained through
:func:`substream`. A stream is identified by ``(seed, tag, *index)``; the tag
is hashed with CRC-32 so that the mapping is stable across Python versions
and processes. Streams with different tags or indices are statistically
independent (``numpy.random.SeedSequence`` spawn keys).
"""

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def tag_key(tag):
    return zlib.crc32(tag.encode("utf-8"))


def substream(seed, tag, *index):
    """Return a fresh ``numpy.random.Generator`` for ``(seed, tag, *index)``."""
    seed = int(seed) & MASK64
    key = (tag_key(tag),) + tuple(int(i) for i in index)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def child_seed(seed, tag, *index):
    """Derive a 64-bit integer seed, for objects that store their own seed."""
    seq = np.random.SeedSequence(int(seed) & MASK64,
                                 spawn_key=(tag_key(tag),) + tuple(int(i) for i in index))
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)
