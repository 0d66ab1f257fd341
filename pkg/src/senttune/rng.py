"""Deterministic, splittable random streams.

Every random decision in the package draws from a named stream derived from
a user-facing integer seed plus a tuple of string/int tags.  The tag tuple is
hashed (BLAKE2b, 128 bit) into the key of a counter-based Philox generator,
so streams are independent of each other and of the order in which they are
created.  Identical (seed, tags) always reproduce the identical sequence on
every platform.
"""

import hashlib

import numpy as np


def stream(seed, *tags):
    """Return a ``numpy.random.Generator`` for the (seed, tags) stream."""
    material = "\x1f".join([str(int(seed))] + [str(t) for t in tags])
    digest = hashlib.blake2b(material.encode("utf-8"), digest_size=16).digest()
    key = int.from_bytes(digest, "little")
    return np.random.Generator(np.random.Philox(key=key))
