"""Seeded random streams.

Every random quantity in the package comes from a Philox4x64 counter-based
generator keyed by ``(master_seed, *key)`` through
:class:`numpy.random.SeedSequence` spawn keys. Streams with different keys are
independent, so runs can be dispatched in any order, or in parallel, without
changing a single drawn value.

Gaussian variates are drawn by inversion. The top 53 bits ``m`` of each raw
64-bit Philox output give ``u = (m + 0.5) / 2**53``, strictly inside (0, 1),
which is mapped through the standard normal quantile function
(:func:`scipy.special.ndtri`). Unlike ziggurat or polar rejection, inversion
consumes exactly one raw word per variate, so stream positions are predictable.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# sub-stream tags inside one run
THETA_STREAM = 0
NOISE_STREAM = 1

_INV_2_53 = 2.0 ** -53


def derive_stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(seed, *key)``; equal arguments give equal streams."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    if any(k < 0 for k in key):
        raise ValueError(f"stream key entries must be non-negative, got {key}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def open_uniforms(stream: np.random.Generator, n: int) -> np.ndarray:
    raw = stream.bit_generator.random_raw(n)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def standard_normals(stream: np.random.Generator, n: int) -> np.ndarray:
    """``n`` standard normal variates by inverse CDF."""
    return ndtri(open_uniforms(stream, n))
