"""Deterministic random-stream construction.

Every stochastic step in the pipeline draws from a counter-based Philox
generator whose 128-bit key encodes (master seed, domain, index):

    key word 0 = master seed (uint64)
    key word 1 = (domain << 48) | index

Domains keep the consumers apart; the index is a frame number or filter
step. Noise synthesis additionally presets the Philox counter to the chirp
column, so a chirp-parallel implementation would reproduce the serial
draw order bit for bit. Streams are reproducible across runs, platforms
and worker counts.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

DOMAIN_NOISE = 0
DOMAIN_PF_INIT = 1
DOMAIN_PF_PREDICT = 2
DOMAIN_PF_RESAMPLE = 3
DOMAIN_SCRATCH = 7


def _key(seed: int, domain: int, index: int) -> np.ndarray:
    if index < 0 or index >= (1 << 48):
        raise ValueError(f"stream index {index} outside [0, 2**48)")
    return np.array(
        [seed & _MASK64, ((domain << 48) | index) & _MASK64], dtype=np.uint64
    )


def stream(seed: int, domain: int, index: int = 0) -> np.random.Generator:
    """Generator for (seed, domain, index); independent across tuples."""
    return np.random.Generator(np.random.Philox(key=_key(seed, domain, index)))


def column_stream(
    seed: int, domain: int, index: int, column: int
) -> np.random.Generator:
    """Like :func:`stream`, with the Philox counter preset to ``column``.

    Columns of the same (seed, domain, index) stream stay disjoint for up
    to 2**192 draws each, which is what makes per-chirp noise generation
    order-independent.
    """
    counter = np.array([0, 0, 0, column], dtype=np.uint64)
    return np.random.Generator(
        np.random.Philox(key=_key(seed, domain, index), counter=counter)
    )
