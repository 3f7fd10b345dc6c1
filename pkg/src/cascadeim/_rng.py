"""Counter-based random streams built on numpy's Philox generator.

Every stochastic operation in the library draws from a Philox stream keyed
by ``(seed, stream)``, where ``stream`` is a small constant that keeps the
subsystems (dataset generation, world sampling, pipeline coin flips, ...)
on disjoint streams even when the user reuses one seed.

Work units (cascades, simulation worlds) own fixed-width blocks of the
stream.  Philox emits 4 uint64 words per counter increment, so a block
whose width is a multiple of 4 doubles can be reached with a single
``advance`` call.  Consequences:

* unit ``i`` is reproducible in isolation from ``(seed, stream, i)``;
* generating units in chunks, in any order or in parallel, yields exactly
  the same values as one sequential pass.
"""

from __future__ import annotations

import numpy as np

STREAM_GRAPH = 0
STREAM_DATASET = 1
STREAM_WORLDS = 2
STREAM_PIPELINE = 3

_WORDS_PER_BLOCK = 4  # uint64 outputs per Philox counter increment


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"rng seed must be a uint64, got {seed}")
    return seed


def padded_width(width: int) -> int:
    """Round a per-unit draw budget up to a whole number of Philox blocks."""
    if width < 0:
        raise ValueError("width must be non-negative")
    return -(-width // _WORDS_PER_BLOCK) * _WORDS_PER_BLOCK


def generator(seed: int, stream: int) -> np.random.Generator:
    """A fresh generator on the (seed, stream) Philox stream."""
    return np.random.Generator(np.random.Philox(key=[check_seed(seed), stream]))


def block_uniforms(
    seed: int, stream: int, first_unit: int, num_units: int, width: int
) -> np.ndarray:
    """Uniforms for units [first_unit, first_unit + num_units), one row each.

    ``width`` must already be padded (see :func:`padded_width`); row ``i``
    does not depend on how many units are drawn in the same call.
    """
    if width % _WORDS_PER_BLOCK:
        raise ValueError(f"width must be a multiple of {_WORDS_PER_BLOCK}")
    bit_gen = np.random.Philox(key=[check_seed(seed), stream])
    if first_unit:
        bit_gen.advance(first_unit * width // _WORDS_PER_BLOCK)
    out = np.random.Generator(bit_gen).random(num_units * width)
    return out.reshape(num_units, width)
