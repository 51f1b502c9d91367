"""Counter-based random streams keyed by (seed, stream, trial index).

Every trial owns a fixed-width block of uniforms taken from a Philox
generator whose key is ``(seed, stream)``.  Trial ``i`` always sees the
same block no matter how trials are chunked or scheduled, so partial
results can be computed in any order and merged by summing counts.
"""

from __future__ import annotations

import numpy as np

_WORDS_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter step


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def padded_width(width: int) -> int:
    """Round a per-trial draw count up to a whole number of Philox blocks."""
    return -(-int(width) // _WORDS_PER_BLOCK) * _WORDS_PER_BLOCK


def trial_uniforms(seed: int, start: int, stop: int, width: int, stream: int = 0) -> np.ndarray:
    """Uniforms in [0, 1) for trials ``start..stop-1``, shape ``(stop-start, width)``.

    ``width`` is padded internally to a multiple of four; only the first
    ``width`` columns are returned.
    """
    if stop < start:
        raise ValueError("stop must be >= start")
    w = padded_width(width)
    bitgen = np.random.Philox(key=np.array([_check_seed(seed), int(stream)], dtype=np.uint64))
    bitgen = bitgen.advance(start * (w // _WORDS_PER_BLOCK))
    u = np.random.Generator(bitgen).random((stop - start, w))
    return u[:, :width]


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    """A caller-owned Philox generator for ad-hoc sampling."""
    return np.random.Generator(
        np.random.Philox(key=np.array([_check_seed(seed), int(stream)], dtype=np.uint64))
    )
