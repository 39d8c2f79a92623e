"""Counter-based random streams for reproducible, order-independent draws.

Every stochastic operation in the library draws from a Philox generator
keyed by ``(seed, step, operation tag, index)``.  Because the key fully
determines the stream, results do not depend on how work is scheduled
across workers or on how many draws other operations consumed.
"""

from __future__ import annotations

import numpy as np

# Operation tags (one per stochastic operation; 8 bits available).
TAG_INIT = 1
TAG_WARM_START = 2
TAG_RESAMPLE = 3
TAG_REFRESH = 4
TAG_GENERATE = 5

_MASK64 = (1 << 64) - 1
_STEP_BITS = 32
_TAG_BITS = 8
_INDEX_BITS = 24


def stream(seed: int, step: int = 0, tag: int = 0, index: int = 0) -> np.random.Generator:
    """Return an independent generator keyed by (seed, step, tag, index).

    ``step`` must fit in 32 bits, ``tag`` in 8 and ``index`` in 24; the
    three are packed into the second Philox key word, the seed fills the
    first.
    """
    if not 0 <= step < (1 << _STEP_BITS):
        raise ValueError(f"step out of range: {step}")
    if not 0 <= tag < (1 << _TAG_BITS):
        raise ValueError(f"tag out of range: {tag}")
    if not 0 <= index < (1 << _INDEX_BITS):
        raise ValueError(f"index out of range: {index}")
    word = (step << (_TAG_BITS + _INDEX_BITS)) | (tag << _INDEX_BITS) | index
    key = np.array([seed & _MASK64, word], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
