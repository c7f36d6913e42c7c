"""Counter-based random streams for reproducible sampling.

Every draw comes from numpy's Philox4x64-10 bit generator keyed by the pair
``(seed mod 2**64, stream)``, where ``stream`` is the input point id.  Trial
``t`` of a stream is the ``t``-th double that stream produces (53 high bits of
the ``t``-th 64-bit output), so a draw depends only on ``(seed, stream, t)``,
never on evaluation order, and is identical on every platform.
"""

import numpy as np

_MASK = (1 << 64) - 1


def stream(seed: int, stream_id: int) -> np.random.Generator:
    key = np.array([int(seed) & _MASK, int(stream_id) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(seed: int, stream_id: int, count: int) -> np.ndarray:
    """The first ``count`` doubles of stream ``(seed, stream_id)``."""
    return stream(seed, stream_id).random(count)
