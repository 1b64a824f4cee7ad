"""Counter-based random streams.

Every independent task (a Monte Carlo draw, a multistart run, a walker) gets
its own Philox generator keyed by the run seed plus integer labels, so
results do not depend on scheduling or worker count.
"""
import zlib

import numpy as np

_LABELS: dict[str, int] = {}


def _label(key) -> int:
    if isinstance(key, str):
        if key not in _LABELS:
            _LABELS[key] = zlib.crc32(key.encode())
        return _LABELS[key]
    k = int(key)
    if k < 0:
        raise ValueError("stream keys must be non-negative")
    return k


def stream(seed: int, *keys) -> np.random.Generator:
    """Generator for the task identified by ``(seed, *keys)``.

    String keys name a purpose (``"start"``, ``"draw"``); integer keys index
    the task within it.
    """
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32, *(_label(k) for k in keys)])
    return np.random.Generator(np.random.Philox(ss))
