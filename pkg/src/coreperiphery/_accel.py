"""Aitken extrapolation for slowly contracting fixed-point iterations.

Both EM and the degree-only fit converge linearly, often with rate close to
1 on weakly structured networks; periodically jumping to the inferred
geometric limit saves hundreds of iterations.
"""

from __future__ import annotations

import numpy as np

MAX_BOOST = 50.0


def aitken_extrapolate(history: list[np.ndarray]) -> np.ndarray | None:
    """Geometric-limit estimate from the last three iterates, or None when
    the sequence is not contracting cleanly."""
    p2, p1, p0 = history[-1], history[-2], history[-3]
    d1 = p2 - p1
    d0 = p1 - p0
    norm0 = float(np.linalg.norm(d0))
    if norm0 == 0.0:
        return None
    rate = float(np.linalg.norm(d1)) / norm0
    if not 0.0 < rate < 0.9999:
        return None
    boost = min(rate / (1.0 - rate), MAX_BOOST)
    return p2 + d1 * boost
