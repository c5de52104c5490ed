"""Euclidean projection of a point onto the probability simplex.

Iterative zeroing scheme: shift the free coordinates so they sum to one,
pin any coordinate that went negative to zero, and repeat.  Each pass either
terminates or permanently pins at least one coordinate, so the loop runs at
most d times.  Projection never increases the squared-distance loss against
any outcome in the simplex, which is why the component-wise forecaster can
project its raw prediction without losing its guarantee.
"""

from __future__ import annotations

import numpy as np

from .core import InvariantViolation, ProbabilityVector, as_float_vector


def project_to_simplex(v) -> ProbabilityVector:
    """Closest simplex point to v in Euclidean distance."""
    g = np.array(as_float_vector(v, "point"), copy=True)
    d = g.size
    if d < 1:
        raise ValueError("cannot project an empty vector")
    free = np.ones(d, dtype=bool)
    for _ in range(d):
        n_free = int(free.sum())
        g[free] -= (g[free].sum() - 1.0) / n_free
        negative = free & (g < 0.0)
        if not negative.any():
            break
        g[negative] = 0.0
        free &= ~negative
    else:
        raise InvariantViolation("simplex projection did not settle in d passes")
    g[~free] = 0.0
    # maximum() clears any -0.0 left by the arithmetic
    return ProbabilityVector(np.maximum(g, 0.0))
