"""Core types for the online probability forecasting game.

At each trial the learner sees a signal, announces a probability vector over
d classes, then observes the outcome (a point of the simplex, one-hot in the
classification case) and pays the squared Euclidean distance between forecast
and outcome, summed over classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Simplex membership tolerances.  All forecasters construct their outputs in
# closed form, so sums are exact up to rounding and these can stay tight.
SUM_TOL = 1e-9
NEG_TOL = -1e-12


class DimensionMismatch(ValueError):
    """Two vectors that must share a length do not."""


class InvariantViolation(RuntimeError):
    """An internal guarantee failed (maps to CLI exit code 3)."""


def as_float_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array, raising on anything else."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ProbabilityVector:
    """A point of the d-simplex: componentwise nonnegative, summing to one."""

    p: np.ndarray

    def __post_init__(self):
        arr = as_float_vector(self.p, "probability vector")
        if arr.size < 1:
            raise ValueError("probability vector must have at least one entry")
        if arr.min() < NEG_TOL:
            raise ValueError(f"negative probability component: {arr.min()!r}")
        total = arr.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "p", _frozen(arr))

    @property
    def d(self) -> int:
        return self.p.size

    def __len__(self) -> int:
        return self.p.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.p, dtype=dtype)


@dataclass(frozen=True)
class PredictionVector:
    """A point of the sum-to-one hyperplane; components may be negative."""

    g: np.ndarray

    def __post_init__(self):
        arr = as_float_vector(self.g, "prediction vector")
        total = arr.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"prediction components sum to {total!r}, not 1")
        object.__setattr__(self, "g", _frozen(arr))

    @property
    def d(self) -> int:
        return self.g.size

    def __len__(self) -> int:
        return self.g.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.g, dtype=dtype)


@dataclass(frozen=True)
class Vertex:
    """Identifies the outcome concentrated on one class (1-based index)."""

    index: int

    def __post_init__(self):
        if not isinstance(self.index, (int, np.integer)) or self.index < 1:
            raise ValueError(f"vertex index must be a positive integer, got {self.index!r}")


def vertex_to_probability(v: Vertex | int, d: int) -> ProbabilityVector:
    """One-hot probability vector with mass 1 at the given class."""
    index = v.index if isinstance(v, Vertex) else int(v)
    if not 1 <= index <= d:
        raise ValueError(f"vertex index {index} out of range [1, {d}]")
    p = np.zeros(d)
    p[index - 1] = 1.0
    return ProbabilityVector(p)


def _unwrap(x) -> np.ndarray:
    if isinstance(x, ProbabilityVector):
        return x.p
    if isinstance(x, PredictionVector):
        return x.g
    return as_float_vector(x)


def brier_loss(y, g) -> float:
    """Squared Euclidean distance between outcome and forecast.

    Accepts ProbabilityVector / PredictionVector wrappers or plain arrays;
    symmetric in its arguments.
    """
    ya = _unwrap(y)
    ga = _unwrap(g)
    if ya.size != ga.size:
        raise DimensionMismatch(f"outcome has {ya.size} classes, forecast has {ga.size}")
    diff = ga - ya
    return float(diff @ diff)


class LossLedger:
    """Per-step loss record plus running total for one online run."""

    def __init__(self):
        self._per_step: list[float] = []
        self._cumulative = 0.0

    def record(self, loss: float) -> None:
        loss = float(loss)
        if not np.isfinite(loss) or loss < 0.0:
            raise ValueError(f"loss must be finite and nonnegative, got {loss!r}")
        self._per_step.append(loss)
        self._cumulative += loss

    @property
    def cumulative(self) -> float:
        return self._cumulative

    @property
    def count(self) -> int:
        return len(self._per_step)

    @property
    def per_step(self) -> np.ndarray:
        return np.array(self._per_step)

    def check_consistent(self, tol: float = 1e-9) -> bool:
        return abs(self._cumulative - float(np.sum(self._per_step))) <= tol
