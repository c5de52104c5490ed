"""Kernelized joint forecaster with a growing Gram matrix.

The dual form of the joint forecaster: with T stored signals (the current
one appended last), Gram matrix K and k = (K(x_1, x), ..., K(x_T, x))',

    r_i = (Y~_1 ... Y-_i ... Y~_{d-1}) A^{-1} (k', ..., 2k', ..., k')',

where the doubled block and the Y-_i block sit at position i,
Y~_j = -2 (y_1^j - y_1^d, ..., y_{T-1}^j - y_{T-1}^d, -1/2) and Y-_j is the
same with final entry 0.  A = aI + (I+J) kron K is never materialized:
applying A^{-1} reduces to the two T x T systems (aI + dK) and (aI + K),
shared by all classes, exactly as in the linear case.  With the plain dot
product this reproduces the linear forecaster's predictions.

Gram work per trial is O(T^2) plus the factorizations; the forecaster class
caches the Gram matrix and can optionally extend Cholesky factors one row per
trial instead of refactorizing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .core import DimensionMismatch, InvariantViolation, ProbabilityVector, _unwrap, as_float_vector
from .substitution import solve_substitution

_KINDS = ("dot", "rbf", "poly")


@dataclass(frozen=True)
class Kernel:
    """Positive-semidefinite similarity on signals.

    kind "dot":  K(x, y) = x . y
    kind "rbf":  K(x, y) = exp(-|x - y|^2 / (2 sigma^2))
    kind "poly": K(x, y) = (x . y + offset)^degree
    """

    kind: str
    sigma: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}, expected one of {_KINDS}")
        if self.kind == "rbf" and not (self.sigma > 0):
            raise ValueError(f"rbf width must be positive, got {self.sigma}")
        if self.kind == "poly" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError(f"polynomial degree must be an integer >= 1, got {self.degree}")

    def __call__(self, x, y) -> float:
        return kernel_eval(self, x, y)

    def gram(self, signals: np.ndarray) -> np.ndarray:
        """Gram matrix over the rows of ``signals``."""
        x = np.atleast_2d(np.asarray(signals, dtype=float))
        inner = x @ x.T
        if self.kind == "dot":
            return inner
        if self.kind == "poly":
            return (inner + self.offset) ** self.degree
        sq = np.diag(inner)
        dist2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * inner, 0.0)
        return np.exp(-dist2 / (2.0 * self.sigma**2))

    def cross(self, signals: np.ndarray, x) -> np.ndarray:
        """Vector of kernel values between each stored signal and ``x``."""
        xs = np.atleast_2d(np.asarray(signals, dtype=float))
        xa = as_float_vector(x, "signal")
        if xs.shape[0] == 0:
            return np.zeros(0)
        if xs.shape[1] != xa.size:
            raise DimensionMismatch(f"signals have length {xs.shape[1]}, query has {xa.size}")
        inner = xs @ xa
        if self.kind == "dot":
            return inner
        if self.kind == "poly":
            return (inner + self.offset) ** self.degree
        dist2 = np.maximum(np.sum(xs**2, axis=1) + xa @ xa - 2.0 * inner, 0.0)
        return np.exp(-dist2 / (2.0 * self.sigma**2))


def kernel_eval(k: Kernel, x, y) -> float:
    xa = as_float_vector(x, "signal")
    ya = as_float_vector(y, "signal")
    if xa.size != ya.size:
        raise DimensionMismatch(f"signals have lengths {xa.size} and {ya.size}")
    if k.kind == "dot":
        return float(xa @ ya)
    if k.kind == "poly":
        return float((xa @ ya + k.offset) ** k.degree)
    diff = xa - ya
    return float(np.exp(-(diff @ diff) / (2.0 * k.sigma**2)))


@dataclass
class KaarState:
    """Stored history plus kernel and prior scale; grows with the stream."""

    kernel: Kernel
    a: float
    d: int
    signals: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if not (self.a > 0):
            raise ValueError(f"ridge parameter must be positive, got {self.a}")
        if self.d < 2:
            raise ValueError(f"need at least 2 classes, got {self.d}")

    @property
    def t(self) -> int:
        return len(self.signals)


def _solve_pd(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite system, asserting definiteness."""
    try:
        factor = cholesky(mat, lower=True)
    except np.linalg.LinAlgError as exc:
        raise InvariantViolation("kernel system is not positive definite") from exc
    return cho_solve((factor, True), rhs)


def _label_rows(labels, d: int, t_total: int) -> tuple[np.ndarray, np.ndarray]:
    """The Y~ (rows_full) and Y- (rows_bar) blocks as (d-1, T) matrices."""
    m = d - 1
    rows_full = np.zeros((m, t_total))
    if labels:
        ys = np.asarray(labels, dtype=float)
        rows_full[:, : len(labels)] = -2.0 * (ys[:, :m] - ys[:, [m]]).T
    rows_bar = rows_full.copy()
    rows_full[:, -1] = 1.0
    rows_bar[:, -1] = 0.0
    return rows_full, rows_bar


def _generalized_from_solves(rows_full, rows_bar, p, q, d):
    """Assemble r from the two shared solves against the k-stack.

    For each class i the stacked right-hand side is (k, ..., 2k, ..., k);
    through the eigen-split its A^{-1} image has block j equal to
    (1 + 1/m) p + (delta_ij - 1/m) q.
    """
    m = d - 1
    r = np.zeros(d)
    row_sums = rows_full.sum(axis=0)
    for i in range(m):
        total = row_sums - rows_full[i] + rows_bar[i]
        r[i] = (1.0 + 1.0 / m) * (total @ p) + (rows_bar[i] - total / m) @ q
    return r


def kaar_generalized(state: KaarState, x) -> np.ndarray:
    """The shifted generalized prediction r (length d, last entry 0)."""
    xa = as_float_vector(x, "signal")
    if state.signals and state.signals[0].size != xa.size:
        raise DimensionMismatch(
            f"signal has length {xa.size}, stored history has {state.signals[0].size}"
        )
    pts = np.vstack([*state.signals, xa]) if state.signals else xa[None, :]
    gram = state.kernel.gram(pts)
    kt = gram[:, -1]
    t_total = gram.shape[0]
    eye = np.eye(t_total)
    p = _solve_pd(state.a * eye + state.d * gram, kt)
    if state.d == 2:
        q = np.zeros_like(p)  # the deviation channel vanishes for a single block
    else:
        q = _solve_pd(state.a * eye + gram, kt)
    rows_full, rows_bar = _label_rows(state.labels, state.d, t_total)
    return _generalized_from_solves(rows_full, rows_bar, p, q, state.d)


def kaar_predict(state: KaarState, x) -> ProbabilityVector:
    return solve_substitution(kaar_generalized(state, x))


def kaar_update(state: KaarState, x, y) -> KaarState:
    """Append the trial to the stored history; no matrix work."""
    xa = as_float_vector(x, "signal")
    ya = _unwrap(y)
    if ya.size != state.d:
        raise DimensionMismatch(f"outcome has {ya.size} classes, expected {state.d}")
    if state.signals and state.signals[0].size != xa.size:
        raise DimensionMismatch("signal length changed mid-stream")
    return KaarState(
        state.kernel,
        state.a,
        state.d,
        state.signals + [xa],
        state.labels + [ya],
    )


def _extend_cholesky(factor: np.ndarray, col: np.ndarray, diag: float) -> np.ndarray:
    """Grow a lower Cholesky factor by one row for the bordered matrix."""
    t = factor.shape[0]
    out = np.zeros((t + 1, t + 1))
    out[:t, :t] = factor
    if t:
        w = solve_triangular(factor, col, lower=True)
        out[t, :t] = w
        rest = diag - w @ w
    else:
        rest = diag
    if rest <= 0.0:
        raise InvariantViolation("kernel system is not positive definite")
    out[t, t] = np.sqrt(rest)
    return out


class KaarForecaster:
    """Sequential predict/update wrapper around the kernelized forecaster.

    The Gram matrix is cached and extended by one row/column per trial.  With
    ``incremental=True`` the Cholesky factors of (aI + K) and (aI + dK) are
    extended per trial as well instead of being recomputed; both paths give
    the same forecasts.
    """

    def __init__(self, d: int, kernel: Kernel, a: float = 1.0, incremental: bool = False):
        self.state = KaarState(kernel, a, d)
        self.incremental = bool(incremental)
        self._gram = np.zeros((0, 0))
        if self.incremental:
            self._chol1 = np.zeros((0, 0))   # lower factor of aI + K
            self._chold = np.zeros((0, 0))   # lower factor of aI + dK

    @property
    def t(self) -> int:
        return self.state.t

    def _extended_gram(self, xa: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        cross = self.state.kernel.cross(np.array(self.state.signals), xa) if self.state.signals else np.zeros(0)
        kxx = kernel_eval(self.state.kernel, xa, xa)
        t = self._gram.shape[0]
        gram = np.zeros((t + 1, t + 1))
        gram[:t, :t] = self._gram
        gram[:t, t] = cross
        gram[t, :t] = cross
        gram[t, t] = kxx
        return gram, cross, kxx

    def generalized(self, x) -> np.ndarray:
        xa = as_float_vector(x, "signal")
        if self.state.signals and self.state.signals[0].size != xa.size:
            raise DimensionMismatch("signal length changed mid-stream")
        state = self.state
        gram, cross, kxx = self._extended_gram(xa)
        kt = gram[:, -1]
        t_total = gram.shape[0]
        if self.incremental:
            l1 = _extend_cholesky(self._chol1, cross, state.a + kxx)
            ld = _extend_cholesky(self._chold, state.d * cross, state.a + state.d * kxx)
            p = cho_solve((ld, True), kt)
            q = cho_solve((l1, True), kt) if state.d > 2 else np.zeros_like(p)
        else:
            eye = np.eye(t_total)
            p = _solve_pd(state.a * eye + state.d * gram, kt)
            q = _solve_pd(state.a * eye + gram, kt) if state.d > 2 else np.zeros_like(p)
        rows_full, rows_bar = _label_rows(state.labels, state.d, t_total)
        return _generalized_from_solves(rows_full, rows_bar, p, q, state.d)

    def predict(self, x) -> ProbabilityVector:
        return solve_substitution(self.generalized(x))

    def update(self, x, y) -> None:
        xa = as_float_vector(x, "signal")
        gram, cross, kxx = self._extended_gram(xa)
        if self.incremental:
            self._chol1 = _extend_cholesky(self._chol1, cross, self.state.a + kxx)
            self._chold = _extend_cholesky(self._chold, self.state.d * cross, self.state.a + self.state.d * kxx)
        self._gram = gram
        self.state = kaar_update(self.state, xa, y)
