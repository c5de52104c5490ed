"""Joint aggregating forecaster for multi-class square-loss prediction.

The forecaster mixes all linear experts
    xi_i(x) = 1/d + alpha_i'x   (i = 1..d-1),   xi_d = 1 - sum of the rest
under a Gaussian prior with scale ``a`` and predicts through the threshold
substitution.  Its sufficient statistics are the signal outer-product sum C
and the vector h built from past (y^i - y^d) differences.  On each trial it
forms, for the signal-updated C' and each class i < d,

    b_i = h + (x', ..., 0, ..., x')'      (zero block at position i)
    z_i = -(x', ..., 2x', ..., x')'       (doubled block at position i)
    r_i = -b_i' A^{-1} z_i,   r_d = 0,

where A = aI + (I+J) kron C' has 2C' diagonal blocks and C' off-diagonal
blocks.  I+J (J the all-ones matrix of size d-1) has eigenvalue d on the
all-ones direction and eigenvalue 1 elsewhere, so applying A^{-1} reduces to
the two n x n systems (aI + dC') and (aI + C'); see solve_structured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatch, InvariantViolation, ProbabilityVector, _unwrap, as_float_vector
from .substitution import solve_substitution

# Rank-one incremental inverses are refreshed from scratch this often.
REFRESH_EVERY = 256


@dataclass(frozen=True)
class MaarConfig:
    """Game dimensions and prior scale, validated once at construction."""

    n: int
    d: int
    a: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"signal dimension must be >= 1, got {self.n}")
        if self.d < 2:
            raise ValueError(f"need at least 2 classes, got {self.d}")
        if not (self.a > 0):
            raise ValueError(f"ridge parameter must be positive, got {self.a}")


@dataclass
class MaarState:
    """Sufficient statistics: C = sum x_t x_t', h_i = -2 sum (y^i - y^d) x_t."""

    c: np.ndarray  # (n, n)
    h: np.ndarray  # (d-1, n), row i is block h_i
    t: int = 0

    @classmethod
    def zero(cls, cfg: MaarConfig) -> "MaarState":
        return cls(np.zeros((cfg.n, cfg.n)), np.zeros((cfg.d - 1, cfg.n)), 0)


def solve_structured(a: float, d: int, c: np.ndarray, rhs) -> np.ndarray:
    """Apply (aI + (I+J) kron C)^{-1} to rhs using the eigen-split of I+J.

    ``c`` is the n x n (or T x T, in the kernel case) block; ``rhs`` is a
    vector of length (d-1)*n or a matrix of such columns.  Block means travel
    through (aI + dC)^{-1} and deviations through (aI + C)^{-1}.
    """
    if not (a > 0):
        raise ValueError("structured solve needs a > 0")
    m = d - 1
    n = c.shape[0]
    arr = np.asarray(rhs, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[:, None]
    if arr.shape[0] != m * n:
        raise DimensionMismatch(f"rhs has {arr.shape[0]} rows, expected {m * n}")
    k = arr.shape[1]
    blocks = arr.reshape(m, n, k)
    mean = blocks.mean(axis=0)
    eye = np.eye(n)
    out = np.empty_like(blocks)
    big = np.linalg.solve(a * eye + d * c, mean)
    if m == 1:
        out[0] = big
    else:
        dev = blocks - mean
        small = np.linalg.solve(a * eye + c, dev.transpose(1, 0, 2).reshape(n, m * k))
        out[:] = big + small.reshape(n, m, k).transpose(1, 0, 2)
    flat = out.reshape(m * n, k)
    return flat[:, 0] if single else flat


def _check_signal(x, n: int) -> np.ndarray:
    arr = as_float_vector(x, "signal")
    if arr.size != n:
        raise DimensionMismatch(f"signal has length {arr.size}, expected {n}")
    return arr


def maar_generalized(state: MaarState, cfg: MaarConfig, x) -> np.ndarray:
    """The shifted generalized prediction r (length d, last entry 0)."""
    xa = _check_signal(x, cfg.n)
    m = cfg.d - 1
    n = cfg.n
    cp = state.c + np.outer(xa, xa)

    tiled = np.tile(xa, m)
    stack = np.zeros((m * n, m))
    for i in range(m):
        stack[i * n:(i + 1) * n, i] = xa
    z_cols = -(tiled[:, None] + stack)
    b_cols = state.h.reshape(-1)[:, None] + (tiled[:, None] - stack)

    solved = solve_structured(cfg.a, cfg.d, cp, z_cols)
    r = np.zeros(cfg.d)
    r[:m] = -np.sum(b_cols * solved, axis=0)
    return r


def maar_predict(state: MaarState, cfg: MaarConfig, x) -> ProbabilityVector:
    """Forecast for signal x.  Read-only: the C update is committed by maar_update."""
    return solve_substitution(maar_generalized(state, cfg, x))


def maar_update(state: MaarState, x, y) -> MaarState:
    """Commit the trial: C += x x', h_i -= 2 (y^i - y^d) x."""
    ya = _unwrap(y)
    m = state.h.shape[0]
    if ya.size != m + 1:
        raise DimensionMismatch(f"outcome has {ya.size} classes, expected {m + 1}")
    xa = _check_signal(x, state.c.shape[0])
    diff = ya[:-1] - ya[-1]
    return MaarState(
        state.c + np.outer(xa, xa),
        state.h - 2.0 * diff[:, None] * xa[None, :],
        state.t + 1,
    )


def _sm_apply(minv: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(M + s s')^{-1} v given M^{-1}, without forming the updated inverse."""
    mv = minv @ v
    ms = minv @ s
    denom = 1.0 + s @ ms
    return mv - ms * ((s @ mv) / denom)


def _sm_update(minv: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Rank-one Sherman-Morrison update of M^{-1} for M + s s'."""
    ms = minv @ s
    return minv - np.outer(ms, ms) / (1.0 + s @ ms)


class MaarForecaster:
    """Sequential predict/update wrapper around the joint forecaster.

    With ``incremental=True`` the two n x n inverses behind the structured
    solve are maintained by rank-one updates (refreshed every REFRESH_EVERY
    trials) instead of being refactorized each trial.  Both paths produce the
    same forecasts; the direct path is the default.
    """

    def __init__(self, n: int, d: int, a: float = 1.0, incremental: bool = False):
        self.cfg = MaarConfig(n, d, a)
        self.state = MaarState.zero(self.cfg)
        self.incremental = bool(incremental)
        if self.incremental:
            self._inv1 = np.eye(n) / a   # (aI + C)^{-1}
            self._invd = np.eye(n) / a   # (aI + dC)^{-1}
            self._age = 0

    @property
    def t(self) -> int:
        return self.state.t

    def generalized(self, x) -> np.ndarray:
        if not self.incremental:
            return maar_generalized(self.state, self.cfg, x)
        xa = _check_signal(x, self.cfg.n)
        d = self.cfg.d
        m = d - 1
        # Solves against C' = C + x x' come from the committed inverses via
        # one Sherman-Morrison application each.
        p = _sm_apply(self._invd, np.sqrt(d) * xa, xa)   # (aI + dC')^{-1} x
        q = _sm_apply(self._inv1, xa, xa)                # (aI + C')^{-1} x
        s_h = self.state.h.sum(axis=0)
        common = s_h + (m - 1) * xa
        r = np.zeros(d)
        r[:m] = (1.0 + 1.0 / m) * (common @ p) + self.state.h @ q - (common @ q) / m
        return r

    def predict(self, x) -> ProbabilityVector:
        return solve_substitution(self.generalized(x))

    def update(self, x, y) -> None:
        if self.incremental:
            xa = _check_signal(x, self.cfg.n)
            self._age += 1
            if self._age >= REFRESH_EVERY:
                c2 = self.state.c + np.outer(xa, xa)
                eye = np.eye(self.cfg.n)
                self._inv1 = np.linalg.inv(self.cfg.a * eye + c2)
                self._invd = np.linalg.inv(self.cfg.a * eye + self.cfg.d * c2)
                self._age = 0
            else:
                self._inv1 = _sm_update(self._inv1, xa)
                self._invd = _sm_update(self._invd, np.sqrt(self.cfg.d) * xa)
        self.state = maar_update(self.state, x, y)

    def run_check(self) -> None:
        """Sanity assertion: the prior keeps every system positive definite."""
        eye = np.eye(self.cfg.n)
        for mat in (self.cfg.a * eye + self.state.c, self.cfg.a * eye + self.cfg.d * self.state.c):
            try:
                np.linalg.cholesky(mat)
            except np.linalg.LinAlgError as exc:
                raise InvariantViolation("structured system lost positive definiteness") from exc
