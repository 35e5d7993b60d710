"""Zero-sum matrix games solved by a small dense simplex.

The row player maximizes.  For the rescaled matrix
``B = (A - min(A)) / (max(A) - min(A)) + 1`` (entries in ``[1, 2]``) the
column player's normalized program

    maximize sum(x)  subject to  B x <= 1,  x >= 0

is feasible at the origin, bounded, and its optimum ``S`` gives the value
``1/S`` of ``B``, mapped back affinely to ``A``.  ``w = x/S`` is an optimal
column strategy and the program's duals, scaled the same way, an optimal
row strategy.  Pivoting uses Bland's
rule, so degenerate ties always resolve to the lowest move index.

The numeric core is jitted so the equation-system kernels can call it from
inside their own compiled loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

TAU_LP = 1e-10
# reduced-cost and ratio-tie threshold, far below TAU_LP so that nearly
# tied games are still solved to full precision
_TAU_COST = 1e-15


@dataclass(frozen=True)
class MixedStrategy:
    """A distribution over a tuple of moves (zero-probability moves allowed)."""

    moves: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.moves) != len(self.probs):
            raise ValueError("moves and probabilities differ in length")
        if any(p < -TAU_LP or p > 1 + TAU_LP for p in self.probs):
            raise ValueError(f"probabilities outside [0,1]: {self.probs}")
        if self.moves and abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {sum(self.probs)}, not 1")

    @classmethod
    def point(cls, move: str, moves: Sequence[str] | None = None) -> MixedStrategy:
        moves = tuple(moves) if moves is not None else (move,)
        return cls(moves, tuple(1.0 if m == move else 0.0 for m in moves))

    @classmethod
    def uniform(cls, moves: Sequence[str]) -> MixedStrategy:
        moves = tuple(moves)
        return cls(moves, tuple(1.0 / len(moves) for _ in moves))

    @classmethod
    def from_dict(cls, dist: dict[str, float]) -> MixedStrategy:
        return cls(tuple(dist), tuple(float(p) for p in dist.values()))

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(m for m, p in zip(self.moves, self.probs) if p > 0)

    def prob(self, move: str) -> float:
        for m, p in zip(self.moves, self.probs):
            if m == move:
                return p
        return 0.0

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.moves, self.probs))

    def __str__(self):
        return " ".join(f"{m}:{p:.6f}" for m, p in zip(self.moves, self.probs) if p > 0)


@dataclass(frozen=True)
class GameMatrix:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"game matrix must be at least 1x1, got shape {a.shape}")
        if a.shape != (len(self.rows), len(self.cols)):
            raise ValueError("row/column labels do not match matrix shape")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ValueError("game matrix entries must be finite and nonnegative")
        object.__setattr__(self, "entries", a)

    @classmethod
    def of(cls, entries, rows=None, cols=None) -> GameMatrix:
        a = np.atleast_2d(np.asarray(entries, dtype=float))
        rows = tuple(rows) if rows is not None else tuple(str(i) for i in range(a.shape[0]))
        cols = tuple(cols) if cols is not None else tuple(str(j) for j in range(a.shape[1]))
        return cls(rows, cols, a)


@dataclass(frozen=True)
class GameSolution:
    value: float
    row_strategy: MixedStrategy
    col_strategy: MixedStrategy


@njit(cache=True)
def _pure_saddle(a):
    """Return (row, col) of a pure saddle point, or (-1, -1)."""
    m, n = a.shape
    best_r, lower = 0, -np.inf
    for i in range(m):
        lo = a[i, 0]
        for j in range(1, n):
            if a[i, j] < lo:
                lo = a[i, j]
        if lo > lower:
            lower, best_r = lo, i
    best_c, upper = 0, np.inf
    for j in range(n):
        hi = a[0, j]
        for i in range(1, m):
            if a[i, j] > hi:
                hi = a[i, j]
        if hi < upper:
            upper, best_c = hi, j
    if lower >= upper:
        return best_r, best_c
    return -1, -1


@njit(cache=True)
def _simplex(a, z, w):
    """Solve the game ``a`` in place: fill strategies ``z``, ``w``; return value."""
    m, n = a.shape
    r, c = _pure_saddle(a)
    if r >= 0:
        z[:] = 0.0
        w[:] = 0.0
        z[r] = 1.0
        w[c] = 1.0
        return a[r, c]

    # rescale to [1, 2] so pivot sizes do not depend on how close the entries are
    lo = a.min()
    span = a.max() - lo
    width = n + m + 1
    t = np.zeros((m + 1, width))
    for i in range(m):
        for j in range(n):
            t[i, j] = (a[i, j] - lo) / span + 1.0
        t[i, n + i] = 1.0
        t[i, width - 1] = 1.0
    for j in range(n):
        t[m, j] = -1.0
    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        basis[i] = n + i

    for _ in range(10000):
        enter = -1
        for j in range(n + m):
            if t[m, j] < -_TAU_COST:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best = np.inf
        for i in range(m):
            if t[i, enter] > TAU_LP:
                ratio = t[i, width - 1] / t[i, enter]
                if ratio < best - _TAU_COST or (
                    abs(ratio - best) <= _TAU_COST and basis[i] < basis[leave]
                ):
                    best, leave = ratio, i
        piv = t[leave, enter]
        for j in range(width):
            t[leave, j] /= piv
        for i in range(m + 1):
            if i != leave and t[i, enter] != 0.0:
                f = t[i, enter]
                for j in range(width):
                    t[i, j] -= f * t[leave, j]
        basis[leave] = enter

    total = t[m, width - 1]
    w[:] = 0.0
    for i in range(m):
        if basis[i] < n:
            w[basis[i]] = t[i, width - 1]
    for i in range(m):
        z[i] = t[m, n + i]
    for k in range(n):
        if w[k] < 0.0:
            w[k] = 0.0
    for k in range(m):
        if z[k] < 0.0:
            z[k] = 0.0
    w /= w.sum()
    z /= z.sum()
    return lo + span * (1.0 / total - 1.0)


@njit(cache=True)
def game_value(a):
    """Value of the matrix game ``a`` (rows maximize)."""
    m, n = a.shape
    if m == 1:
        return a[0].min()
    if n == 1:
        return a[:, 0].max()
    z = np.empty(m)
    w = np.empty(n)
    return _simplex(a, z, w)


def solve_matrix_game(game, rows=None, cols=None) -> GameSolution:
    """Value and a pair of optimal mixed strategies for ``game``.

    ``game`` is a :class:`GameMatrix` or anything array-like; labels default
    to ``"0", "1", ...``.
    """
    if not isinstance(game, GameMatrix):
        game = GameMatrix.of(game, rows, cols)
    a = np.ascontiguousarray(game.entries)
    z = np.empty(a.shape[0])
    w = np.empty(a.shape[1])
    v = _simplex(a, z, w)
    return GameSolution(
        float(v),
        MixedStrategy(game.rows, tuple(float(p) for p in z)),
        MixedStrategy(game.cols, tuple(float(p) for p in w)),
    )


def value(game) -> float:
    if isinstance(game, GameMatrix):
        a = game.entries
    else:
        a = GameMatrix.of(game).entries
    return float(game_value(np.ascontiguousarray(a)))


def saddle_gap(a, z, w) -> tuple[float, float]:
    """(min over columns of z^T a, max over rows of a w) for checking optimality."""
    a = np.asarray(a, dtype=float)
    return float((np.asarray(z) @ a).min()), float((a @ np.asarray(w)).max())
