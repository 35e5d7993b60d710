"""Value iteration for least fixed points, and strategy-derived bounds.

``value_iterate`` runs the Kleene sequence ``x_0 = 0, x_{k+1} = P(x_k)`` and
stops at the first ``k`` whose next step moves by less than ``tol`` in the
sup norm; it returns ``x_k``, so the reported residual is exactly
``||P(x_k) - x_k||``.  Every iterate is checked to dominate its predecessor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .equations import (
    EquationSystem,
    MixedStrategy,
    apply_P,
    as_system,
    induce_max_system,
    induce_min_system,
    optimal_strategies,
    step,
    zero_vertices,
)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10**6
MONOTONE_SLACK = 1e-12


class MonotonicityError(RuntimeError):
    pass


@dataclass
class SolveResult:
    system: EquationSystem
    values: np.ndarray
    iterations: int
    residual: float
    converged: bool

    def __getitem__(self, vertex: str) -> float:
        return float(self.values[self.system.index[vertex]])

    def as_dict(self) -> dict[str, float]:
        return self.system.as_dict(self.values)


@njit(cache=True)
def _iterate(x, tol, max_iter, slack, kind, grp_ptr, term_ptr, term_idx, term_coef,
             prod_a, prod_b, game_ptr, game_rows, game_cols, game_tgt):
    """Returns (iterations, residual, bad_vertex); ``x`` holds the final iterate."""
    n = x.shape[0]
    y = np.empty(n)
    k = 0
    while True:
        step(x, y, kind, grp_ptr, term_ptr, term_idx, term_coef,
             prod_a, prod_b, game_ptr, game_rows, game_cols, game_tgt)
        diff = 0.0
        for i in range(n):
            d = y[i] - x[i]
            if d < -slack:
                return k, -d, i
            if d < 0.0:
                d = -d
            if d > diff:
                diff = d
        if diff < tol or k >= max_iter:
            return k, diff, -1
        for i in range(n):
            x[i] = y[i]
        k += 1


def value_iterate(sys, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SolveResult:
    """Monotone value iteration from the zero vector.

    Non-convergence within ``max_iter`` is reported through ``converged``;
    the returned vector is a lower bound on the least fixed point either way.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sys = as_system(sys)
    x = np.zeros(len(sys))
    if len(sys) == 0:
        return SolveResult(sys, x, 0, 0.0, True)
    k, res, bad = _iterate(x, tol, max_iter, MONOTONE_SLACK, *sys.compiled.args())
    if bad >= 0:
        raise MonotonicityError(
            f"iterate {k + 1} decreased at vertex {sys.vertices[bad]!r} by {res:.3e}"
        )
    return SolveResult(sys, x, int(k), float(res), bool(res < tol))


@dataclass
class BoundsCertificate:
    """Two-sided bounds on the game values from concrete r-SM strategies.

    ``lower`` is a value-iteration underestimate of what ``witness_sigma``
    guarantees, hence a lower bound on the game value.  ``upper`` is a
    post-fixed point of the ``witness_tau``-induced operator when
    ``upper_certified`` holds (then it bounds the value from above up to
    floating-point rounding); otherwise it is that operator's iterate.
    """

    system: EquationSystem
    lower: np.ndarray
    upper: np.ndarray
    witness_sigma: dict[str, MixedStrategy]
    witness_tau: dict[str, MixedStrategy]
    lower_result: SolveResult
    upper_result: SolveResult
    upper_certified: bool
    converged: bool = field(init=False)

    def __post_init__(self):
        self.converged = self.lower_result.converged and self.upper_result.converged

    def bounds(self, vertex: str) -> tuple[float, float]:
        i = self.system.index[vertex]
        return float(self.lower[i]), float(self.upper[i])

    @property
    def gap(self) -> float:
        return float(np.max(self.upper - self.lower)) if len(self.system) else 0.0


def _ascent_direction(sys: EquationSystem, x: np.ndarray, live: np.ndarray, h: float = 1e-7):
    """Solve ``d = 1 + F'(x; d)`` on the live vertices by fixed-point iteration.

    ``F'(x; d)`` is the one-sided directional derivative, which handles the
    kinks of min/max equations correctly.  Returns ``None`` if the iteration
    does not settle (spectral radius near or above one).
    """
    base = apply_P(sys, x)
    d = live.astype(float)
    for _ in range(2000):
        scale = d.max()
        xp = np.minimum(x + (h / scale) * d, 1.0)
        deriv = (apply_P(sys, xp) - base) * (scale / h)
        nd = np.where(live, 1.0 + np.maximum(deriv, 0.0), 0.0)
        if np.max(np.abs(nd - d)) <= 1e-6 * nd.max():
            return nd / nd.max()
        d = nd
    return None


def post_fixed_point(sys: EquationSystem, x, deltas=(1e-12, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5)):
    """A vector ``y >= x`` with ``F(y) <= y``, or ``None``.

    Any such ``y`` dominates the least fixed point of the monotone operator
    ``F``.  Candidates push ``x`` up along the solution of
    ``d = 1 + F'(x; d)``; they are pinned to 0 on the structural zero set and
    capped at 1.
    """
    x = np.asarray(x, dtype=float)
    zero = np.zeros(len(x), dtype=bool)
    for u in zero_vertices(sys):
        zero[sys.index[u]] = True
    x = np.where(zero, 0.0, x)
    directions = [np.where(zero, 0.0, 1.0)]
    d = _ascent_direction(sys, x, ~zero)
    if d is not None:
        directions.insert(0, d)
    slack = 4 * np.finfo(float).eps
    for delta in deltas:
        for d in directions:
            y = np.minimum(x + delta * d, 1.0)
            if np.all(apply_P(sys, y) <= y + slack):
                return y
    return None


def certify_bounds(sys, x, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> BoundsCertificate:
    """Extract witness strategies from ``A_u(x)`` at every play vertex and bound q*.

    ``x`` should be a near fixed point of ``P`` (for example a converged
    :func:`value_iterate` result).
    """
    sys = as_system(sys)
    x = np.asarray(x, dtype=float)
    sigma, tau = optimal_strategies(sys, x)
    low = value_iterate(induce_min_system(sys, sigma), tol, max_iter)
    high_sys = induce_max_system(sys, tau)
    high = value_iterate(high_sys, tol, max_iter)
    y = post_fixed_point(high_sys, high.values)
    certified = y is not None
    upper = y if certified else high.values.copy()
    return BoundsCertificate(sys, low.values.copy(), upper, sigma, tau, low, high, certified)
