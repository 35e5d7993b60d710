"""Strategy improvement for the maximizing player.

Starting from an r-SM strategy ``sigma``, each round solves the minimizing
1-RMDP obtained by fixing ``sigma`` and switches ``sigma`` at a single play
vertex ``u`` to an optimal row strategy of ``A_u(q_sigma)`` whenever that game
is worth more than ``q_sigma[u]``.  The induced values never decrease.

Among improvable vertices the one improved least recently is chosen, so no
improvable vertex is starved.  The loop stops when no vertex can be improved
by more than ``eps``; at that point ``q <= P(q) <= q + eps`` holds, which
certifies ``q`` as a lower bound that is an ``eps``-near fixed point of ``P``,
not that it is ``eps``-close to the game value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .equations import (
    EquationSystem,
    MixedStrategy,
    RsmStrategy,
    apply_P,
    as_system,
    game_at,
    induce_min_system,
    uniform_strategy,
)
from .matrix_game import solve_matrix_game, value
from .solver import DEFAULT_MAX_ITER, SolveResult, value_iterate


class NotImprovableError(ValueError):
    pass


def improvable_vertices(sys, sigma: RsmStrategy, q_sigma, delta: float = 0.0) -> list[str]:
    """Play vertices with ``Val(A_u(q_sigma)) > q_sigma[u] + delta``, in vertex order."""
    sys = as_system(sys)
    q = np.asarray(q_sigma, dtype=float)
    out = []
    for u in sys.game_vertices():
        if value(game_at(sys, u, q)) > q[sys.index[u]] + delta:
            out.append(u)
    return out


def improve_step(sys, sigma: RsmStrategy, q_sigma, u: str, delta: float = 0.0) -> dict[str, MixedStrategy]:
    """``sigma`` with ``sigma[u]`` replaced by an optimal row strategy of ``A_u(q_sigma)``."""
    sys = as_system(sys)
    if u not in improvable_vertices(sys, sigma, q_sigma, delta):
        raise NotImprovableError(f"vertex {u!r} is not improvable within {delta:g}")
    sol = solve_matrix_game(game_at(sys, u, q_sigma))
    new = dict(sigma)
    new[u] = sol.row_strategy
    return new


@dataclass
class ImprovementStep:
    round: int
    vertex: str
    old: np.ndarray
    new: np.ndarray
    game_value: float
    improvable: tuple[str, ...]


@dataclass
class ImprovementTrace:
    system: EquationSystem
    steps: list[ImprovementStep] = field(default_factory=list)
    exhausted: bool = False
    sandwich: bool = False
    note: str = ""

    def __len__(self):
        return len(self.steps)

    def is_monotone(self, slack: float = 0.0) -> bool:
        """Value vectors never decrease, and each improved vertex rises."""
        for s in self.steps:
            i = self.system.index[s.vertex]
            if np.any(s.new < s.old - slack) or s.new[i] <= s.old[i] - slack:
                return False
        return all(
            np.all(b.old >= a.new - slack) for a, b in zip(self.steps, self.steps[1:])
        )

    def to_text(self) -> str:
        lines = ["# round vertex old new game_value"]
        for s in self.steps:
            i = self.system.index[s.vertex]
            lines.append(f"{s.round} {s.vertex} {s.old[i]:.12g} {s.new[i]:.12g} {s.game_value:.12g}")
        if self.note:
            lines.append(f"# {self.note}")
        return "\n".join(lines) + "\n"


def audit_fairness(trace: ImprovementTrace) -> list[str]:
    """Problems with the least-recently-improved order; empty when the trace is fair.

    Whenever a vertex is improved again, every other vertex improvable at
    that moment must have been improved since its previous improvement.
    """
    problems = []
    last: dict[str, int] = {}
    for k, s in enumerate(trace.steps):
        if s.vertex not in s.improvable:
            problems.append(f"round {s.round}: {s.vertex} improved but not improvable")
        prev = last.get(s.vertex)
        if prev is not None:
            between = {t.vertex for t in trace.steps[prev + 1 : k]}
            for w in s.improvable:
                if w != s.vertex and w not in between:
                    problems.append(f"round {s.round}: {s.vertex} improved again before {w}")
        last[s.vertex] = k
    return problems


def strategy_improve(
    model,
    sigma0: RsmStrategy | None = None,
    eps: float = 1e-6,
    max_rounds: int = 10_000,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[dict[str, MixedStrategy], ImprovementTrace, SolveResult]:
    """Run local improvement steps until no play vertex gains more than ``eps``.

    Returns the final strategy, the trace and the value-iteration result of
    the final induced system (a lower bound on the game values).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    sys = as_system(model)
    sigma = dict(sigma0) if sigma0 is not None else uniform_strategy(sys, 1)
    inner = eps / 10
    order = {u: i for i, u in enumerate(sys.vertices)}
    last_improved: dict[str, int] = {}
    trace = ImprovementTrace(sys)

    res = value_iterate(induce_min_system(sys, sigma), inner, max_iter)
    rnd = 0
    while True:
        cand = improvable_vertices(sys, sigma, res.values, eps)
        if not cand:
            break
        if rnd >= max_rounds:
            trace.exhausted = True
            break
        u = min(cand, key=lambda v: (last_improved.get(v, -1), order[v]))
        gv = value(game_at(sys, u, res.values))
        sigma = improve_step(sys, sigma, res.values, u, eps)
        new = value_iterate(induce_min_system(sys, sigma), inner, max_iter)
        trace.steps.append(ImprovementStep(rnd, u, res.values.copy(), new.values.copy(), gv, tuple(cand)))
        last_improved[u] = rnd
        res = new
        rnd += 1

    q = res.values
    pq = apply_P(sys, q) if len(sys) else q
    trace.sandwich = bool(np.all(q <= pq + inner) and np.all(pq <= q + eps + inner))
    if trace.exhausted:
        trace.note = f"stopped after {max_rounds} rounds with improvable vertices left"
    else:
        trace.note = "no vertex improvable by more than eps; values are a sandwich lower bound"
    return sigma, trace, res

