"""The monotone minimax equation system ``x = P(x)`` of a 1-exit RCSG.

Each vertex gets exactly one equation.  Besides the four kinds produced from
a model (constant one, linear, product, matrix game) there are ``MinLinear``
and ``MaxLinear`` equations, which arise when one player's randomized
stackless-memoryless strategy is fixed; with both fixed, play vertices become
plain ``Linear`` equations.  All kinds are evaluated by one jitted kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Union

import numpy as np
from numba import njit

from .matrix_game import GameMatrix, MixedStrategy, game_value, solve_matrix_game
from .model import Rcsg, VertexType, vertex_type

Number = Union[float, Fraction]
Terms = tuple[tuple[str, Number], ...]  # (vertex, coefficient)
RsmStrategy = Mapping[str, MixedStrategy]


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class Const1:
    pass


@dataclass(frozen=True)
class Linear:
    terms: Terms = ()


@dataclass(frozen=True)
class Product:
    left: str  # entry of the called component
    right: str  # return port of the box


@dataclass(frozen=True)
class MatrixGame:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    targets: tuple[tuple[str, ...], ...]  # targets[i][j] = w(rows[i], cols[j])

    def matrix(self, x: np.ndarray, index: Mapping[str, int]) -> GameMatrix:
        a = np.array([[x[index[t]] for t in row] for row in self.targets], dtype=float)
        return GameMatrix(self.rows, self.cols, a)


@dataclass(frozen=True)
class MinLinear:
    """``x_u = min over options of a linear form``; options keyed by the opponent's move."""

    options: tuple[tuple[str, Terms], ...]


@dataclass(frozen=True)
class MaxLinear:
    options: tuple[tuple[str, Terms], ...]


Equation = Union[Const1, Linear, Product, MatrixGame, MinLinear, MaxLinear]

_ONE, _LIN, _PROD, _GAME, _MIN, _MAX = range(6)


@dataclass(frozen=True)
class _Compiled:
    kind: np.ndarray
    grp_ptr: np.ndarray
    term_ptr: np.ndarray
    term_idx: np.ndarray
    term_coef: np.ndarray
    prod_a: np.ndarray
    prod_b: np.ndarray
    game_ptr: np.ndarray
    game_rows: np.ndarray
    game_cols: np.ndarray
    game_tgt: np.ndarray

    def args(self):
        return (
            self.kind,
            self.grp_ptr,
            self.term_ptr,
            self.term_idx,
            self.term_coef,
            self.prod_a,
            self.prod_b,
            self.game_ptr,
            self.game_rows,
            self.game_cols,
            self.game_tgt,
        )


@dataclass(frozen=True)
class EquationSystem:
    vertices: tuple[str, ...]
    equations: tuple[Equation, ...]

    def __post_init__(self):
        if len(self.vertices) != len(self.equations):
            raise ValueError("need exactly one equation per vertex")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex in equation system")
        for u, eq in zip(self.vertices, self.equations):
            for v in _references(eq):
                if v not in self.index:
                    raise ValueError(f"equation of {u!r} references unknown vertex {v!r}")

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def __len__(self):
        return len(self.vertices)

    def equation(self, u: str) -> Equation:
        return self.equations[self.index[u]]

    def replace(self, new: Mapping[str, Equation]) -> EquationSystem:
        eqs = tuple(new.get(u, eq) for u, eq in zip(self.vertices, self.equations))
        return EquationSystem(self.vertices, eqs)

    def game_vertices(self) -> list[str]:
        return [u for u, eq in zip(self.vertices, self.equations) if isinstance(eq, MatrixGame)]

    def vector(self, values: Mapping[str, float]) -> np.ndarray:
        """Dense vector from a vertex -> value mapping (missing entries are 0)."""
        x = np.zeros(len(self))
        for u, val in values.items():
            x[self.index[u]] = val
        return x

    def as_dict(self, x: np.ndarray) -> dict[str, float]:
        return {u: float(x[i]) for i, u in enumerate(self.vertices)}

    @cached_property
    def compiled(self) -> _Compiled:
        return _compile(self)

    def to_text(self) -> str:
        return "\n".join(f"x_{u} = {_rhs_text(eq)}" for u, eq in zip(self.vertices, self.equations))


def _references(eq: Equation):
    if isinstance(eq, Linear):
        yield from (v for v, _ in eq.terms)
    elif isinstance(eq, Product):
        yield eq.left
        yield eq.right
    elif isinstance(eq, MatrixGame):
        for row in eq.targets:
            yield from row
    elif isinstance(eq, (MinLinear, MaxLinear)):
        for _, terms in eq.options:
            yield from (v for v, _ in terms)


def _terms_text(terms: Terms) -> str:
    if not terms:
        return "0"
    return " + ".join(f"({c})x_{v}" if c != 1 else f"x_{v}" for v, c in terms)


def _rhs_text(eq: Equation) -> str:
    if isinstance(eq, Const1):
        return "1"
    if isinstance(eq, Linear):
        return _terms_text(eq.terms)
    if isinstance(eq, Product):
        return f"x_{eq.left} * x_{eq.right}"
    if isinstance(eq, MatrixGame):
        rows = "; ".join(", ".join(f"x_{t}" for t in row) for row in eq.targets)
        return f"Val[{rows}]"
    name = "min" if isinstance(eq, MinLinear) else "max"
    return f"{name}(" + ", ".join(_terms_text(t) for _, t in eq.options) + ")"


def build_system(model: Rcsg) -> EquationSystem:
    if not model.is_single_exit:
        raise ValueError("equation systems are defined for 1-exit models only")
    eqs = []
    for u, v in model.vertices.items():
        vt = vertex_type(model, u)
        if vt is VertexType.ONE:
            eqs.append(Const1())
        elif vt is VertexType.CALL:
            eqs.append(Product(v.port_node, model.return_port_of(u)))
        elif vt is VertexType.RAND:
            acc: dict[str, Fraction] = {}
            for tr in model.out_transitions(u):
                acc[tr.target] = acc.get(tr.target, Fraction(0)) + tr.prob
            eqs.append(Linear(tuple((t, p) for t, p in acc.items() if p != 0)))
        else:
            succ = {tr.moves: tr.target for tr in model.out_transitions(u)}
            targets = tuple(tuple(succ[(g1, g2)] for g2 in v.moves2) for g1 in v.moves1)
            eqs.append(MatrixGame(v.moves1, v.moves2, targets))
    return EquationSystem(tuple(model.vertices), tuple(eqs))


def as_system(obj) -> EquationSystem:
    if isinstance(obj, EquationSystem):
        return obj
    if isinstance(obj, Rcsg):
        return build_system(obj)
    raise TypeError(f"expected Rcsg or EquationSystem, got {type(obj).__name__}")


# --------------------------------------------------------------------------
# compilation and evaluation


def _compile(sys: EquationSystem) -> _Compiled:
    idx = sys.index
    n = len(sys)
    kind = np.zeros(n, dtype=np.int64)
    grp_ptr = [0]
    term_ptr = [0]
    term_idx: list[int] = []
    term_coef: list[float] = []
    prod_a = np.zeros(n, dtype=np.int64)
    prod_b = np.zeros(n, dtype=np.int64)
    game_ptr = [0]
    game_rows = np.zeros(n, dtype=np.int64)
    game_cols = np.zeros(n, dtype=np.int64)
    game_tgt: list[int] = []

    def add_group(terms: Terms):
        for v, c in terms:
            term_idx.append(idx[v])
            term_coef.append(float(c))
        term_ptr.append(len(term_idx))

    for i, eq in enumerate(sys.equations):
        groups: list[Terms] = []
        if isinstance(eq, Const1):
            kind[i] = _ONE
        elif isinstance(eq, Linear):
            kind[i] = _LIN
            groups = [eq.terms]
        elif isinstance(eq, Product):
            kind[i] = _PROD
            prod_a[i], prod_b[i] = idx[eq.left], idx[eq.right]
        elif isinstance(eq, MatrixGame):
            kind[i] = _GAME
            game_rows[i], game_cols[i] = len(eq.rows), len(eq.cols)
            game_tgt.extend(idx[t] for row in eq.targets for t in row)
        elif isinstance(eq, (MinLinear, MaxLinear)):
            kind[i] = _MIN if isinstance(eq, MinLinear) else _MAX
            groups = [terms for _, terms in eq.options]
        else:  # pragma: no cover
            raise TypeError(eq)
        for g in groups:
            add_group(g)
        grp_ptr.append(len(term_ptr) - 1)
        game_ptr.append(len(game_tgt))

    return _Compiled(
        kind,
        np.array(grp_ptr, dtype=np.int64),
        np.array(term_ptr, dtype=np.int64),
        np.array(term_idx, dtype=np.int64),
        np.array(term_coef, dtype=np.float64),
        prod_a,
        prod_b,
        np.array(game_ptr, dtype=np.int64),
        game_rows,
        game_cols,
        np.array(game_tgt, dtype=np.int64),
    )


@njit(cache=True)
def _group_sum(x, g, term_ptr, term_idx, term_coef):
    s = 0.0
    for k in range(term_ptr[g], term_ptr[g + 1]):
        s += term_coef[k] * x[term_idx[k]]
    return s


@njit(cache=True)
def step(x, out, kind, grp_ptr, term_ptr, term_idx, term_coef, prod_a, prod_b,
         game_ptr, game_rows, game_cols, game_tgt):
    """out = P(x), clipped to [0, 1] against rounding."""
    n = x.shape[0]
    for i in range(n):
        k = kind[i]
        if k == 0:
            val = 1.0
        elif k == 1:
            if grp_ptr[i + 1] > grp_ptr[i]:
                val = _group_sum(x, grp_ptr[i], term_ptr, term_idx, term_coef)
            else:
                val = 0.0
        elif k == 2:
            val = x[prod_a[i]] * x[prod_b[i]]
        elif k == 3:
            r, c = game_rows[i], game_cols[i]
            a = np.empty((r, c))
            base = game_ptr[i]
            for p in range(r):
                for q in range(c):
                    a[p, q] = x[game_tgt[base + p * c + q]]
            val = game_value(a)
        else:
            val = _group_sum(x, grp_ptr[i], term_ptr, term_idx, term_coef)
            for g in range(grp_ptr[i] + 1, grp_ptr[i + 1]):
                s = _group_sum(x, g, term_ptr, term_idx, term_coef)
                if k == 4:
                    if s < val:
                        val = s
                elif s > val:
                    val = s
        if val < 0.0:
            val = 0.0
        elif val > 1.0:
            val = 1.0
        out[i] = val


def apply_P(sys: EquationSystem, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (len(sys),):
        raise ValueError(f"vector has shape {x.shape}, system has {len(sys)} vertices")
    if np.any(x < 0):
        raise ValueError("apply_P is defined on the nonnegative orthant")
    out = np.empty_like(x)
    step(x, out, *sys.compiled.args())
    return out


def residual(sys: EquationSystem, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.max(np.abs(apply_P(sys, x) - x))) if len(sys) else 0.0


def game_at(sys: EquationSystem, u: str, x) -> GameMatrix:
    """The matrix game ``A_u(x)`` of a play vertex."""
    eq = sys.equation(u)
    if not isinstance(eq, MatrixGame):
        raise ValueError(f"{u!r} is not a play vertex")
    return eq.matrix(np.asarray(x, dtype=float), sys.index)


# --------------------------------------------------------------------------
# strategy-induced systems


def _check_strategy(eq: MatrixGame, u: str, strat: MixedStrategy | None, legal, player: int):
    if strat is None:
        raise StrategyError(f"no player-{player} strategy given for play vertex {u!r}")
    for m, p in zip(strat.moves, strat.probs):
        if p > 0 and m not in legal:
            raise StrategyError(f"player-{player} strategy at {u!r} uses illegal move {m!r}")


def _row_mix(eq: MatrixGame, sigma: MixedStrategy, col: int) -> Terms:
    acc: dict[str, float] = {}
    for i, g1 in enumerate(eq.rows):
        p = sigma.prob(g1)
        if p > 0:
            t = eq.targets[i][col]
            acc[t] = acc.get(t, 0.0) + p
    return tuple(acc.items())


def _col_mix(eq: MatrixGame, tau: MixedStrategy, row: int) -> Terms:
    acc: dict[str, float] = {}
    for j, g2 in enumerate(eq.cols):
        p = tau.prob(g2)
        if p > 0:
            t = eq.targets[row][j]
            acc[t] = acc.get(t, 0.0) + p
    return tuple(acc.items())


def induce_min_system(sys: EquationSystem, sigma: RsmStrategy) -> EquationSystem:
    """Fix player 1's r-SM strategy; the minimizer still chooses at each play vertex."""
    new = {}
    for u in sys.game_vertices():
        eq = sys.equation(u)
        _check_strategy(eq, u, sigma.get(u), eq.rows, 1)
        new[u] = MinLinear(tuple((g2, _row_mix(eq, sigma[u], j)) for j, g2 in enumerate(eq.cols)))
    return sys.replace(new)


def induce_max_system(sys: EquationSystem, tau: RsmStrategy) -> EquationSystem:
    """Fix player 2's r-SM strategy; the maximizer still chooses at each play vertex."""
    new = {}
    for u in sys.game_vertices():
        eq = sys.equation(u)
        _check_strategy(eq, u, tau.get(u), eq.cols, 2)
        new[u] = MaxLinear(tuple((g1, _col_mix(eq, tau[u], i)) for i, g1 in enumerate(eq.rows)))
    return sys.replace(new)


def induce_markov_system(sys: EquationSystem, sigma: RsmStrategy, tau: RsmStrategy) -> EquationSystem:
    """Fix both strategies: every play vertex averages its successors bilinearly."""
    new = {}
    for u in sys.game_vertices():
        eq = sys.equation(u)
        _check_strategy(eq, u, sigma.get(u), eq.rows, 1)
        _check_strategy(eq, u, tau.get(u), eq.cols, 2)
        acc: dict[str, float] = {}
        for i, g1 in enumerate(eq.rows):
            for j, g2 in enumerate(eq.cols):
                p = sigma[u].prob(g1) * tau[u].prob(g2)
                if p > 0:
                    t = eq.targets[i][j]
                    acc[t] = acc.get(t, 0.0) + p
        new[u] = Linear(tuple(acc.items()))
    return sys.replace(new)


def optimal_strategies(sys: EquationSystem, x) -> tuple[dict[str, MixedStrategy], dict[str, MixedStrategy]]:
    """Row and column solutions of ``A_u(x)`` at every play vertex."""
    sigma, tau = {}, {}
    for u in sys.game_vertices():
        sol = solve_matrix_game(game_at(sys, u, x))
        sigma[u], tau[u] = sol.row_strategy, sol.col_strategy
    return sigma, tau


def uniform_strategy(sys: EquationSystem, player: int) -> dict[str, MixedStrategy]:
    out = {}
    for u in sys.game_vertices():
        eq = sys.equation(u)
        out[u] = MixedStrategy.uniform(eq.rows if player == 1 else eq.cols)
    return out


def zero_vertices(sys: EquationSystem) -> set[str]:
    """Vertices whose least-fixed-point value is exactly 0.

    Computed on the system itself, ignoring coefficient magnitudes: the
    positive set is grown from the constant-one equations until no equation
    can become positive.
    """
    pos: set[str] = set()

    def lin_pos(terms: Terms) -> bool:
        return any(c > 0 and v in pos for v, c in terms)

    changed = True
    while changed:
        changed = False
        for u, eq in zip(sys.vertices, sys.equations):
            if u in pos:
                continue
            if isinstance(eq, Const1):
                hit = True
            elif isinstance(eq, Linear):
                hit = lin_pos(eq.terms)
            elif isinstance(eq, Product):
                hit = eq.left in pos and eq.right in pos
            elif isinstance(eq, MatrixGame):
                hit = all(any(row[j] in pos for row in eq.targets) for j in range(len(eq.cols)))
            elif isinstance(eq, MinLinear):
                hit = all(lin_pos(t) for _, t in eq.options)
            else:
                hit = any(lin_pos(t) for _, t in eq.options)
            if hit:
                pos.add(u)
                changed = True
    return set(sys.vertices) - pos
