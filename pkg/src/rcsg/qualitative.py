"""Exact zero-value vertices, and a one-sided numeric report on value 1.

The zero set depends only on which transitions exist, never on their
probabilities.  It starts as every non-exit vertex and shrinks under three
rules until none applies:

* a probabilistic vertex (or return port) leaves when some successor has;
* a call port ``(b,en)`` leaves when both ``en`` and the return port have;
* a play vertex leaves when every column has some row leading outside.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .equations import build_system
from .model import Rcsg, VertexKind
from .solver import certify_bounds, value_iterate


@dataclass(frozen=True)
class ZeroSetResult:
    zero_vertices: frozenset[str]
    iterations: int

    def __contains__(self, u: str) -> bool:
        return u in self.zero_vertices


def _call_dependencies(model: Rcsg) -> tuple[dict[str, tuple[str, str]], dict[str, list[str]]]:
    """Call port -> (callee entry, return port), plus the reverse map."""
    deps: dict[str, tuple[str, str]] = {}
    users: dict[str, list[str]] = defaultdict(list)
    for vid, v in model.vertices.items():
        if v.kind is VertexKind.CALL:
            pair = (v.port_node, model.return_port_of(vid))
            deps[vid] = pair
            for w in pair:
                users[w].append(vid)
    return deps, users


def zero_set(model: Rcsg) -> ZeroSetResult:
    verts = model.vertices
    zero = {u for u, v in verts.items() if v.kind is not VertexKind.EXIT}
    deps, users = _call_dependencies(model)

    preds: dict[str, set[str]] = defaultdict(set)
    for u in verts:
        for tr in model.out_transitions(u):
            if tr.moves is not None or tr.prob > 0:
                preds[tr.target].add(u)

    def leaves(u: str) -> bool:
        v = verts[u]
        if v.kind is VertexKind.CALL:
            en, ret = deps[u]
            return en not in zero and ret not in zero
        trs = model.out_transitions(u)
        if v.is_play:
            out = {tr.moves: tr.target for tr in trs}
            return all(
                any(out.get((g1, g2)) not in zero for g1 in v.moves1 if (g1, g2) in out)
                for g2 in v.moves2
            )
        return any(tr.prob > 0 and tr.target not in zero for tr in trs)

    removals = 0
    work = deque(u for u in verts if u in zero)
    queued = set(work)
    while work:
        u = work.popleft()
        queued.discard(u)
        if u not in zero or not leaves(u):
            continue
        zero.discard(u)
        removals += 1
        for w in list(preds[u]) + users.get(u, []):
            if w in zero and w not in queued:
                work.append(w)
                queued.add(w)
    return ZeroSetResult(frozenset(zero), removals)


class Verdict(str, Enum):
    VALUE_LT_1 = "value_lt_1"
    NUMERICALLY_1 = "numerically_1"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class VertexReport:
    vertex: str
    in_zero_set: bool
    lower: float
    upper: float
    upper_certified: bool
    verdict: Verdict


@dataclass(frozen=True)
class AlmostSureReport:
    """Per-vertex answers to "is the termination value 1?".

    ``value_lt_1`` rests on a post-fixed point of the operator induced by a
    concrete minimizer strategy, so it is sound up to rounding.
    ``numerically_1`` only says the lower bound came within ``tol`` of 1.
    """

    tol: float
    rows: tuple[VertexReport, ...]

    def __getitem__(self, u: str) -> VertexReport:
        for r in self.rows:
            if r.vertex == u:
                return r
        raise KeyError(u)

    def verdicts(self) -> dict[str, Verdict]:
        return {r.vertex: r.verdict for r in self.rows}

    def to_text(self) -> str:
        lines = [f"{'vertex':<16} {'zero':<5} {'lower':>10} {'upper':>10}  verdict"]
        for r in self.rows:
            up = f"{r.upper:.6f}" + ("" if r.upper_certified else "?")
            lines.append(f"{r.vertex:<16} {str(r.in_zero_set):<5} {r.lower:>10.6f} {up:>10}  {r.verdict.value}")
        return "\n".join(lines) + "\n"


def almost_sure_report(model: Rcsg, tol: float = 1e-6, vi_tol: float | None = None,
                       max_iter: int = 10**7) -> AlmostSureReport:
    if tol <= 0:
        raise ValueError("tol must be positive")
    vi_tol = vi_tol if vi_tol is not None else min(1e-9, tol * tol / 10)
    sys = build_system(model)
    z = zero_set(model)
    res = value_iterate(sys, vi_tol, max_iter)
    cert = certify_bounds(sys, res.values, vi_tol, max_iter)
    rows = []
    for u in sys.vertices:
        lo, hi = cert.bounds(u)
        lo = max(lo, float(res[u]))
        if cert.upper_certified and hi < 1 - tol:
            verdict = Verdict.VALUE_LT_1
        elif lo > 1 - tol:
            verdict = Verdict.NUMERICALLY_1
        else:
            verdict = Verdict.INCONCLUSIVE
        rows.append(VertexReport(u, u in z, lo, hi, cert.upper_certified, verdict))
    return AlmostSureReport(tol, tuple(rows))


def numeric_zero_set(model: Rcsg, tol: float = 1e-9) -> frozenset[str]:
    """Vertices whose value-iteration estimate stays below ``tol``."""
    sys = build_system(model)
    res = value_iterate(sys, tol * 1e-3)
    return frozenset(u for u, x in zip(sys.vertices, np.asarray(res.values)) if x < tol)
