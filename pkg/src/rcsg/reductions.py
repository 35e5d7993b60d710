"""Model transformers: derandomization, square-root-sum gadgets, and the
reduction from quantitative CSG termination to qualitative 1-RCSG termination.

Everything here works in exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

from .model import Box, Component, Rcsg, Transition, Vertex, VertexKind, move_edge, play, prob_edge, port_id
from .qualitative import zero_set

COIN = ("a", "b")


# --------------------------------------------------------------------------
# derandomization


def _fresh_name(base: str, taken: set[str]) -> str:
    name = base.replace("(", "").replace(")", "").replace(",", ".")
    cand, k = name, 1
    while cand in taken:
        cand = f"{name}.{k}"
        k += 1
    taken.add(cand)
    return cand


def coin_edges(src: str, heads: str, tails: str) -> list[Transition]:
    """A fair coin from matching moves: mismatches go to ``tails``, matches to ``heads``."""
    return [
        move_edge(src, tails, "a", "b"),
        move_edge(src, tails, "b", "a"),
        move_edge(src, heads, "a", "a"),
        move_edge(src, heads, "b", "b"),
    ]


@dataclass
class _Ladder:
    """Coin states for one distribution ``n_i / q`` over ``targets``.

    ``k`` fair flips give a number ``N`` below ``2**k``; ``N`` below ``q``
    selects the target whose cumulative cutoff interval contains it, anything
    else restarts.  A flip prefix needs its own state only while its range
    of possible ``N`` still straddles a cutoff or ``q``.
    """

    targets: list[str]
    cutoffs: list[int]  # C_1 < ... < C_r = q
    k: int

    def resolve(self, prefix: int, depth: int):
        """Target vertex, ``"restart"``, or ``None`` if still unresolved."""
        span = 1 << (self.k - depth)
        lo, hi = prefix * span, (prefix + 1) * span  # N in [lo, hi)
        q = self.cutoffs[-1]
        if lo >= q:
            return "restart"
        prev = 0
        for tgt, c in zip(self.targets, self.cutoffs):
            if prev <= lo and hi <= c:
                return tgt
            if lo < c:
                return None
            prev = c
        return None


def _ladder(dist: list[tuple[str, Fraction]]) -> _Ladder:
    q = reduce(math.lcm, (p.denominator for _, p in dist), 1)
    total = 0
    targets, cutoffs = [], []
    for v, p in dist:
        total += int(p * q)
        targets.append(v)
        cutoffs.append(total)
    return _Ladder(targets, cutoffs, (q - 1).bit_length())


def derandomize(model: Rcsg) -> Rcsg:
    """Replace every probabilistic vertex by fair coins played as matching games.

    Each coin is a play vertex where both players choose ``a`` or ``b``;
    mismatches and matches lead to the two children.  The maximizer matching
    at random (and the minimizer too) makes every coin exactly fair, so no
    player can bias it and values at original vertices are unchanged.
    A distribution with denominator ``q`` uses ``k = bitlength(q - 1)`` flips
    per attempt and at most ``r*k`` coin states for ``r`` outcomes.
    Residual mass (substochastic models) and dead ends go to a fresh
    absorbing vertex.
    """
    taken = set(model.vertices)
    comps = []
    for comp in model.components:
        entries = set(comp.entries)
        nodes = list(comp.nodes)
        node_pos = {v.id: i for i, v in enumerate(nodes)}
        port_moves = dict((pid, (m1, m2)) for pid, m1, m2 in comp.port_moves)
        transitions = [t for t in comp.transitions if t.moves is not None]
        probs: dict[str, list[Transition]] = {}
        for t in comp.transitions:
            if t.prob is not None:
                probs.setdefault(t.source, []).append(t)

        dead: list[str] = []

        def dead_sink() -> str:
            if not dead:
                d = _fresh_name(f"{comp.name}~dead", taken)
                nodes.append(play(d, ("a",), ("a",)))
                transitions.append(move_edge(d, d, "a", "a"))
                dead.append(d)
            return dead[0]

        def make_play(vid: str, m1, m2):
            if vid in node_pos:
                nodes[node_pos[vid]] = Vertex(vid, VertexKind.PLAY, tuple(m1), tuple(m2))
            else:
                port_moves[vid] = (tuple(m1), tuple(m2))

        local = [
            vid for vid, v in model.vertices.items()
            if model.component_of(vid).name == comp.name
            and (v.kind is VertexKind.PROB or (v.kind is VertexKind.RETURN and not v.is_play))
        ]
        for u in local:
            dist: dict[str, Fraction] = {}
            for t in probs.get(u, []):
                if t.prob > 0:
                    dist[t.target] = dist.get(t.target, Fraction(0)) + t.prob
            mass = sum(dist.values(), Fraction(0))
            if mass > 1:
                raise ValueError(f"probabilities at {u!r} sum to {mass} > 1")
            if mass < 1:
                d = dead_sink()
                dist[d] = dist.get(d, Fraction(0)) + (1 - mass)
            items = list(dist.items())
            if len(items) == 1:
                make_play(u, ("a",), ("a",))
                transitions.append(move_edge(u, items[0][0], "a", "a"))
                continue

            lad = _ladder(items)
            base = u.replace("(", "").replace(")", "").replace(",", ".")
            restarts = lad.cutoffs[-1] < (1 << lad.k)
            needs_clone = restarts and (u in entries or model.vertices[u].kind is VertexKind.RETURN)
            root = _fresh_name(f"{base}~", taken) if needs_clone else u
            names: dict[tuple[int, int], str] = {}

            def state(prefix: int, depth: int) -> str:
                if depth == 0:
                    return root
                key = (prefix, depth)
                if key not in names:
                    bits = format(prefix, f"0{depth}b")
                    names[key] = _fresh_name(f"{base}~{bits}", taken)
                return names[key]

            def child(prefix: int, depth: int) -> str:
                r = lad.resolve(prefix, depth)
                if r == "restart":
                    return root
                return r if r is not None else state(prefix, depth)

            todo = [(0, 0)]
            built = set()
            while todo:
                prefix, depth = todo.pop()
                if (prefix, depth) in built:
                    continue
                built.add((prefix, depth))
                src = state(prefix, depth)
                kids = []
                for bit in (0, 1):
                    cp, cd = 2 * prefix + bit, depth + 1
                    kids.append(child(cp, cd))
                    if lad.resolve(cp, cd) is None:
                        todo.append((cp, cd))
                transitions.extend(coin_edges(src, kids[1], kids[0]))
                if src != u:
                    nodes.append(play(src, COIN, COIN))
            if needs_clone:
                transitions.extend(coin_edges(u, *_root_children(transitions, root)))
            make_play(u, COIN, COIN)

        comps.append(
            Component(
                comp.name,
                tuple(nodes),
                comp.entries,
                comp.exits,
                comp.boxes,
                tuple(transitions),
                tuple((pid, m1, m2) for pid, (m1, m2) in port_moves.items()),
            )
        )
    moves1 = tuple(dict.fromkeys(model.moves1 + COIN))
    moves2 = tuple(dict.fromkeys(model.moves2 + COIN))
    return Rcsg(tuple(comps), moves1, moves2)


def _root_children(transitions: list[Transition], root: str) -> tuple[str, str]:
    """(heads, tails) successors already wired for ``root``."""
    out = {t.moves: t.target for t in transitions if t.source == root}
    return out[("a", "a")], out[("a", "b")]


# --------------------------------------------------------------------------
# square-root-sum gadgets


def newton_sqrt_upper(a: int) -> Fraction:
    """Rational ``m`` with ``0 <= m - sqrt(a) <= 1/(2a)``, by Newton steps from above."""
    if a < 1:
        raise ValueError("a must be positive")
    m = Fraction(math.isqrt(a) + 1)
    tol = Fraction(1, 2 * a)
    while not (m * m >= a and (m - tol) ** 2 < a):
        m = (m + a / m) / 2
    return m


@dataclass(frozen=True)
class GadgetSpec:
    a: int
    m: Fraction
    l: Fraction
    c1: Fraction
    c2: Fraction
    c3: Fraction
    g: Fraction
    d: Fraction
    e: Fraction

    @property
    def discriminant(self) -> Fraction:
        return (self.g + 1 - self.c2) ** 2 + 4 * self.g * self.c2

    def value(self) -> float:
        """``d + e*sqrt(a)`` in floating point."""
        return float(self.d) + float(self.e) * math.sqrt(self.a)

    def check(self) -> list[str]:
        """Identities the construction relies on; empty when all hold."""
        bad = []
        if not (self.m * self.m >= self.a and (self.m - Fraction(1, 2 * self.a)) ** 2 < self.a):
            bad.append("m is not within 1/(2a) above sqrt(a)")
        if self.m * self.m - self.l != self.a or not 0 <= self.l < 1:
            bad.append("a != m^2 - l with 0 <= l < 1")
        if self.c2 != self.l / 4 or self.g != self.m - 1 - self.c2 or self.c1 != self.g * self.c3:
            bad.append("coefficient definitions violated")
        if not (0 < self.c3 < 1 and self.c3 < 1 / (2 * self.g)):
            bad.append("c3 out of range")
        if not (0 <= self.c1 and self.c1 + self.c2 <= 1 and self.e > 0):
            bad.append("probabilities out of range")
        if self.discriminant != self.a:
            bad.append("discriminant differs from a")
        return bad


def gadget_spec(a: int) -> GadgetSpec:
    if int(a) != a or a <= 1:
        raise ValueError(f"gadget needs an integer a > 1, got {a!r}")
    a = int(a)
    m = newton_sqrt_upper(a)
    l = m * m - a
    c2 = l / 4
    g = m - 1 - c2
    c3 = Fraction(1, 2 * (math.ceil(g) + 1))
    c1 = g * c3
    d = -(g * c3 + c3 - c2 * c3) / (2 * c2)
    e = c3 / (2 * c2)
    return GadgetSpec(a, m, l, c1, c2, c3, g, d, e)


def _gadget_parts(spec: GadgetSpec, sfx: str, t: str, z: str):
    u, v1, v2 = f"u{sfx}", f"v1{sfx}", f"v2{sfx}"
    nodes = [play(u, ("1", "2"), ("1", "2")), Vertex(v1, VertexKind.PROB), Vertex(v2, VertexKind.PROB)]
    edges = [
        move_edge(u, v1, "1", "1"),
        move_edge(u, v2, "2", "2"),
        move_edge(u, z, "1", "2"),
        move_edge(u, z, "2", "1"),
        prob_edge(v1, t, spec.c1),
        prob_edge(v1, u, spec.c2),
        prob_edge(v1, z, 1 - spec.c1 - spec.c2),
        prob_edge(v2, t, spec.c3),
        prob_edge(v2, z, 1 - spec.c3),
    ]
    return nodes, [e for e in edges if e.prob is None or e.prob > 0]


def sqrt_sum_gadget(a: int) -> tuple[GadgetSpec, Rcsg]:
    """The finite CSG ``G(a)`` whose value at ``u`` is ``d + e*sqrt(a)``.

    At ``u`` matching moves lead to ``v1`` or ``v2`` and mismatches to the
    dead vertex ``z``, so ``x_u = x_v1*x_v2/(x_v1 + x_v2)``.
    """
    spec = gadget_spec(a)
    nodes, edges = _gadget_parts(spec, "", "t", "z")
    nodes += [Vertex("t", VertexKind.EXIT), Vertex("z", VertexKind.PROB)]
    edges.append(prob_edge("z", "z", 1))
    comp = Component("G", tuple(nodes), (), ("t",), (), tuple(edges))
    return spec, Rcsg((comp,), ("1", "2"), ("1", "2"))


@dataclass(frozen=True)
class SqrtSumInstance:
    a_list: tuple[int, ...]
    k: int
    D: Fraction
    E: Fraction
    gadgets: tuple[GadgetSpec, ...]
    weights: tuple[Fraction, ...]
    model: Rcsg
    start: str = "s"

    @property
    def threshold(self) -> Fraction:
        """The query is whether the value at ``s`` is at least ``D + E*k``."""
        return self.D + self.E * self.k

    def query(self) -> str:
        return f"value({self.start}) >= D + {self.k}E"

    def record(self) -> dict:
        def rat(x):
            return {"exact": f"{x.numerator}/{x.denominator}", "float": float(x)}

        return {
            "a_list": list(self.a_list),
            "k": self.k,
            "start": self.start,
            "D": rat(self.D),
            "E": rat(self.E),
            "threshold": rat(self.threshold),
            "query": self.query(),
            "weights": [rat(p) for p in self.weights],
        }


def sqrt_sum_instance(a_list, k: int) -> SqrtSumInstance:
    """One start vertex ``s`` mixing gadget copies so that its value is ``D + E*sum(sqrt(a_i))``."""
    a_list = tuple(int(a) for a in a_list)
    if not a_list:
        raise ValueError("a_list must be nonempty")
    specs = tuple(gadget_spec(a) for a in a_list)
    E = 1 / sum(1 / s.e for s in specs)
    weights = tuple(E / s.e for s in specs)
    D = sum((p * s.d for p, s in zip(weights, specs)), Fraction(0))
    nodes = [Vertex("s", VertexKind.PROB)]
    edges = []
    for i, (spec, p) in enumerate(zip(specs, weights), start=1):
        n, e = _gadget_parts(spec, f"_{i}", "t", "z")
        nodes += n
        edges += e
        edges.append(prob_edge("s", f"u_{i}", p))
    nodes += [Vertex("t", VertexKind.EXIT), Vertex("z", VertexKind.PROB)]
    edges.append(prob_edge("z", "z", 1))
    comp = Component("S", tuple(nodes), ("s",), ("t",), (), tuple(edges))
    model = Rcsg((comp,), ("1", "2"), ("1", "2"))
    return SqrtSumInstance(a_list, int(k), D, E, specs, weights, model)


# --------------------------------------------------------------------------
# quantitative CSG -> qualitative 1-RCSG


@dataclass(frozen=True)
class QualReduction:
    """Result of :func:`csg_quant_to_rcsg_qual`.

    When the start vertex has value 0 the reduction stops early:
    ``model`` is ``None`` and ``value_zero`` holds.
    """

    model: Rcsg | None
    start: str
    p: Fraction
    removed: frozenset[str]
    value_zero: bool = False
    notes: tuple[str, ...] = field(default=())


def _threshold_shift(start: str, p: Fraction, one: str, zero: str, taken: set[str], has_incoming: bool):
    """Fresh start ``s'`` with ``value(s') >= 1/2`` iff ``value(start) >= p``."""
    half = Fraction(1, 2)
    if p == half and not has_incoming:
        return start, [], "threshold already 1/2"
    s = _fresh_name(f"{start}'", taken)
    if p > half:
        edges = [prob_edge(s, start, 1 / (2 * p)), prob_edge(s, zero, 1 - 1 / (2 * p))]
        note = f"value(s') = value/(2p) with p = {p}"
    elif p < half:
        edges = [prob_edge(s, start, 1 / (2 * (1 - p))), prob_edge(s, one, (1 - 2 * p) / (2 * (1 - p)))]
        note = f"value(s') = (value + 1 - 2p)/(2(1-p)) with p = {p}"
    else:
        edges = [prob_edge(s, start, 1)]
        note = "fresh entry with a probability-1 edge"
    return s, [e for e in edges if e.prob > 0], note


def csg_quant_to_rcsg_qual(csg: Rcsg, start: str, p) -> QualReduction:
    """Build a 1-RCSG whose value at its entry is 1 iff the CSG value at ``start`` is ``>= p``.

    The CSG is cleaned of vertices where the minimizer forces value 0, its
    residual mass is sent to a terminal "0", the threshold is moved to 1/2,
    and the result is placed in front of a component that calls itself twice:
    "1" becomes the exit and "0" the first call.
    """
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError("threshold must lie in [0,1]")
    if len(csg.components) != 1 or csg.components[0].boxes:
        raise ValueError("expected a finite CSG: one component without boxes")
    comp = csg.components[0]
    if len(comp.exits) != 1:
        raise ValueError("the CSG needs exactly one terminal node")
    one = comp.exits[0]
    csg.vertex(start)
    removed = zero_set(csg).zero_vertices
    if start in removed:
        return QualReduction(None, start, p, removed, value_zero=True, notes=("start has value 0",))

    taken = set(csg.vertices)
    taken |= {"b1", "b2"}
    kept = [v for v in comp.nodes if v.id not in removed]
    has_incoming = any(t.target == start for t in comp.transitions)
    zero_tag = "\0zero"
    entry, shift_edges, note = _threshold_shift(start, p, one, zero_tag, taken, has_incoming)
    call = port_id("b1", entry)

    def redirect(dst: str) -> str:
        return call if dst == zero_tag or dst in removed else dst

    edges = []
    mass: dict[str, Fraction] = {}
    for t in list(comp.transitions) + shift_edges:
        if t.source in removed:
            continue
        if t.prob is not None:
            if t.prob == 0:
                continue
            mass[t.source] = mass.get(t.source, Fraction(0)) + t.prob
            edges.append(prob_edge(t.source, redirect(t.target), t.prob))
        else:
            edges.append(move_edge(t.source, redirect(t.target), *t.moves))
    for v in kept:
        if v.kind is VertexKind.PROB and mass.get(v.id, 0) < 1:
            edges.append(prob_edge(v.id, call, 1 - mass.get(v.id, Fraction(0))))
    # merge parallel probabilistic edges created by the redirection
    merged: dict[tuple[str, str], Fraction] = {}
    out = []
    for e in edges:
        if e.prob is None:
            out.append(e)
        else:
            merged[(e.source, e.target)] = merged.get((e.source, e.target), Fraction(0)) + e.prob
    out = [prob_edge(s, d, q) for (s, d), q in merged.items()] + out
    out += [prob_edge(port_id("b1", one), port_id("b2", entry), 1), prob_edge(port_id("b2", one), one, 1)]

    nodes = list(kept)
    if entry != start:
        nodes.insert(0, Vertex(entry, VertexKind.PROB))
    name = "A1"
    a1 = Component(
        name, tuple(nodes), (entry,), (one,), (Box("b1", name), Box("b2", name)), tuple(out)
    )
    model = Rcsg((a1,), csg.moves1, csg.moves2)
    return QualReduction(model, entry, p, removed, notes=(note,))
