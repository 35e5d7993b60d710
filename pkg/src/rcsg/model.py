"""Static data model for recursive concurrent stochastic games.

An :class:`Rcsg` is an ordered tuple of :class:`Component` objects plus the
two players' move alphabets.  Box ports are not stored explicitly; they are
derived from each box's target component, so the vertex set of a model is
always consistent with its boxes.  Probabilities are exact
:class:`fractions.Fraction` values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable


class VertexKind(str, enum.Enum):
    EXIT = "exit"
    PROB = "probabilistic"
    CALL = "call_port"
    RETURN = "return_port"
    PLAY = "play"


class VertexType(str, enum.Enum):
    """Equation classes of the minimax system."""

    ONE = "Type_1"
    RAND = "Type_rand"
    CALL = "Type_call"
    PLAY = "Type_play"


class UnknownVertexError(KeyError):
    pass


def port_id(box: str, node: str) -> str:
    return f"({box},{node})"


@dataclass(frozen=True)
class Vertex:
    """A vertex of a component.

    ``box`` and ``port_node`` are set only for call/return ports.  A return
    port with nonempty legal-move sets is a play vertex.
    """

    id: str
    kind: VertexKind
    moves1: tuple[str, ...] = ()
    moves2: tuple[str, ...] = ()
    box: str | None = None
    port_node: str | None = None

    @property
    def is_play(self) -> bool:
        return self.kind is VertexKind.PLAY or (
            self.kind is VertexKind.RETURN and bool(self.moves1 or self.moves2)
        )

    @property
    def is_port(self) -> bool:
        return self.kind in (VertexKind.CALL, VertexKind.RETURN)


@dataclass(frozen=True)
class Box:
    id: str
    target: str  # name of the component Y(b)


@dataclass(frozen=True)
class Transition:
    """Either a probabilistic edge (``prob`` set) or a move-pair edge."""

    source: str
    target: str
    prob: Fraction | None = None
    moves: tuple[str, str] | None = None

    def __post_init__(self):
        if (self.prob is None) == (self.moves is None):
            raise ValueError("transition needs exactly one of prob / moves")
        if self.prob is not None and not isinstance(self.prob, Fraction):
            object.__setattr__(self, "prob", Fraction(self.prob))
        if self.moves is not None:
            object.__setattr__(self, "moves", tuple(self.moves))


@dataclass(frozen=True)
class Component:
    name: str
    nodes: tuple[Vertex, ...]
    entries: tuple[str, ...]
    exits: tuple[str, ...]
    boxes: tuple[Box, ...] = ()
    transitions: tuple[Transition, ...] = ()
    # (return port id, moves1, moves2) for return ports acting as play vertices
    port_moves: tuple[tuple[str, tuple[str, ...], tuple[str, ...]], ...] = ()

    def port_moves_map(self) -> dict[str, tuple[tuple[str, ...], tuple[str, ...]]]:
        return {pid: (m1, m2) for pid, m1, m2 in self.port_moves}


@dataclass(frozen=True)
class Rcsg:
    components: tuple[Component, ...]
    moves1: tuple[str, ...] = ()
    moves2: tuple[str, ...] = ()
    # probabilistic rows may sum to less than one; the rest is lost mass
    substochastic: bool = False

    def component(self, name: str) -> Component:
        for comp in self.components:
            if comp.name == name:
                return comp
        raise KeyError(name)

    @cached_property
    def _index(self) -> tuple[dict[str, Vertex], dict[str, str]]:
        vertices: dict[str, Vertex] = {}
        owner: dict[str, str] = {}
        by_name = {c.name: c for c in self.components}
        for comp in self.components:
            for v in comp.nodes:
                vertices.setdefault(v.id, v)
                owner.setdefault(v.id, comp.name)
            for box in comp.boxes:
                callee = by_name.get(box.target)
                if callee is None:
                    continue
                for en in callee.entries:
                    pid = port_id(box.id, en)
                    vertices.setdefault(
                        pid, Vertex(pid, VertexKind.CALL, box=box.id, port_node=en)
                    )
                    owner.setdefault(pid, comp.name)
                for ex in callee.exits:
                    pid = port_id(box.id, ex)
                    m1, m2 = comp.port_moves_map().get(pid, ((), ()))
                    vertices.setdefault(
                        pid,
                        Vertex(
                            pid,
                            VertexKind.RETURN,
                            tuple(m1),
                            tuple(m2),
                            box=box.id,
                            port_node=ex,
                        ),
                    )
                    owner.setdefault(pid, comp.name)
        return vertices, owner

    @property
    def vertices(self) -> dict[str, Vertex]:
        """All vertices, ordered by component: nodes first, then box ports."""
        return self._index[0]

    def vertex(self, vid: str) -> Vertex:
        try:
            return self.vertices[vid]
        except KeyError:
            raise UnknownVertexError(vid) from None

    def component_of(self, vid: str) -> Component:
        try:
            return self.component(self._index[1][vid])
        except KeyError:
            raise UnknownVertexError(vid) from None

    @cached_property
    def _out(self) -> dict[str, tuple[Transition, ...]]:
        out: dict[str, list[Transition]] = {v: [] for v in self.vertices}
        for comp in self.components:
            for tr in comp.transitions:
                out.setdefault(tr.source, []).append(tr)
        return {k: tuple(v) for k, v in out.items()}

    def out_transitions(self, vid: str) -> tuple[Transition, ...]:
        return self._out.get(vid, ())

    @cached_property
    def _boxes(self) -> dict[str, Box]:
        return {b.id: b for c in self.components for b in c.boxes}

    def box(self, box_id: str) -> Box:
        return self._boxes[box_id]

    def exit_of(self, component: str) -> str:
        """The unique exit of a component (1-exit models only)."""
        exits = self.component(component).exits
        if len(exits) != 1:
            raise ValueError(f"component {component!r} has {len(exits)} exits")
        return exits[0]

    def return_port_of(self, call_port: str) -> str:
        """For a call port ``(b,en)``, the return port ``(b,ex)`` of ``Y(b)``'s exit."""
        v = self.vertex(call_port)
        if v.kind is not VertexKind.CALL:
            raise ValueError(f"{call_port!r} is not a call port")
        return port_id(v.box, self.exit_of(self.box(v.box).target))

    def play_vertices(self) -> list[str]:
        return [vid for vid, v in self.vertices.items() if v.is_play]

    @property
    def is_single_exit(self) -> bool:
        return all(len(c.exits) == 1 for c in self.components)


def vertex_type(model: Rcsg, u: str) -> VertexType:
    v = model.vertex(u)
    if v.kind is VertexKind.EXIT:
        return VertexType.ONE
    if v.kind is VertexKind.CALL:
        return VertexType.CALL
    if v.is_play:
        return VertexType.PLAY
    return VertexType.RAND


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.where}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def add(self, code: str, where: str, message: str) -> None:
        self.violations.append(Violation(code, where, message))

    def __str__(self):
        if self.ok:
            return "model is well-formed"
        return "\n".join(str(v) for v in self.violations)


def validate(model: Rcsg, require_single_exit: bool = False) -> ValidationReport:
    """Check every structural and probabilistic invariant of ``model``.

    Violations are collected, never raised.
    """
    rep = ValidationReport()
    names = [c.name for c in model.components]
    if not model.components:
        rep.add("empty", "model", "model has no components")
    for dup in _duplicates(names):
        rep.add("duplicate-component", dup, "component name used twice")
    for dup in _duplicates(b.id for c in model.components for b in c.boxes):
        rep.add("duplicate-box", dup, "box id used twice")

    seen: set[str] = set()
    for comp in model.components:
        ids = [v.id for v in comp.nodes]
        for box in comp.boxes:
            if box.target not in names:
                rep.add("bad-box-target", box.id, f"unknown component {box.target!r}")
                continue
            callee = model.component(box.target)
            ids += [port_id(box.id, n) for n in callee.entries + callee.exits]
        for vid in ids:
            if vid in seen:
                rep.add("duplicate-vertex", vid, "vertex id is not globally unique")
            seen.add(vid)

    for comp in model.components:
        _validate_component(model, comp, rep, require_single_exit)
    return rep


def _duplicates(items: Iterable[str]) -> list[str]:
    seen, dups = set(), []
    for it in items:
        if it in seen and it not in dups:
            dups.append(it)
        seen.add(it)
    return dups


def _validate_component(model: Rcsg, comp: Component, rep: ValidationReport, single_exit: bool):
    node_ids = {v.id for v in comp.nodes}
    where = f"component {comp.name}"
    for e in comp.entries:
        if e not in node_ids:
            rep.add("bad-entry", e, f"entry is not a node of {comp.name}")
    for x in comp.exits:
        if x not in node_ids:
            rep.add("bad-exit", x, f"exit is not a node of {comp.name}")
    if set(comp.entries) & set(comp.exits):
        rep.add("entry-exit-overlap", where, "entries and exits must be disjoint")
    if single_exit and len(comp.exits) != 1:
        rep.add("not-single-exit", where, f"has {len(comp.exits)} exits, expected 1")
    for v in comp.nodes:
        if (v.kind is VertexKind.EXIT) != (v.id in comp.exits):
            rep.add("exit-kind", v.id, "kind 'exit' must coincide with the exit set")
        if v.kind in (VertexKind.CALL, VertexKind.RETURN):
            rep.add("port-as-node", v.id, "ports are derived from boxes, not declared")

    local = {vid for vid in model.vertices if _owner(model, vid) == comp.name}
    entries = set(comp.entries)
    for pid in comp.port_moves_map():
        pv = model.vertices.get(pid)
        if pv is None or pv.kind is not VertexKind.RETURN or pid not in local:
            rep.add("bad-port-moves", pid, "play moves given for a non-return-port")

    outgoing: dict[str, list[Transition]] = {}
    for tr in comp.transitions:
        tag = f"{tr.source} -> {tr.target}"
        if tr.source not in local:
            rep.add("unknown-source", tag, f"source not a vertex of {comp.name}")
            continue
        if tr.target not in local:
            rep.add("unknown-target", tag, f"target not a vertex of {comp.name}")
            continue
        src, dst = model.vertex(tr.source), model.vertex(tr.target)
        if src.kind in (VertexKind.EXIT, VertexKind.CALL):
            rep.add("source-kind", tag, f"{src.kind.value} vertices have no outgoing transitions")
        if tr.target in entries or dst.kind is VertexKind.RETURN:
            rep.add("target-kind", tag, "transitions may not enter entry nodes or return ports")
        if tr.prob is not None:
            if src.is_play:
                rep.add("label-kind", tag, "play vertex with a probabilistic edge")
            if not 0 <= tr.prob <= 1:
                rep.add("prob-range", tag, f"probability {tr.prob} outside [0,1]")
        else:
            if not src.is_play:
                rep.add("label-kind", tag, "probabilistic vertex with a move-pair edge")
        outgoing.setdefault(tr.source, []).append(tr)

    for vid, v in model.vertices.items():
        if vid not in local:
            continue
        trs = outgoing.get(vid, [])
        if v.is_play:
            _validate_play(model, v, trs, rep)
        elif v.kind in (VertexKind.PROB, VertexKind.RETURN) and trs:
            total = sum((t.prob for t in trs if t.prob is not None), Fraction(0))
            if model.substochastic:
                if total > 1:
                    rep.add("consistency", vid, f"outgoing probabilities sum to {total} > 1")
            elif total != 1:
                rep.add("consistency", vid, f"outgoing probabilities sum to {total} != 1")


def _owner(model: Rcsg, vid: str) -> str:
    return model._index[1][vid]


def _validate_play(model: Rcsg, v: Vertex, trs: list[Transition], rep: ValidationReport):
    if not v.moves1 or not v.moves2:
        rep.add("play-moves", v.id, "play vertex needs nonempty legal moves for both players")
    for m in v.moves1:
        if m not in model.moves1:
            rep.add("move-alphabet", v.id, f"player-1 move {m!r} not in alphabet")
    for m in v.moves2:
        if m not in model.moves2:
            rep.add("move-alphabet", v.id, f"player-2 move {m!r} not in alphabet")
    pairs: dict[tuple[str, str], int] = {}
    for t in trs:
        if t.moves is None:
            continue
        if t.moves[0] not in v.moves1 or t.moves[1] not in v.moves2:
            rep.add("illegal-move", v.id, f"move pair {t.moves} not legal here")
        pairs[t.moves] = pairs.get(t.moves, 0) + 1
    for g1 in v.moves1:
        for g2 in v.moves2:
            n = pairs.get((g1, g2), 0)
            if n != 1:
                rep.add(
                    "move-pair-count",
                    v.id,
                    f"move pair ({g1},{g2}) has {n} transitions, expected exactly 1",
                )


# --------------------------------------------------------------------------
# construction helpers


def node(vid: str, kind: str | VertexKind = VertexKind.PROB, moves1=(), moves2=()) -> Vertex:
    return Vertex(vid, VertexKind(kind), tuple(moves1), tuple(moves2))


def play(vid: str, moves1: Iterable[str], moves2: Iterable[str]) -> Vertex:
    return Vertex(vid, VertexKind.PLAY, tuple(moves1), tuple(moves2))


def prob_edge(src: str, dst: str, p) -> Transition:
    return Transition(src, dst, prob=Fraction(p))


def move_edge(src: str, dst: str, g1: str, g2: str) -> Transition:
    return Transition(src, dst, moves=(g1, g2))


def alphabets(components: Iterable[Component]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Move alphabets covering every legal move used in ``components``."""
    m1: dict[str, None] = {}
    m2: dict[str, None] = {}
    for c in components:
        for v in c.nodes:
            m1.update(dict.fromkeys(v.moves1))
            m2.update(dict.fromkeys(v.moves2))
        for _, a, b in c.port_moves:
            m1.update(dict.fromkeys(a))
            m2.update(dict.fromkeys(b))
    return tuple(m1), tuple(m2)
