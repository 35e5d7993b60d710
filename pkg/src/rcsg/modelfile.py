"""Reading and writing the line-oriented model file format.

Grammar (one statement per line, ``#`` starts a comment)::

    model      := header* component+
    header     := "moves1" MOVE* | "moves2" MOVE* | "substochastic"
    component  := "component" NAME NL stmt* "end"
    stmt       := "entry" NODE kind
                | "exit" NODE
                | "node" NODE kind
                | "box" BOX COMPONENT
                | "port" PORT "play" MOVES MOVES
                | "edge" VERTEX VERTEX (RATIONAL | MOVE MOVE)
    kind       := "prob" | "play" MOVES MOVES
    MOVES      := MOVE ("," MOVE)*
    RATIONAL   := INT "/" INT | INT

Box ports are written ``(box,node)`` and are created implicitly by ``box``
statements; ``port`` only marks a return port as a play vertex.  Rationals
never use decimal points.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .model import Box, Component, Rcsg, Transition, Vertex, VertexKind, port_id

_RATIONAL = re.compile(r"^(\d+)(?:/(\d+))?$")
_NAME = re.compile(r"^[A-Za-z0-9_.~'\-]+$")
_PORT = re.compile(r"^\(([^,()\s]+),([^,()\s]+)\)$")


class ModelFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        loc = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(loc + message)


class ModelSyntaxError(ModelFormatError):
    pass


class RationalFormatError(ModelSyntaxError):
    pass


class ModelReferenceError(ModelFormatError):
    pass


def parse_rational(text: str, line: int | None = None, col: int | None = None) -> Fraction:
    m = _RATIONAL.match(text)
    if not m:
        raise RationalFormatError(f"malformed rational {text!r}", line, col)
    num, den = int(m.group(1)), int(m.group(2) or 1)
    if den == 0:
        raise RationalFormatError(f"zero denominator in {text!r}", line, col)
    return Fraction(num, den)


def format_rational(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


def _tokens(line: str) -> list[tuple[str, int]]:
    body = line.split("#", 1)[0]
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", body)]


class _Pending:
    """Component under construction, references resolved at the end."""

    def __init__(self, name: str, line: int):
        self.name, self.line = name, line
        self.nodes: list[Vertex] = []
        self.entries: list[str] = []
        self.exits: list[str] = []
        self.boxes: list[tuple[Box, int, int]] = []
        self.edges: list[tuple[str, str, Fraction | None, tuple[str, str] | None, int, int]] = []
        self.ports: list[tuple[str, tuple[str, ...], tuple[str, ...], int, int]] = []


def parse(text: str) -> Rcsg:
    moves1: list[str] | None = None
    moves2: list[str] | None = None
    substochastic = False
    pending: list[_Pending] = []
    current: _Pending | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokens(raw)
        if not toks:
            continue
        word, col = toks[0]
        args = toks[1:]

        if current is None:
            if word == "moves1":
                moves1 = [t for t, _ in args]
            elif word == "moves2":
                moves2 = [t for t, _ in args]
            elif word == "substochastic":
                _arity(toks, 1, lineno)
                substochastic = True
            elif word == "component":
                _arity(toks, 2, lineno)
                current = _Pending(_name(*args[0], lineno), lineno)
            else:
                raise ModelSyntaxError(f"unexpected {word!r} outside a component", lineno, col)
            continue

        if word == "end":
            _arity(toks, 1, lineno)
            pending.append(current)
            current = None
        elif word in ("entry", "node"):
            if len(args) < 2:
                raise ModelSyntaxError(f"'{word}' needs a name and a kind", lineno, col)
            vid = _name(*args[0], lineno)
            current.nodes.append(_kind(vid, args[1:], lineno))
            if word == "entry":
                current.entries.append(vid)
        elif word == "exit":
            _arity(toks, 2, lineno)
            vid = _name(*args[0], lineno)
            current.nodes.append(Vertex(vid, VertexKind.EXIT))
            current.exits.append(vid)
        elif word == "box":
            _arity(toks, 3, lineno)
            current.boxes.append(
                (Box(_name(*args[0], lineno), _name(*args[1], lineno)), lineno, args[1][1])
            )
        elif word == "port":
            if len(args) != 4 or args[1][0] != "play":
                raise ModelSyntaxError("expected 'port (b,ex) play MOVES MOVES'", lineno, col)
            pid, pcol = args[0]
            if not _PORT.match(pid):
                raise ModelSyntaxError(f"malformed port id {pid!r}", lineno, pcol)
            current.ports.append(
                (pid, _moves(*args[2], lineno), _moves(*args[3], lineno), lineno, pcol)
            )
        elif word == "edge":
            if len(args) not in (3, 4):
                raise ModelSyntaxError("expected 'edge SRC DST LABEL'", lineno, col)
            (src, scol), (dst, _) = args[0], args[1]
            if len(args) == 3:
                prob = parse_rational(args[2][0], lineno, args[2][1])
                current.edges.append((src, dst, prob, None, lineno, scol))
            else:
                current.edges.append((src, dst, None, (args[2][0], args[3][0]), lineno, scol))
        else:
            raise ModelSyntaxError(f"unknown statement {word!r}", lineno, col)

    if current is not None:
        raise ModelSyntaxError(f"component {current.name!r} is missing 'end'", current.line, 1)
    if not pending:
        raise ModelSyntaxError("no components defined", 1, 1)
    return _resolve(pending, moves1, moves2, substochastic)


def _arity(toks, n, lineno):
    if len(toks) != n:
        raise ModelSyntaxError(
            f"'{toks[0][0]}' takes {n - 1} argument(s), got {len(toks) - 1}", lineno, toks[0][1]
        )


def _name(text: str, col: int, lineno: int) -> str:
    if not _NAME.match(text):
        raise ModelSyntaxError(f"invalid identifier {text!r}", lineno, col)
    return text


def _moves(text: str, col: int, lineno: int) -> tuple[str, ...]:
    parts = text.split(",")
    for p in parts:
        _name(p, col, lineno)
    return tuple(parts)


def _kind(vid: str, args, lineno) -> Vertex:
    kind, col = args[0]
    if kind == "prob" and len(args) == 1:
        return Vertex(vid, VertexKind.PROB)
    if kind == "play" and len(args) == 3:
        return Vertex(vid, VertexKind.PLAY, _moves(*args[1], lineno), _moves(*args[2], lineno))
    raise ModelSyntaxError(f"expected 'prob' or 'play MOVES MOVES', got {kind!r}", lineno, col)


def _resolve(pending: list[_Pending], moves1, moves2, substochastic) -> Rcsg:
    by_name = {p.name: p for p in pending}
    comps = []
    for p in pending:
        known = {v.id for v in p.nodes}
        for box, line, col in p.boxes:
            callee = by_name.get(box.target)
            if callee is None:
                raise ModelReferenceError(f"box {box.id!r} targets unknown component {box.target!r}", line, col)
            known |= {port_id(box.id, n) for n in callee.entries + callee.exits}
        box_ids = {b.id for b, _, _ in p.boxes}
        for pid, _, _, line, col in p.ports:
            if pid not in known:
                raise ModelReferenceError(f"unknown port {pid!r}", line, col)
        transitions = []
        for src, dst, prob, mv, line, col in p.edges:
            for ref in (src, dst):
                if ref not in known:
                    m = _PORT.match(ref)
                    if m and m.group(1) not in box_ids:
                        raise ModelReferenceError(f"reference to undeclared box {m.group(1)!r}", line, col)
                    raise ModelReferenceError(f"unknown vertex {ref!r}", line, col)
            transitions.append(Transition(src, dst, prob=prob, moves=mv))
        comps.append(
            Component(
                name=p.name,
                nodes=tuple(p.nodes),
                entries=tuple(p.entries),
                exits=tuple(p.exits),
                boxes=tuple(b for b, _, _ in p.boxes),
                transitions=tuple(transitions),
                port_moves=tuple((pid, m1, m2) for pid, m1, m2, _, _ in p.ports),
            )
        )
    if moves1 is None or moves2 is None:
        from .model import alphabets

        a1, a2 = alphabets(comps)
        moves1 = list(a1) if moves1 is None else moves1
        moves2 = list(a2) if moves2 is None else moves2
    return Rcsg(tuple(comps), tuple(moves1), tuple(moves2), substochastic)


def serialize(model: Rcsg) -> str:
    out = [f"moves1 {' '.join(model.moves1)}".rstrip(), f"moves2 {' '.join(model.moves2)}".rstrip()]
    if model.substochastic:
        out.append("substochastic")
    for comp in model.components:
        out.append("")
        out.append(f"component {comp.name}")
        for v in comp.nodes:
            if v.kind is VertexKind.EXIT:
                out.append(f"  exit {v.id}")
                continue
            word = "entry" if v.id in comp.entries else "node"
            if v.kind is VertexKind.PLAY:
                out.append(f"  {word} {v.id} play {','.join(v.moves1)} {','.join(v.moves2)}")
            else:
                out.append(f"  {word} {v.id} prob")
        for box in comp.boxes:
            out.append(f"  box {box.id} {box.target}")
        for pid, m1, m2 in comp.port_moves:
            out.append(f"  port {pid} play {','.join(m1)} {','.join(m2)}")
        for tr in comp.transitions:
            if tr.prob is not None:
                out.append(f"  edge {tr.source} {tr.target} {format_rational(tr.prob)}")
            else:
                out.append(f"  edge {tr.source} {tr.target} {tr.moves[0]} {tr.moves[1]}")
        out.append("end")
    return "\n".join(out) + "\n"


def load(path) -> Rcsg:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def dump(model: Rcsg, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(model))
