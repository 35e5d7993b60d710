"""Small named models used in examples, tests and the CLI."""

from __future__ import annotations

from fractions import Fraction

from .model import Box, Component, Rcsg, Vertex, VertexKind, move_edge, node, play, prob_edge


def example_rcsg() -> Rcsg:
    """The one-component 1-exit game with nodes s, t, u1..u5 and boxes b1, b2."""
    nodes = (
        node("s"),
        Vertex("t", VertexKind.EXIT),
        play("u1", "LR", "LR"),
        node("u2"),
        node("u3"),
        play("u4", "L", "LR"),
        node("u5"),
    )
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    transitions = (
        prob_edge("s", "(b1,s)", half),
        prob_edge("s", "t", quarter),
        prob_edge("s", "u1", quarter),
        move_edge("u1", "u2", "L", "L"),
        move_edge("u1", "u3", "L", "R"),
        move_edge("u1", "u4", "R", "L"),
        move_edge("u1", "u5", "R", "R"),
        prob_edge("u2", "(b2,s)", 1),
        prob_edge("u3", "u2", half),
        prob_edge("u3", "t", half),
        move_edge("u4", "(b2,s)", "L", "L"),
        move_edge("u4", "t", "L", "R"),
        prob_edge("u5", "u5", 1),
        prob_edge("(b1,t)", "(b2,s)", 1),
        prob_edge("(b2,t)", "t", 1),
    )
    comp = Component("f", nodes, ("s",), ("t",), (Box("b1", "f"), Box("b2", "f")), transitions)
    return Rcsg((comp,), ("L", "R"), ("L", "R"))


# least fixed point of example_rcsg()
EXAMPLE_LFP = {
    "t": 1.0,
    "(b2,t)": 1.0,
    "u5": 0.0,
    "s": 0.5,
    "u1": 0.5,
    "u2": 0.5,
    "u4": 0.5,
    "(b1,t)": 0.5,
    "(b2,s)": 0.5,
    "u3": 0.75,
    "(b1,s)": 0.25,
}


def two_box_rmc(p2) -> Rcsg:
    """One-component 1-RMC: ``en`` exits with ``p2`` or calls b1 then b2 with ``1 - p2``.

    The termination probability from ``en`` is the least root of
    ``(1-p2) x^2 - x + p2 = 0``, i.e. ``min(1, p2/(1-p2))``.
    """
    p2 = Fraction(p2)
    p1 = 1 - p2
    nodes = (node("en"), Vertex("ex", VertexKind.EXIT))
    transitions = [prob_edge("en", "ex", p2), prob_edge("en", "(b1,en)", p1)]
    transitions += [prob_edge("(b1,ex)", "(b2,en)", 1), prob_edge("(b2,ex)", "ex", 1)]
    comp = Component(
        "A1", nodes, ("en",), ("ex",), (Box("b1", "A1"), Box("b2", "A1")), tuple(t for t in transitions if t.prob)
    )
    return Rcsg((comp,))


def matching_pennies() -> Rcsg:
    """Finite CSG: matching moves at u reach the exit, mismatches a dead node."""
    nodes = (play("u", "HT", "HT"), Vertex("t", VertexKind.EXIT), node("z"))
    transitions = (
        move_edge("u", "t", "H", "H"),
        move_edge("u", "t", "T", "T"),
        move_edge("u", "z", "H", "T"),
        move_edge("u", "z", "T", "H"),
        prob_edge("z", "z", 1),
    )
    return Rcsg((Component("G", nodes, (), ("t",), (), transitions),), ("H", "T"), ("H", "T"))


def single_coin(q, dead_loop: bool = True) -> Rcsg:
    """Finite CSG with one coin vertex u: probability ``q`` to the exit, else to a dead node."""
    q = Fraction(q)
    nodes = (node("u"), Vertex("t", VertexKind.EXIT), node("z"))
    transitions = [prob_edge("u", "t", q), prob_edge("u", "z", 1 - q)]
    if dead_loop:
        transitions.append(prob_edge("z", "z", 1))
    return Rcsg((Component("G", nodes, ("u",), ("t",), (), tuple(t for t in transitions if t.prob)),))


BUILTIN = {
    "example": example_rcsg,
    "matching-pennies": matching_pennies,
}
