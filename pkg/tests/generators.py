"""Random small well-formed 1-exit models for property tests."""

from __future__ import annotations

import random
from fractions import Fraction

from rcsg.matrix_game import MixedStrategy
from rcsg.model import Box, Component, Rcsg, Transition, Vertex, VertexKind, move_edge, port_id, prob_edge


def random_distribution(rng: random.Random, targets: list[str], max_den: int = 16) -> list[Transition]:
    """Rational weights with a common denominator of at most ``max_den``."""
    k = rng.randint(1, min(3, len(targets)))
    chosen = rng.sample(targets, k)
    q = rng.randint(k, max_den)
    cuts = sorted(rng.sample(range(1, q), k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [q])]
    return [(v, Fraction(n, q)) for v, n in zip(chosen, parts)]


def _prob_edges(rng, src, targets, max_den):
    return [prob_edge(src, v, p) for v, p in random_distribution(rng, targets, max_den)]


def _play_edges(rng, src, m1, m2, targets):
    return [move_edge(src, rng.choice(targets), g1, g2) for g1 in m1 for g2 in m2]


def random_model(
    rng: random.Random,
    max_vertices: int = 10,
    max_den: int = 16,
    play_prob: float = 0.35,
    boxes: bool = True,
    dead_end_prob: float = 0.05,
) -> Rcsg:
    """A random valid 1-exit RCSG with at most ``max_vertices`` vertices."""
    n_comp = rng.choice([1, 1, 2]) if boxes else 1
    budget = max_vertices
    layout = []
    for i in range(n_comp):
        share = budget // (n_comp - i)
        n_box = 0
        if boxes:
            n_box = rng.randint(0, max(0, min(2, (share - 2) // 2)))
        n_int = rng.randint(0, max(0, min(3, share - 2 - 2 * n_box)))
        budget -= 2 + n_int + 2 * n_box
        layout.append((n_int, n_box))
    names = [f"C{i}" for i in range(n_comp)]
    comps = []
    for i, (n_int, n_box) in enumerate(layout):
        c = names[i]
        en, ex = f"en{i}", f"ex{i}"
        internal = [f"v{i}_{j}" for j in range(n_int)]
        bx = [Box(f"b{i}_{j}", rng.choice(names)) for j in range(n_box)]
        calls = [port_id(b.id, f"en{names.index(b.target)}") for b in bx]
        rets = [port_id(b.id, f"ex{names.index(b.target)}") for b in bx]
        targets = internal + [ex] + calls
        nodes, edges, port_moves = [], [], []
        for src in [en] + internal + rets:
            is_play = rng.random() < play_prob
            if is_play:
                m1 = tuple(rng.sample(["L", "R"], rng.randint(1, 2)))
                m2 = tuple(rng.sample(["L", "R"], rng.randint(1, 2)))
                edges += _play_edges(rng, src, sorted(m1), sorted(m2), targets)
                if src in rets:
                    port_moves.append((src, tuple(sorted(m1)), tuple(sorted(m2))))
                else:
                    nodes.append(Vertex(src, VertexKind.PLAY, tuple(sorted(m1)), tuple(sorted(m2))))
            else:
                if src not in rets:
                    nodes.append(Vertex(src, VertexKind.PROB))
                if rng.random() >= dead_end_prob:
                    edges += _prob_edges(rng, src, targets, max_den)
        nodes.append(Vertex(ex, VertexKind.EXIT))
        comps.append(Component(c, tuple(nodes), (en,), (ex,), tuple(bx), tuple(edges), tuple(port_moves)))
    return Rcsg(tuple(comps), ("L", "R"), ("L", "R"))


def random_strategy(rng: random.Random, model: Rcsg, player: int) -> dict[str, MixedStrategy]:
    out = {}
    for u in model.play_vertices():
        v = model.vertex(u)
        moves = v.moves1 if player == 1 else v.moves2
        w = [rng.random() + 0.05 for _ in moves]
        s = sum(w)
        out[u] = MixedStrategy(moves, tuple(x / s for x in w))
    return out


def reweight(rng: random.Random, model: Rcsg, max_den: int = 16) -> Rcsg:
    """Same support, fresh positive rational probabilities."""
    comps = []
    for comp in model.components:
        groups: dict[str, list[Transition]] = {}
        keep = []
        for t in comp.transitions:
            if t.prob is None:
                keep.append(t)
            else:
                groups.setdefault(t.source, []).append(t)
        for src, trs in groups.items():
            k = len(trs)
            q = rng.randint(k, max(k, max_den))
            cuts = sorted(rng.sample(range(1, q), k - 1))
            parts = [b - a for a, b in zip([0] + cuts, cuts + [q])]
            keep += [prob_edge(src, t.target, Fraction(n, q)) for t, n in zip(trs, parts)]
        comps.append(Component(comp.name, comp.nodes, comp.entries, comp.exits, comp.boxes,
                               tuple(keep), comp.port_moves))
    return Rcsg(tuple(comps), model.moves1, model.moves2, model.substochastic)


def convergent_models(seed0: int, count: int, tol: float = 1e-12, max_iter: int = 10**6, **kw):
    """The first ``count`` random models (by seed) whose value iteration converges.

    Critical instances, where Kleene iteration converges sublinearly, are
    skipped: plain iteration cannot resolve their values to the precision
    the comparisons need.  Yields ``(seed, model, result)``.
    """
    from rcsg.equations import build_system
    from rcsg.solver import value_iterate

    seed, found = seed0, 0
    while found < count:
        model = random_model(random.Random(seed), **kw)
        res = value_iterate(build_system(model), tol, max_iter)
        if res.converged:
            yield seed, model, res
            found += 1
        seed += 1
