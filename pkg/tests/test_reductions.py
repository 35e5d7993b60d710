import random
from fractions import Fraction

import mpmath
import pytest

from generators import convergent_models
from oracles import gadget_value, sqrt_sum_value
from rcsg.catalog import example_rcsg, single_coin
from rcsg.equations import build_system
from rcsg.model import Component, Rcsg, Vertex, VertexKind, node, prob_edge, validate
from rcsg.modelfile import parse, serialize
from rcsg.qualitative import Verdict, almost_sure_report
from rcsg.reductions import (
    COIN,
    coin_edges,
    csg_quant_to_rcsg_qual,
    derandomize,
    gadget_spec,
    newton_sqrt_upper,
    sqrt_sum_gadget,
    sqrt_sum_instance,
)
from rcsg.solver import value_iterate


def chain(dist):
    """u -> t0..tk with ``dist``; ti reaches the exit with probability (i+1)/(k+2), else a dead loop."""
    names = [f"t{i}" for i in range(len(dist))]
    nodes = [node("u")] + [node(n) for n in names] + [node("z"), Vertex("t", VertexKind.EXIT)]
    edges = [prob_edge("u", n, p) for n, p in zip(names, dist)] + [prob_edge("z", "z", 1)]
    for i, n in enumerate(names):
        q = Fraction(i + 1, len(dist) + 1)
        edges += [prob_edge(n, "t", q), prob_edge(n, "z", 1 - q)]
    return Rcsg((Component("A", tuple(nodes), ("u",), ("t",), (), tuple(edges)),))


def values(model, tol=1e-13):
    return value_iterate(build_system(model), tol, 10**7).as_dict()


def test_coin_edges():
    edges = coin_edges("c", "h", "t")
    wiring = {e.moves: e.target for e in edges}
    assert wiring == {("a", "b"): "t", ("b", "a"): "t", ("a", "a"): "h", ("b", "b"): "h"}


def test_fair_coin_is_one_state():
    m = chain([Fraction(1, 2), Fraction(1, 2)])
    d = derandomize(m)
    assert validate(d).ok
    assert {t.target for t in d.out_transitions("u")} == {"t0", "t1"}
    assert d.vertex("u").moves1 == COIN
    assert values(d)["u"] == pytest.approx(values(m)["u"], abs=1e-12)


def test_point_mass_is_single_edge():
    m = Rcsg((Component("A", (node("u"), Vertex("t", VertexKind.EXIT)), ("u",), ("t",), (),
                        (prob_edge("u", "t", 1),)),))
    d = derandomize(m)
    trs = d.out_transitions("u")
    assert [(t.moves, t.target) for t in trs] == [(("a", "a"), "t")]


def test_three_eighths_ladder():
    m = chain([Fraction(3, 8), Fraction(5, 8)])
    d = derandomize(m)
    coins = [u for u in d.vertices if u.startswith("u~")]
    assert 1 <= len(coins) <= 6
    assert values(d)["u"] == pytest.approx(values(m)["u"], abs=1e-10)


def test_restart_clones_entry():
    m = chain([Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)])
    d = derandomize(m)
    assert validate(d).ok and "u" in d.vertices
    assert values(d)["u"] == pytest.approx(values(m)["u"], abs=1e-9)


def test_substochastic_mass_goes_dead():
    m = Rcsg((Component("A", (node("u"), Vertex("t", VertexKind.EXIT)), ("u",), ("t",), (),
                        (prob_edge("u", "t", "1/4"),)),), substochastic=True)
    d = derandomize(m)
    assert any("dead" in u for u in d.vertices)
    assert values(d)["u"] == pytest.approx(0.25, abs=1e-10)


def test_derandomized_example_round_trips():
    d = derandomize(example_rcsg())
    assert parse(serialize(d)) == d
    before, after = values(example_rcsg()), values(d)
    for u, x in before.items():
        assert after[u] == pytest.approx(x, abs=1e-9)


def test_derandomize_random_models():
    for seed, model, res in convergent_models(1000, 10):
        d = derandomize(model)
        assert validate(d).ok, seed
        after = values(d, 1e-12)
        for u, x in res.as_dict().items():
            assert after[u] == pytest.approx(x, abs=2e-6), (seed, u)


@pytest.mark.parametrize("a", [2, 3, 5, 17, 4, 10, 99])
def test_newton_bound(a):
    m = newton_sqrt_upper(a)
    assert m * m >= a and (m - Fraction(1, 2 * a)) ** 2 < a


@pytest.mark.parametrize("a", [2, 3, 5, 17, 4])
def test_gadget_value(a):
    spec, model = sqrt_sum_gadget(a)
    assert spec.check() == []
    assert spec.discriminant == a
    assert validate(model, require_single_exit=True).ok
    exact = gadget_value(spec.d, spec.e, a)
    assert abs(values(model)["u"] - float(exact)) <= 1e-9
    assert spec.value() == pytest.approx(float(exact), abs=1e-14)


@pytest.mark.parametrize("a", [1, 0, -3, 2.5])
def test_gadget_rejects(a):
    with pytest.raises(ValueError):
        gadget_spec(a)


def test_sum_instance():
    inst = sqrt_sum_instance([2, 3], 3)
    assert inst.D == Fraction(-99, 20) and inst.E == Fraction(8, 5)
    assert inst.threshold == Fraction(-3, 20)
    assert sum(inst.weights) == 1
    exact = sqrt_sum_value(inst.D, inst.E, [2, 3])
    assert abs(values(inst.model)["s"] - float(exact)) <= 1e-9
    rec = inst.record()
    assert rec["D"]["exact"] == "-99/20" and rec["query"] == inst.query()


def test_single_gadget_instance():
    inst = sqrt_sum_instance([5], 2)
    spec = gadget_spec(5)
    assert inst.D == spec.d and inst.E == spec.e and inst.weights == (1,)


def test_empty_instance():
    with pytest.raises(ValueError):
        sqrt_sum_instance([], 1)


@pytest.mark.parametrize("q, verdict", [("2/5", Verdict.VALUE_LT_1), ("3/5", Verdict.NUMERICALLY_1)])
def test_coin_reduction(q, verdict):
    red = csg_quant_to_rcsg_qual(single_coin(q), "u", "1/2")
    assert not red.value_zero and red.removed == {"z"}
    assert validate(red.model, require_single_exit=True).ok
    assert almost_sure_report(red.model)[red.start].verdict is verdict


@pytest.mark.parametrize("q, p", [("1/5", "1/3"), ("2/5", "1/3"), ("7/10", "3/4"), ("4/5", "3/4")])
def test_shifted_thresholds(q, p):
    red = csg_quant_to_rcsg_qual(single_coin(q), "u", p)
    rep = almost_sure_report(red.model)
    expect = Verdict.NUMERICALLY_1 if Fraction(q) >= Fraction(p) else Verdict.VALUE_LT_1
    assert rep[red.start].verdict is expect


def test_zero_start_short_circuits():
    red = csg_quant_to_rcsg_qual(single_coin("1/2"), "z", "1/2")
    assert red.value_zero and red.model is None


def test_reduction_rejects():
    with pytest.raises(ValueError):
        csg_quant_to_rcsg_qual(single_coin("1/2"), "u", "3/2")
    with pytest.raises(ValueError):
        csg_quant_to_rcsg_qual(example_rcsg(), "s", "1/2")
