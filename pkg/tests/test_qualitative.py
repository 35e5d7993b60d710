import random

import pytest

from generators import random_model, reweight
from rcsg.catalog import example_rcsg, matching_pennies, single_coin, two_box_rmc
from rcsg.equations import build_system, zero_vertices
from rcsg.model import Component, Rcsg, Vertex, VertexKind, node, prob_edge
from rcsg.qualitative import Verdict, almost_sure_report, numeric_zero_set, zero_set
from rcsg.solver import value_iterate


def test_example_zero_set():
    z = zero_set(example_rcsg())
    assert z.zero_vertices == {"u5"}
    assert "u5" in z and "s" not in z


def test_exit_only():
    m = Rcsg((Component("A", (Vertex("t", VertexKind.EXIT),), (), ("t",)),))
    z = zero_set(m)
    assert z.zero_vertices == frozenset() and z.iterations == 0


def test_minimizer_forces_zero():
    assert zero_set(matching_pennies()).zero_vertices == {"z"}
    assert zero_set(single_coin("1/3")).zero_vertices == {"z"}


def test_call_needs_both_halves():
    # en -> (b,en) with the box returning into a dead loop
    nodes = (node("en"), node("d"), Vertex("ex", VertexKind.EXIT))
    from rcsg.model import Box
    edges = (prob_edge("en", "(b,en)", "1/2"), prob_edge("en", "ex", "1/2"),
             prob_edge("(b,ex)", "d", 1), prob_edge("d", "d", 1))
    m = Rcsg((Component("A", nodes, ("en",), ("ex",), (Box("b", "A"),), edges),))
    assert zero_set(m).zero_vertices == {"d", "(b,ex)", "(b,en)"}


def test_model_and_system_agree():
    for seed in range(40):
        model = random_model(random.Random(seed))
        assert zero_set(model).zero_vertices == zero_vertices(build_system(model)), seed


def test_numeric_cross_validation_and_invariance():
    checked = 0
    for seed in range(500, 600):
        rng = random.Random(seed)
        model = random_model(rng)
        res = value_iterate(build_system(model), 1e-9, 10**5)
        if not res.converged:
            continue
        z = zero_set(model).zero_vertices
        assert z == {u for u, x in res.as_dict().items() if x == 0.0}, seed
        assert zero_set(reweight(rng, model)).zero_vertices == z, seed
        checked += 1
        if checked == 25:
            break
    assert checked == 25


def test_numeric_zero_set():
    assert numeric_zero_set(example_rcsg()) == {"u5"}


@pytest.mark.parametrize("p2, verdict", [("3/4", Verdict.NUMERICALLY_1), ("1/4", Verdict.VALUE_LT_1)])
def test_two_box_verdicts(p2, verdict):
    rep = almost_sure_report(two_box_rmc(p2))
    assert rep["en"].verdict is verdict
    assert rep["ex"].verdict is Verdict.NUMERICALLY_1


def test_example_report():
    rep = almost_sure_report(example_rcsg())
    v = rep.verdicts()
    assert v["t"] is Verdict.NUMERICALLY_1 and v["s"] is Verdict.VALUE_LT_1
    assert rep["u5"].in_zero_set and rep["u5"].upper == 0.0
    assert rep["s"].lower <= 0.5 <= rep["s"].upper
    assert "numerically_1" in rep.to_text()
    with pytest.raises(KeyError):
        rep["missing"]


def test_bad_tol():
    with pytest.raises(ValueError):
        almost_sure_report(example_rcsg(), tol=0)
