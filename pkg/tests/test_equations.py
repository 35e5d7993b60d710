import random
from fractions import Fraction

import numpy as np
import pytest

from generators import random_model, random_strategy
from rcsg.catalog import EXAMPLE_LFP, example_rcsg, two_box_rmc
from rcsg.equations import (
    Const1,
    EquationSystem,
    Linear,
    MatrixGame,
    MaxLinear,
    MinLinear,
    Product,
    StrategyError,
    apply_P,
    build_system,
    induce_markov_system,
    induce_max_system,
    induce_min_system,
    residual,
    uniform_strategy,
)
from rcsg.matrix_game import MixedStrategy
from rcsg.model import Component, Rcsg, Vertex, VertexKind, node, play, prob_edge, move_edge

L = MixedStrategy.point("L", ("L", "R"))
L1 = MixedStrategy.point("L", ("L",))


@pytest.fixture(scope="module")
def fig1():
    return build_system(example_rcsg())


def lfp_vector(sys):
    return sys.vector(EXAMPLE_LFP)


def test_example_equations(fig1):
    assert len(fig1) == 11
    assert fig1.equation("t") == Const1()
    assert fig1.equation("s") == Linear(
        (("(b1,s)", Fraction(1, 2)), ("t", Fraction(1, 4)), ("u1", Fraction(1, 4)))
    )
    assert fig1.equation("(b1,s)") == Product("s", "(b1,t)")
    assert fig1.equation("(b2,s)") == Product("s", "(b2,t)")
    assert fig1.equation("u1") == MatrixGame(("L", "R"), ("L", "R"), (("u2", "u3"), ("u4", "u5")))
    assert fig1.equation("u4") == MatrixGame(("L",), ("L", "R"), (("(b2,s)", "t"),))
    assert fig1.equation("u5") == Linear((("u5", Fraction(1)),))
    assert fig1.equation("(b2,t)") == Linear((("t", Fraction(1)),))
    assert "x_s = (1/2)x_(b1,s) + (1/4)x_t + (1/4)x_u1" in fig1.to_text()


def test_exit_only_component():
    m = Rcsg((Component("A", (Vertex("t", VertexKind.EXIT),), (), ("t",)),))
    sys = build_system(m)
    assert sys.vertices == ("t",) and sys.equations == (Const1(),)


def test_isolated_vertex_is_zero():
    m = Rcsg((Component("A", (node("u"), Vertex("t", VertexKind.EXIT)), ("u",), ("t",)),))
    sys = build_system(m)
    assert sys.equation("u") == Linear(())
    assert apply_P(sys, np.ones(2))[sys.index["u"]] == 0.0


def test_build_rejects_multi_exit():
    comp = Component("A", (node("u"), Vertex("t", VertexKind.EXIT), Vertex("x", VertexKind.EXIT)),
                     ("u",), ("t", "x"), (), (prob_edge("u", "t", 1),))
    with pytest.raises(ValueError):
        build_system(Rcsg((comp,)))


def test_one_kleene_step_from_zero(fig1):
    y = fig1.as_dict(apply_P(fig1, np.zeros(len(fig1))))
    assert y == {u: (1.0 if u == "t" else 0.0) for u in fig1.vertices}


def test_lfp_is_a_fixed_point(fig1):
    x = lfp_vector(fig1)
    assert np.allclose(apply_P(fig1, x), x, atol=1e-15)
    assert residual(fig1, x) <= 1e-9


def test_residual_at_zero(fig1):
    assert residual(fig1, np.zeros(len(fig1))) == 1.0


def test_residual_of_constant_system():
    sys = EquationSystem(("a", "b"), (Const1(), Linear((("a", 1.0),))))
    assert residual(sys, np.ones(2)) == 0.0


def test_dimension_mismatch(fig1):
    with pytest.raises(ValueError):
        apply_P(fig1, np.zeros(3))


def test_induce_min_point_mass(fig1):
    low = induce_min_system(fig1, {"u1": L, "u4": L1})
    assert low.equation("u1") == MinLinear((("L", (("u2", 1.0),)), ("R", (("u3", 1.0),))))
    x = lfp_vector(fig1)
    assert apply_P(low, x)[fig1.index["u1"]] == min(x[fig1.index["u2"]], x[fig1.index["u3"]])


def test_induce_max_point_mass(fig1):
    high = induce_max_system(fig1, {"u1": L, "u4": L})
    assert high.equation("u1") == MaxLinear((("L", (("u2", 1.0),)), ("R", (("u4", 1.0),))))


def _same_target_system():
    comp = Component("A", (play("u", "LR", "LR"), node("v"), Vertex("t", VertexKind.EXIT)), ("u",), ("t",), (),
                     tuple(move_edge("u", "v", a, b) for a in "LR" for b in "LR") + (prob_edge("v", "t", Fraction(1, 3)),))
    return build_system(Rcsg((comp,), ("L", "R"), ("L", "R")))


def test_uniform_strategy_on_constant_game():
    sys = _same_target_system()
    x = np.array([0.2, 0.7, 1.0])
    for induced in (induce_min_system(sys, uniform_strategy(sys, 1)), induce_max_system(sys, uniform_strategy(sys, 2))):
        assert apply_P(induced, x)[0] == pytest.approx(0.7)


def test_no_play_vertices_unchanged():
    sys = build_system(two_box_rmc("2/5"))
    assert induce_min_system(sys, {}) == sys
    assert induce_max_system(sys, {}) == sys


def test_strategy_errors(fig1):
    with pytest.raises(StrategyError):
        induce_min_system(fig1, {"u1": L})
    with pytest.raises(StrategyError):
        induce_min_system(fig1, {"u1": L, "u4": MixedStrategy.point("R", ("L", "R"))})


def test_markov_system_is_linear(fig1):
    sys = induce_markov_system(fig1, uniform_strategy(fig1, 1), uniform_strategy(fig1, 2))
    assert isinstance(sys.equation("u1"), Linear)
    assert dict(sys.equation("u1").terms) == pytest.approx({"u2": 0.25, "u3": 0.25, "u4": 0.25, "u5": 0.25})


def test_monotonicity_of_P_and_induced_operators():
    """1000 random ordered pairs over random models and strategies."""
    rng = random.Random(7)
    nprng = np.random.default_rng(7)
    worst = 0.0
    trials = 0
    while trials < 1000:
        model = random_model(rng)
        base = build_system(model)
        sigma, tau = random_strategy(rng, model, 1), random_strategy(rng, model, 2)
        for sys in (base, induce_min_system(base, sigma), induce_max_system(base, tau),
                    induce_markov_system(base, sigma, tau)):
            x = nprng.random(len(sys))
            y = np.minimum(x + nprng.random(len(sys)) * (nprng.random(len(sys)) < 0.5), 1.0)
            worst = max(worst, float(np.max(apply_P(sys, x) - apply_P(sys, y))))
            trials += 1
    assert worst <= 1e-12
