import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from generators import random_model
from rcsg.catalog import example_rcsg, matching_pennies, two_box_rmc
from rcsg.model import validate
from rcsg.modelfile import (
    ModelReferenceError,
    ModelSyntaxError,
    RationalFormatError,
    format_rational,
    parse,
    parse_rational,
    serialize,
)
from rcsg.reductions import derandomize, sqrt_sum_instance

FIG1 = """\
moves1 L R
moves2 L R

component f
  entry s prob
  exit t
  node u1 play L,R L,R
  node u2 prob
  node u3 prob
  node u4 play L L,R
  node u5 prob
  box b1 f
  box b2 f
  edge s (b1,s) 1/2
  edge s t 1/4
  edge s u1 1/4
  edge u1 u2 L L
  edge u1 u3 L R
  edge u1 u4 R L
  edge u1 u5 R R
  edge u2 (b2,s) 1
  edge u3 u2 1/2
  edge u3 t 1/2
  edge u4 (b2,s) L L
  edge u4 t L R
  edge u5 u5 1
  edge (b1,t) (b2,s) 1
  edge (b2,t) t 1
end
"""


def test_handwritten_fig1_parses_to_the_catalog_model():
    m = parse(FIG1)
    assert m == example_rcsg()
    assert len(m.vertices) == 11


@pytest.mark.parametrize("factory", [example_rcsg, matching_pennies, lambda: two_box_rmc("2/5")])
def test_round_trip_named_models(factory):
    m = factory()
    assert parse(serialize(m)) == m


def test_round_trip_derived_models():
    for m in (derandomize(example_rcsg()), sqrt_sum_instance([2, 3], 3).model):
        assert parse(serialize(m)) == m


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_round_trip_random_models(seed):
    m = random_model(random.Random(seed))
    assert validate(m, True).ok
    assert parse(serialize(m)) == m


@given(st.integers(0, 10**9), st.integers(1, 10**9))
def test_rationals_round_trip(n, d):
    p = Fraction(n, d)
    assert parse_rational(format_rational(p)) == p


def test_empty_text_is_a_syntax_error():
    with pytest.raises(ModelSyntaxError):
        parse("")
    with pytest.raises(ModelSyntaxError):
        parse("# only a comment\n\n")


def test_undeclared_box_is_a_reference_error():
    text = "component A\n  entry u prob\n  exit t\n  edge u (b9,u) 1\nend\n"
    with pytest.raises(ModelReferenceError, match="undeclared box"):
        parse(text)


def test_unknown_vertex_is_a_reference_error():
    text = "component A\n  entry u prob\n  exit t\n  edge u w 1\nend\n"
    with pytest.raises(ModelReferenceError) as err:
        parse(text)
    assert err.value.line == 4


@pytest.mark.parametrize("bad", ["0.5", "1/0", "-1/2", "a/b", "1//2"])
def test_malformed_rationals(bad):
    text = f"component A\n  entry u prob\n  exit t\n  edge u t {bad}\nend\n"
    with pytest.raises(RationalFormatError) as err:
        parse(text)
    assert (err.value.line, err.value.col) == (4, 12)


def test_syntax_error_positions():
    with pytest.raises(ModelSyntaxError) as err:
        parse("component A\n  entry u prob\n  frobnicate x\nend\n")
    assert (err.value.line, err.value.col) == (3, 3)
    with pytest.raises(ModelSyntaxError, match="missing 'end'"):
        parse("component A\n  exit t\n")


def test_box_to_unknown_component():
    with pytest.raises(ModelReferenceError):
        parse("component A\n  entry u prob\n  exit t\n  box b Z\nend\n")


def test_alphabets_inferred_without_headers():
    m = parse("component A\n  entry u play x,y z\n  exit t\n  edge u t x z\n  edge u t y z\nend\n")
    assert m.moves1 == ("x", "y") and m.moves2 == ("z",)
    assert validate(m).ok
