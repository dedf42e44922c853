import pytest
from hypothesis import given, strategies as st

from quasirandom.perms import FinSupPermutation as P


@st.composite
def perms(draw, n=8):
    return P.from_window_perm(draw(st.permutations(range(n))))


def test_parse_and_print():
    g = P.parse("(0 1)(2 5 3)")
    assert (g(0), g(1), g(2), g(5), g(3), g(4)) == (1, 0, 5, 3, 2, 4)
    assert str(g) == "(0 1)(2 5 3)"
    assert P.parse(str(g)) == g
    assert str(P.parse("()")) == "()"
    assert P.parse("") == P.identity()
    assert P.parse("(0,1)") == P.transposition(0, 1)


@pytest.mark.parametrize("bad", ["(0 1", "0 1", "(0 0)", "(a b)", "(-1 2)"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        P.parse(bad)


def test_composition_order():
    g, h = P.transposition(0, 1), P.transposition(1, 2)
    # (g*h)(x) = g(h(x))
    assert (g * h)(2) == g(h(2)) == 0


@given(perms(), perms(), perms())
def test_group_laws(g, h, k):
    e = P.identity()
    assert (g * h) * k == g * (h * k)
    assert g * e == e * g == g
    assert g * g.inverse() == e
    assert (g * h).inverse() == h.inverse() * g.inverse()


@given(perms())
def test_window_roundtrip(g):
    assert P.from_window_perm(g.restrict(8)) == g
    assert g.extends(g.restrict(8))
    assert g.preserves(8)
    assert P.from_cycles(g.cycles()) == g


def test_restrict_requires_closure():
    g = P.transposition(1, 9)
    assert not g.preserves(4)
    with pytest.raises(ValueError):
        g.restrict(4)


def test_non_bijection_rejected():
    with pytest.raises(ValueError):
        P.from_mapping({0: 1})
    with pytest.raises(ValueError):
        P.from_window_perm([0, 0, 1])
