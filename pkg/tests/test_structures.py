import pytest
from hypothesis import given, settings, strategies as st

from quasirandom.perms import FinSupPermutation as P
from quasirandom.structures import (
    ComplementIndex,
    StructureWindow,
    act_oracle,
    act_window,
    builtin,
    cantor_pair,
    cantor_unpair,
    eval_fact,
    fibered_relabel,
    freeze_structure,
    induced_window,
    oracle_from_spec,
    qftype,
    rado_edge,
    star_center,
    window_of,
)

from .oracles import brute_type, matching_rel

MATCHING = builtin("matching")


def test_matching_window_facts():
    w = window_of(MATCHING, 4)
    assert w.fact_set("R") == {(0, 1), (1, 0), (2, 3), (3, 2)}


def test_logic_action_swap():
    w = act_window(P.transposition(0, 2), window_of(MATCHING, 4))
    assert w.fact_set("R") == {(0, 3), (1, 2), (2, 1), (3, 0)}


def test_action_requires_closed_window():
    with pytest.raises(ValueError):
        act_window(P.transposition(0, 9), window_of(MATCHING, 4))


@st.composite
def window_perms(draw, n=8):
    return P.from_window_perm(draw(st.permutations(range(n))))


@given(window_perms(), window_perms())
@settings(max_examples=60)
def test_action_is_left_action(g, h):
    w = window_of(builtin("starforest"), 8)
    assert act_window(g * h, w) == act_window(g, act_window(h, w))
    assert act_window(P.identity(), w) == w


@given(window_perms(), st.lists(st.integers(0, 7), min_size=1, max_size=3))
@settings(max_examples=60)
def test_qftype_transported(g, a_bar):
    s = builtin("starforest")
    gs = act_oracle(g, s)
    assert qftype(gs, g.apply(a_bar)) == qftype(s, a_bar)


def test_act_oracle_pointwise():
    g = P.parse("(0 5 2)")
    gs = act_oracle(g, MATCHING)
    for x in range(8):
        for y in range(8):
            assert gs.eval("R", (x, y)) == MATCHING.eval("R", g.inverse().apply((x, y)))


def test_act_oracle_transports_exact_acl():
    g = P.transposition(1, 2)
    gs = act_oracle(g, MATCHING)
    assert gs.exact.acl((0,)) == {0, 2}


def test_qftype_matches_brute_force():
    for t in [(0, 1), (0, 2), (1, 0, 3), (4, 4, 5)]:
        eq, hits = brute_type(matching_rel, [("R", 2)], t)
        q = qftype(MATCHING, t)
        assert q.equality_pattern == eq
        assert len(q.hits) == len(hits)


def test_starforest_coding():
    s = builtin("starforest")
    assert cantor_pair(1, 2) == 8
    assert cantor_unpair(8) == (1, 2)
    assert star_center(2) == 0 and star_center(4) == 1
    assert s.eval("C", (0,)) and not s.eval("C", (2,))
    assert s.eval("R", (2, 0)) and s.eval("S", (2, 5)) and not s.eval("R", (2, 5))


def test_rado_coding():
    assert rado_edge(0, 1) and rado_edge(1, 2) and not rado_edge(0, 2)
    s = builtin("marked", F=(0, 3))
    assert s.eval("U", (3,)) and not s.eval("U", (1,))
    assert s.eval("E", (2, 1)) == s.eval("E", (1, 2))


@given(st.lists(st.integers(0, 20), max_size=3, unique=True), st.integers(0, 40))
def test_complement_index_roundtrip(c_bar, k):
    idx = ComplementIndex(tuple(c_bar))
    x = idx.element(k)
    assert x not in c_bar
    assert idx.rank(x) == k


@given(window_perms(10), st.lists(st.integers(0, 9), min_size=1, max_size=2, unique=True), st.integers(0, 12))
def test_fibered_relabel_commutes(g, c_bar, k):
    sigma = fibered_relabel(g, c_bar)
    src, dst = ComplementIndex(tuple(c_bar)), ComplementIndex(g.apply(c_bar))
    assert sigma(k) == dst.rank(g(src.element(k)))


def test_freeze_matching():
    f = freeze_structure(MATCHING, (0,))
    # frozen point k is original point k+1; only original 1 is matched to 0
    assert [k for k in range(6) if f.eval("R[z,0]", (k,))] == [0]
    assert f.eval("R[z,z]", (1, 2)) and not f.eval("R[z,z]", (0, 1))


def test_freeze_marked():
    f = freeze_structure(builtin("marked", F=(0,)), (0,))
    assert not any(f.eval("U[z]", (k,)) for k in range(16))
    assert f.eval("U[0]", ())
    assert f.exact.base_set == frozenset()
    assert f.exact.acl((3, 5)) == {3, 5}


def test_induced_window():
    w = induced_window(MATCHING, (4, 5, 0))
    assert w.fact_set("R") == {(0, 1), (1, 0)}


def test_window_json_roundtrip():
    w = window_of(builtin("starforest"), 6)
    assert StructureWindow.from_json(w.to_json()) == w
    s = oracle_from_spec({"family": "window", "window": w.to_json()})
    assert eval_fact(s, "C", (0,)) and not eval_fact(s, "C", (7,))


def test_eval_errors():
    w = window_of(MATCHING, 4)
    with pytest.raises(ValueError):
        w.eval("R", (0,))
    with pytest.raises(ValueError):
        w.eval("R", (0, 9))
    with pytest.raises(KeyError):
        w.eval("Q", (0, 1))
    with pytest.raises(ValueError):
        builtin("nonsense")
