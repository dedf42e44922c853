import itertools

import pytest
from hypothesis import given, settings, strategies as st

from quasirandom.algebraicity import (
    NO,
    UNKNOWN,
    YES,
    CancelToken,
    Cancelled,
    SearchBounds,
    SearchExhausted,
    acl_of,
    count_realizations,
    dichotomy_case,
    in_acl,
    is_automorphism,
    is_highly_algebraic,
    neumann_disjoiner,
    qftype_classes,
    replay_certificate,
    stabilizer_orbits,
    window_aut_generators,
)
from quasirandom.structures import StructureWindow, builtin, induced_window, qftype, window_of, window_backed
from quasirandom.signature import Signature

from .oracles import brute_count, brute_orbits, matching_rel

MATCHING = builtin("matching")
STARFOREST = builtin("starforest")
PURESET = builtin("pureset")


def brute_order(w):
    fs = {(r, t) for r, ts in w.facts for t in ts}
    return sum(
        1
        for p in itertools.permutations(range(w.n))
        if {(r, tuple(p[i] for i in t)) for r, t in fs} == fs
    )


@pytest.mark.parametrize(
    "w",
    [window_of(MATCHING, 4), window_of(PURESET, 3), window_of(MATCHING, 6), induced_window(STARFOREST, (0, 2, 5, 1, 4, 7))],
)
def test_group_order_matches_brute_force(w):
    assert window_aut_generators(w).order == brute_order(w)


def test_known_group_orders():
    assert window_aut_generators(window_of(MATCHING, 4)).order == 8
    assert window_aut_generators(window_of(PURESET, 3)).order == 6
    # 32 matched pairs: 2^32 * 32!
    import math
    assert window_aut_generators(window_of(MATCHING, 64)).order == 2**32 * math.factorial(32)


def test_generators_are_automorphisms():
    w = window_of(STARFOREST, 10)
    for gen in window_aut_generators(w).generators:
        assert is_automorphism(w, gen)


@pytest.mark.parametrize("a_bar", [(), (0,), (1,), (0, 2)])
def test_orbits_against_brute_force(a_bar):
    w = window_of(MATCHING, 6)
    facts = w.fact_map()
    expected = brute_orbits(facts, 6, a_bar)
    assert stabilizer_orbits(w, a_bar) == expected
    assert stabilizer_orbits(w, a_bar, method="brute") == expected


def test_documented_orbits():
    w = window_of(MATCHING, 4)
    assert stabilizer_orbits(w, (0,)) == [(0,), (1,), (2, 3)]
    assert stabilizer_orbits(window_of(PURESET, 3), (0,)) == [(0,), (1, 2)]


def test_counts_match_brute_force():
    assert count_realizations(MATCHING, (0,), 1, 100) == 1
    # the partner of 0 is excluded along with 0 itself
    assert count_realizations(MATCHING, (0,), 2, 100) == brute_count(matching_rel, [("R", 2)], (0,), 2, 100) == 98
    assert count_realizations(PURESET, (0,), 1, 100) == 99


@given(st.lists(st.integers(0, 20), min_size=1, max_size=2, unique=True), st.integers(0, 20))
@settings(max_examples=40, deadline=None)
def test_counts_random(a_bar, b):
    if b in a_bar:
        with pytest.raises(ValueError):
            count_realizations(MATCHING, a_bar, b, 30)
        return
    assert count_realizations(MATCHING, a_bar, b, 30) == brute_count(matching_rel, [("R", 2)], tuple(a_bar), b, 30)


def test_in_acl_routes():
    assert in_acl(MATCHING, (0,), 1).member == YES
    v = in_acl(MATCHING, (0,), 1, route="count")
    assert v.member == YES and v.heuristic
    assert in_acl(MATCHING, (0,), 2, route="count").member == NO
    assert in_acl(MATCHING, (0,), 0).route == "trivial"
    assert in_acl(window_backed(window_of(MATCHING, 4)), (0,), 1, route="exact").member == UNKNOWN


def test_acl_of_closed_forms():
    assert acl_of(MATCHING, (4,)).members == {4, 5}
    assert acl_of(STARFOREST, (4,)).members == {1, 4}
    assert acl_of(PURESET, (3,)).members == {3}
    assert acl_of(builtin("marked", F=(0, 1)), (5,)).members == {0, 1, 5}


def test_qftype_classes_are_orbit_partition():
    w = window_of(MATCHING, 8)
    assert qftype_classes(MATCHING, (0,), 8) == stabilizer_orbits(w, (0,))


def test_classification():
    m = is_highly_algebraic(MATCHING)
    assert (m.status, m.case, m.headline) == ("highly_algebraic", 1, "not quasi-random")
    assert replay_certificate(MATCHING, m)
    s = is_highly_algebraic(STARFOREST)
    assert (s.status, s.case) == ("highly_algebraic", 2)
    p = is_highly_algebraic(PURESET)
    assert (p.status, p.base_set) == ("not_highly_algebraic", ())
    assert p.headline == "quasi-random (measure constructible)"
    f = is_highly_algebraic(builtin("marked", F=(0, 1)))
    assert (f.status, f.base_set) == ("not_highly_algebraic", (0, 1))


def test_classification_count_route():
    m = is_highly_algebraic(MATCHING, SearchBounds(route="count"))
    assert (m.status, m.case) == ("highly_algebraic", 1)


def test_unknown_for_small_user_structure():
    w = StructureWindow.from_facts(Signature.relational(("E", 2)), 3, {"E": [(0, 1), (1, 0)]})
    v = is_highly_algebraic(window_backed(w), SearchBounds(cbar_bound=1, search_window=4))
    assert v.status == "unknown" and v.headline == "undetermined"


def test_dichotomy_cases():
    d1 = dichotomy_case(MATCHING, (0, 1))
    assert (d1.case, d1.a_bar, d1.b) == (1, (2,), 3)
    d2 = dichotomy_case(STARFOREST, ())
    assert d2.case == 2
    assert (d2.a_bar, d2.b) == ((2,), 0)
    wits = d2.witnesses
    assert len(wits) == 4
    assert len({x for t in wits for x in t}) == sum(len(t) for t in wits)
    target = qftype(STARFOREST, d2.a_bar + (d2.b,))
    assert all(qftype(STARFOREST, t + (d2.b,)) == target for t in wits)


def test_neumann_disjoiner():
    w = window_of(MATCHING, 12)
    h = neumann_disjoiner(w, (0,), {2, 3}, {2, 3, 4, 5})
    assert is_automorphism(w, h.restrict(12))
    assert h(0) == 0
    assert not set(h.apply((2, 3))) & {2, 3, 4, 5}
    with pytest.raises(SearchExhausted):
        neumann_disjoiner(w, (0,), {1}, {1})


def test_cancellation():
    tok = CancelToken()
    tok.cancel()
    with pytest.raises(Cancelled):
        window_aut_generators(window_of(MATCHING, 8), token=tok)


def test_window_bound_enforced():
    with pytest.raises(ValueError):
        window_aut_generators(window_of(MATCHING, 80))


@pytest.mark.parametrize("family", ["matching", "pureset"])
def test_orbit_route_agrees_with_counting(family):
    s = builtin(family)
    n = 8
    W = 3 * n  # padding of 2n beyond the points of interest
    w = window_of(s, W)
    for a_bar in [()] + [(a,) for a in range(n)] + [(0, 3), (2, 5)]:
        orbit_of = {x: orb for orb in stabilizer_orbits(w, a_bar) for x in orb}
        for b in range(n):
            if b in a_bar:
                continue
            size = len(orbit_of[b])
            assert size == count_realizations(s, a_bar, b, W)
            stable = count_realizations(s, a_bar, b, 2 * W) == count_realizations(s, a_bar, b, W)
            assert stable == (size <= len(a_bar) + 1)


@pytest.mark.parametrize("family, params", [("matching", {}), ("starforest", {}), ("pureset", {}), ("marked", {"F": (0, 1)})])
def test_pair_search_forms_agree(family, params):
    from quasirandom.algebraicity import search_form2, search_form3

    s = builtin(family, **params)
    for k in range(4):
        c_bar = tuple(range(k))
        assert (search_form2(s, c_bar) is None) == (search_form3(s, c_bar) is None)
