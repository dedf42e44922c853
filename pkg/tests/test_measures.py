from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasirandom.measures import (
    Event,
    FiberedSample,
    act_fibered,
    beta_assemble,
    beta_assemble_pointwise,
    cocycle_locality_check,
    erdos_renyi,
    fibered_cocycle,
    invariance_chi_square,
    marked_pipeline,
    nu_default,
    nu_ratio,
    quasi_invariance_test,
    quasi_sample,
    sample_stream,
    transport_map,
)
from quasirandom.perms import FinSupPermutation as P
from quasirandom.signature import Signature, freeze_signature
from quasirandom.structures import act_window, fibered_relabel

from .oracles import geometric_weight, random_perm, random_window

GRAPH_U = Signature.relational(("E", 2), ("U", 1))


def test_nu_weights():
    nu = nu_default(2)
    for c in [(0, 1), (3, 0), (5, 2)]:
        assert nu.weight(c) == geometric_weight(c)
    assert nu_ratio(nu, (0, 1), (1, 0)) == 1
    assert nu_ratio(nu_default(1), (0,), (1,)) == 2
    assert nu_ratio(nu_default(1), (5,), (0,)) == Fraction(1, 32)
    with pytest.raises(ValueError):
        nu_ratio(nu, (1, 1), (0, 1))


def test_nu_samples_injective_and_geometric():
    nu = nu_default(2)
    rng = np.random.default_rng(3)
    draws = [nu.sample(rng) for _ in range(4000)]
    assert all(len(set(d)) == 2 for d in draws)
    # P(c0 = 0) = ν(c0=0)/total: 1/2 * (1 - 1/2) / (1 - 1/3) = 3/8 among injective pairs
    freq = sum(d[0] == 0 for d in draws) / len(draws)
    assert abs(freq - 3 / 8) < 0.03


def test_documented_cocycle():
    v = fibered_cocycle(nu_default(2), P.parse("(0 1)"), (0, 2))
    assert v.ratio == Fraction(1, 2)
    assert v.log2_ratio == -1 and v.log2_exact
    assert v.dependency_support == {0}
    assert v.to_json()["ratio"] == "1/2"


@st.composite
def small_perm(draw):
    return P.from_window_perm(draw(st.permutations(range(7))))


@given(small_perm(), small_perm(), st.lists(st.integers(0, 6), min_size=1, max_size=3, unique=True))
@settings(max_examples=200)
def test_cocycle_chain_rule(g, h, c_bar):
    nu = nu_default(len(c_bar))
    lhs = fibered_cocycle(nu, g * h, c_bar).ratio
    rhs = fibered_cocycle(nu, g, h.apply(c_bar)).ratio * fibered_cocycle(nu, h, c_bar).ratio
    assert lhs == rhs
    assert lhs == geometric_weight((g * h).apply(c_bar)) / geometric_weight(c_bar)


def test_cocycle_locality():
    nu = nu_default(1)
    assert cocycle_locality_check(nu, P.parse("(0 1)"), P.parse("(0 1)(5 6)"), (0,))
    assert cocycle_locality_check(nu, P.parse("(0 1)"), P.parse("(0 2)"), (3,))


def test_beta_array_matches_pointwise():
    rng = np.random.default_rng(5)
    for ell in (0, 1, 2):
        psig = freeze_signature(GRAPH_U, ell)
        for _ in range(20):
            n = int(rng.integers(ell + 1, 9))
            c_bar = tuple(int(x) for x in rng.choice(n, size=ell, replace=False))
            frozen = random_window(rng, psig.as_signature(), n - ell)
            assert beta_assemble(c_bar, frozen, psig, n) == beta_assemble_pointwise(c_bar, frozen, psig, n)


def test_beta_equivariance_small():
    rng = np.random.default_rng(9)
    for _ in range(50):
        ell = int(rng.integers(0, 3))
        psig = freeze_signature(GRAPH_U, ell)
        n = int(rng.integers(max(ell, 2), 10))
        c_bar = tuple(int(x) for x in rng.choice(n, size=ell, replace=False))
        g = random_perm(rng, n, 6)
        frozen = random_window(rng, psig.as_signature(), n - ell)
        moved = act_fibered(g, FiberedSample(c_bar, frozen))
        assert moved.frozen == act_window(fibered_relabel(g, c_bar), frozen)
        assert act_window(g, beta_assemble(c_bar, frozen, psig, n)) == beta_assemble(moved.c_bar, moved.frozen, psig, n)


def test_marked_sample_shape():
    base, psig = marked_pipeline((0,))
    fs, w = quasi_sample(nu_default(1), base, (0,), 12, seed=4)
    c = fs.c_bar[0]
    assert w.fact_set("U") == {(c,)}
    assert all((x, x) not in w.fact_set("E") for x in range(12))
    assert all((y, x) in w.fact_set("E") for x, y in w.fact_set("E"))


def test_sampling_is_deterministic():
    base, _ = marked_pipeline((0,))
    a = list(sample_stream(nu_default(1), base, (0,), 10, 5, seed=7))
    b = list(sample_stream(nu_default(1), base, (0,), 10, 5, seed=7))
    assert [x[0].c_bar for x in a] == [x[0].c_bar for x in b]
    assert all(x[1].to_window() == y[1].to_window() for x, y in zip(a, b))


def test_plain_sampler_needs_no_parameters():
    fs, w = quasi_sample(nu_default(0), erdos_renyi(), (), 6, seed=1)
    assert fs.c_bar == ()
    assert w.sig.relation_names() == ("E",)


def test_transport_map():
    assert [transport_map((0,), (2,), x) for x in (1, 2, 3)] == [0, 1, 3]


def test_event_semantics():
    g = P.parse("(0 1)")
    e = Event("c0=0", "param", index=0, value=0)
    assert e.holds((0,), None) and not e.holds((0,), None, g) and e.holds((1,), None, g)
    assert Event.from_json(e.to_json()) == e


def test_erdos_renyi_chi_square():
    rep = invariance_chi_square(erdos_renyi(), P.parse("(0 1)(2 3)"), 4, 3000, seed=2)
    assert rep["p_value"] > 0.001
    assert rep["cells"] <= 64


def test_quasi_invariance_small_and_negative_control():
    base, _ = marked_pipeline((0,))
    nu = nu_default(1)
    g = P.parse("(0 1)")
    good = [
        Event("c0=0", "param", index=0, value=0, expected_ratio=Fraction(2)),
        Event("E(2,3)", "fact", relation="E", tuple=(2, 3), expected_ratio=Fraction(1)),
    ]
    rep = quasi_invariance_test(sample_stream(nu, base, (0,), 6, 3000, seed=3), g, good, nu, alpha=0.01)
    assert rep["pass"], rep
    wrong = [Event("c0=0", "param", index=0, value=0, expected_ratio=Fraction(1))]
    rep = quasi_invariance_test(sample_stream(nu, base, (0,), 6, 3000, seed=3), g, wrong, nu, alpha=0.01)
    assert not rep["pass"]


def test_quasi_invariance_needs_samples():
    base, _ = marked_pipeline((0,))
    nu = nu_default(1)
    with pytest.raises(ValueError):
        quasi_invariance_test(sample_stream(nu, base, (0,), 6, 50, seed=3), P.parse("(0 1)"), [], nu, alpha=0.001)
