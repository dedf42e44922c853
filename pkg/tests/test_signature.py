import pytest
from hypothesis import given, strategies as st

from quasirandom.signature import (
    FreezeMap,
    Signature,
    embed_tuple,
    freeze_signature,
    frozen_name,
    parse_frozen_name,
    unembed_tuple,
)

GRAPH_U = Signature.relational(("E", 2), ("U", 1))


@pytest.mark.parametrize("ell, expected", [(0, 2), (1, 4 + 2), (2, 9 + 3), (3, 16 + 4)])
def test_frozen_symbol_count(ell, expected):
    # an n-ary symbol yields (ell+1)^n frozen symbols
    assert len(freeze_signature(GRAPH_U, ell)) == expected


def test_frozen_order_and_arity():
    ps = freeze_signature(GRAPH_U, 1)
    names = [s.name for s in ps.symbols]
    assert names == ["E[z,z]", "E[z,0]", "E[0,z]", "E[0,0]", "U[z]", "U[0]"]
    assert [s.arity for s in ps.symbols] == [2, 1, 1, 0, 1, 0]
    assert ps.lookup("E[0,z]").arity == 1


def test_name_roundtrip():
    ps = freeze_signature(GRAPH_U, 2)
    for sym in ps.symbols:
        base, f = parse_frozen_name(sym.name)
        assert frozen_name(base, f) == sym.name


@pytest.mark.parametrize("bad", ["E[", "E[q]", "E[z,-1]", "[z]"])
def test_bad_names(bad):
    with pytest.raises(ValueError):
        parse_frozen_name(bad)


@given(st.lists(st.integers(0, 30), min_size=1, max_size=3, unique=True), st.data())
def test_embed_unembed(c_bar, data):
    slots = data.draw(st.lists(st.sampled_from(["z"] + list(range(len(c_bar)))), min_size=1, max_size=4))
    k = slots.count("z")
    pool = st.integers(0, 40).filter(lambda x: x not in c_bar)
    free = data.draw(st.lists(pool, min_size=k, max_size=k, unique=True))
    f = FreezeMap(tuple(slots))
    full = embed_tuple(tuple(free), f, tuple(c_bar))
    assert len(full) == len(slots)
    assert unembed_tuple(full, tuple(c_bar)) == (tuple(free), f)


def test_signature_json_roundtrip():
    assert Signature.from_json(GRAPH_U.to_json()) == GRAPH_U
