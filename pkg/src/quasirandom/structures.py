"""Countable structures as decidable oracles, finite windows, and the logic action.

A `StructureOracle` interprets a finite relational signature on ℕ through a
pure membership rule. A `StructureWindow` is the restriction of a structure
to ``{0..n-1}``. Permutations act by push-forward::

    g_*M |= R(a_0, ..., a_{k-1})  <=>  M |= R(g^-1(a_0), ..., g^-1(a_{k-1}))

Built-in families (see `builtin`):

``matching``
    R(n, m) iff {n, m} = {2k, 2k+1}.
``starforest``
    ℕ² coded on ℕ by the Cantor pairing ``pair(x, y) = (x+y)(x+y+1)/2 + y``.
    A point ``(s, j)`` is the centre of star ``s`` when ``j = 0`` and a leaf of
    star ``s`` otherwise; R joins every centre to the leaves of its star.
    The signature also carries the orbit-completion symbols ``C`` (centre)
    and ``S`` (same star), which make the structure ultrahomogeneous without
    changing its automorphism group.
``pureset``
    Empty signature.
``marked``
    The random graph E in its bit coding (for ``x < y``, E(x, y) iff bit ``x``
    of ``y`` is set) with a unary predicate U on a finite set F.
``window``
    A finite window extended by isolated points (no facts outside the window).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

from .perms import FinSupPermutation
from .signature import (
    ParamSignature,
    Signature,
    Symbol,
    check_injective,
    embed_tuple,
    freeze_signature,
)

Rule = Callable[[str, tuple], bool]

FAMILIES = ("matching", "starforest", "pureset", "marked", "window", "user", "frozen", "pushforward")


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StructureWindow:
    """A finite structure on ``{0..n-1}``; `facts` maps each relation to its tuple set."""

    sig: Signature
    n: int
    facts: tuple[tuple[str, frozenset], ...]

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("window size must be non-negative")
        names = self.sig.relation_names()
        given = dict(self.facts)
        extra = set(given) - set(names)
        if extra:
            raise ValueError(f"facts for unknown relations {sorted(extra)}")
        normalized = []
        for sym in self.sig.relations:
            ts = frozenset(tuple(t) for t in given.get(sym.name, ()))
            for t in ts:
                if len(t) != sym.arity:
                    raise ValueError(f"fact {sym.name}{t} has wrong arity")
                if any(not (0 <= x < self.n) for x in t):
                    raise ValueError(f"fact {sym.name}{t} outside window of size {self.n}")
            normalized.append((sym.name, ts))
        object.__setattr__(self, "facts", tuple(normalized))

    @classmethod
    def from_facts(cls, sig: Signature, n: int, facts: Mapping[str, Iterable[Sequence[int]]]) -> "StructureWindow":
        return cls(sig, n, tuple((k, frozenset(tuple(t) for t in v)) for k, v in facts.items()))

    def fact_set(self, relation: str) -> frozenset:
        for name, ts in self.facts:
            if name == relation:
                return ts
        raise KeyError(f"unknown relation {relation!r}")

    def fact_map(self) -> dict[str, frozenset]:
        return dict(self.facts)

    def eval(self, relation: str, t: Sequence[int]) -> bool:
        t = tuple(t)
        arity = self.sig.arity(relation)
        if len(t) != arity:
            raise ValueError(f"{relation} has arity {arity}, got tuple {t}")
        if any(not (0 <= x < self.n) for x in t):
            raise ValueError(f"tuple {t} outside window of size {self.n}")
        return t in self.fact_set(relation)

    def restrict(self, m: int) -> "StructureWindow":
        if m > self.n:
            raise ValueError(f"cannot restrict window of size {self.n} to {m}")
        return StructureWindow(
            self.sig, m, tuple((k, frozenset(t for t in ts if all(x < m for x in t))) for k, ts in self.facts)
        )

    def num_facts(self) -> int:
        return sum(len(ts) for _, ts in self.facts)

    def to_json(self) -> dict:
        return {
            "signature": self.sig.to_json(),
            "n": self.n,
            "facts": {k: sorted(list(t) for t in ts) for k, ts in self.facts},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "StructureWindow":
        sig = Signature.from_json(data["signature"])
        return cls.from_facts(sig, int(data["n"]), {k: [tuple(t) for t in v] for k, v in data.get("facts", {}).items()})


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactAcl:
    """Closed-form algebraic closure of a family.

    `acl` returns the full closure of a tuple. `base_set` is a finite B with
    ``acl(a) ⊆ {a} ∪ B`` for every tuple, or None when no such B exists
    (the family is highly algebraic).
    """

    acl: Callable[[tuple], frozenset]
    base_set: frozenset | None
    description: str = ""


@dataclass(frozen=True)
class StructureOracle:
    sig: Signature
    rule: Rule = field(compare=False, repr=False)
    family: str = "user"
    params: tuple = ()
    exact: ExactAcl | None = field(default=None, compare=False, repr=False)
    note: str = ""

    def eval(self, relation: str, t: Sequence[int]) -> bool:
        t = tuple(t)
        arity = self.sig.arity(relation)
        if len(t) != arity:
            raise ValueError(f"{relation} has arity {arity}, got tuple {t}")
        if any(x < 0 for x in t):
            raise ValueError(f"negative element in {t}")
        return bool(self.rule(relation, t))

    @property
    def is_builtin(self) -> bool:
        return self.family in ("matching", "starforest", "pureset", "marked")

    def describe(self) -> dict:
        return {"family": self.family, "params": list(self.params), "note": self.note}


def eval_fact(s: StructureOracle | StructureWindow, relation: str, t: Sequence[int]) -> bool:
    return s.eval(relation, t)


def window_of(s: StructureOracle, n: int) -> StructureWindow:
    """The restriction of `s` to ``{0..n-1}``."""
    if n < 1:
        raise ValueError("window size must be >= 1")
    facts = {}
    for sym in s.sig.relations:
        facts[sym.name] = [t for t in itertools.product(range(n), repeat=sym.arity) if s.rule(sym.name, t)]
    return StructureWindow.from_facts(s.sig, n, facts)


def induced_window(s: StructureOracle, points: Sequence[int]) -> StructureWindow:
    """The substructure on `points`, relabelled ``points[i] -> i``."""
    points = check_injective(points, "point list")
    facts = {}
    for sym in s.sig.relations:
        facts[sym.name] = [
            t for t in itertools.product(range(len(points)), repeat=sym.arity) if s.rule(sym.name, tuple(points[i] for i in t))
        ]
    return StructureWindow.from_facts(s.sig, len(points), facts)


# ---------------------------------------------------------------------------
# quantifier-free types
# ---------------------------------------------------------------------------


def equality_pattern(t: Sequence) -> tuple[int, ...]:
    """Label each position by the first position holding the same element."""
    first: dict = {}
    return tuple(first.setdefault(x, i) for i, x in enumerate(t))


@dataclass(frozen=True)
class QfType:
    """The atomic diagram of a tuple: its equality pattern and the atomic facts it satisfies.

    `hits` holds ``(relation, positions)`` pairs; the complement within all
    position patterns is the negative part, so value equality is
    equality of quantifier-free types.
    """

    equality_pattern: tuple[int, ...]
    hits: frozenset

    @property
    def length(self) -> int:
        return len(self.equality_pattern)

    def to_json(self) -> dict:
        return {
            "equality_pattern": list(self.equality_pattern),
            "hits": sorted([r, list(p)] for r, p in self.hits),
        }


def qftype(s: StructureOracle | StructureWindow, a_bar: Sequence[int]) -> QfType:
    a_bar = tuple(a_bar)
    L = len(a_bar)
    hits = []
    memo: dict = {}
    for sym in s.sig.relations:
        for pos in itertools.product(range(L), repeat=sym.arity):
            key = (sym.name, tuple(a_bar[p] for p in pos))
            v = memo.get(key)
            if v is None:
                v = memo[key] = s.eval(*key)
            if v:
                hits.append((sym.name, pos))
    return QfType(equality_pattern(a_bar), frozenset(hits))


def qftype_equal(t1: QfType, t2: QfType) -> bool:
    if t1.length != t2.length:
        raise ValueError(f"type lengths differ: {t1.length} vs {t2.length}")
    return t1 == t2


# ---------------------------------------------------------------------------
# logic action
# ---------------------------------------------------------------------------


def act_window(g: FinSupPermutation, w: StructureWindow) -> StructureWindow:
    """Push `w` forward along `g`; `g` must map the window onto itself."""
    if not g.preserves(w.n):
        raise ValueError(f"window of size {w.n} is not closed under {g}")
    if g.is_identity:
        return w
    return StructureWindow(w.sig, w.n, tuple((k, frozenset(g.apply(t) for t in ts)) for k, ts in w.facts))


def act_oracle(g: FinSupPermutation, s: StructureOracle) -> StructureOracle:
    ginv = g.inverse()
    base_rule = s.rule

    def rule(relation, t):
        return base_rule(relation, ginv.apply(t))

    exact = None
    if s.exact is not None:
        base_acl = s.exact.acl

        def acl(a_bar, _acl=base_acl):
            return frozenset(g.apply(_acl(ginv.apply(a_bar))))

        B = s.exact.base_set
        exact = ExactAcl(acl, None if B is None else frozenset(g.apply(B)), f"pushforward of {s.family}")
    return StructureOracle(
        s.sig, rule, "pushforward", params=(str(g),) + tuple(s.params), exact=exact, note=f"g_* of {s.family}"
    )


# ---------------------------------------------------------------------------
# freezing parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplementIndex:
    """The order-preserving bijection ``ℕ \\ {c̄} -> ℕ``."""

    c_bar: tuple[int, ...]
    _sorted: tuple[int, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        check_injective(self.c_bar, "parameter tuple")
        object.__setattr__(self, "_sorted", tuple(sorted(self.c_bar)))

    def element(self, k: int) -> int:
        """The k-th element (from 0) of the complement."""
        x = k
        for c in self._sorted:
            if c <= x:
                x += 1
            else:
                break
        return x

    def rank(self, x: int) -> int:
        if x in self.c_bar:
            raise ValueError(f"{x} is a parameter, not in the complement")
        return x - sum(1 for c in self._sorted if c < x)

    def to_json(self) -> dict:
        return {"kind": "order-preserving complement", "c_bar": list(self.c_bar)}


def fibered_relabel(g: FinSupPermutation, c_bar: Sequence[int]) -> FinSupPermutation:
    """The permutation of reindexed frozen domains induced by `g`.

    Sends ``rank_c(x)`` to ``rank_{g(c)}(g(x))`` for x outside c̄. It has
    finite support because g does.
    """
    c_bar = tuple(c_bar)
    src = ComplementIndex(c_bar)
    dst = ComplementIndex(g.apply(c_bar))
    pts = set(g.support) | set(c_bar) | set(g.apply(c_bar))
    if not pts:
        return FinSupPermutation()
    top = max(pts) + 1
    mapping = {}
    for x in range(top + len(c_bar) + 1):
        if x in c_bar:
            continue
        k = src.rank(x)
        mapping[k] = dst.rank(g(x))
    return FinSupPermutation.from_mapping(mapping)


def freeze_structure(s: StructureOracle, c_bar: Sequence[int]) -> StructureOracle:
    """The structure N_c̄ over the frozen language, on the reindexed complement of c̄."""
    c_bar = check_injective(c_bar, "parameter tuple")
    psig = freeze_signature(s.sig, len(c_bar))
    fsig = psig.as_signature()
    idx = ComplementIndex(c_bar)
    base_rule = s.rule

    def rule(name, t):
        sym = psig.lookup(name)
        full = embed_tuple(tuple(idx.element(k) for k in t), sym.freeze, c_bar)
        return base_rule(sym.base_relation, full)

    exact = None
    if s.exact is not None:
        base_acl = s.exact.acl

        def acl(a_bar):
            orig = tuple(idx.element(k) for k in a_bar)
            return frozenset(idx.rank(x) for x in base_acl(orig + c_bar) if x not in c_bar)

        B = s.exact.base_set
        exact = ExactAcl(
            acl,
            None if B is None else frozenset(idx.rank(x) for x in B if x not in c_bar),
            f"frozen {s.family} at {c_bar}",
        )
    frozen = StructureOracle(fsig, rule, "frozen", params=c_bar, exact=exact, note=f"{s.family} frozen at {c_bar}")
    return frozen


def frozen_param_signature(s: StructureOracle, ell: int) -> ParamSignature:
    return freeze_signature(s.sig, ell)


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------


def cantor_pair(x: int, y: int) -> int:
    return (x + y) * (x + y + 1) // 2 + y


@lru_cache(maxsize=1 << 16)
def cantor_unpair(z: int) -> tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def star_center(u: int) -> int:
    s, _ = cantor_unpair(u)
    return cantor_pair(s, 0)


def is_center(u: int) -> bool:
    return cantor_unpair(u)[1] == 0


def matching_partner(x: int) -> int:
    return x ^ 1


def _matching_rule(relation, t):
    n, m = t
    return n != m and n // 2 == m // 2


def _starforest_rule(relation, t):
    if relation == "C":
        return cantor_unpair(t[0])[1] == 0
    (u0, u1), (v0, v1) = cantor_unpair(t[0]), cantor_unpair(t[1])
    if relation == "S":
        return u0 == v0
    return u0 == v0 and ((u1 == 0 and v1 > 0) or (v1 == 0 and u1 > 0))


def rado_edge(x: int, y: int) -> bool:
    if x == y:
        return False
    lo, hi = (x, y) if x < y else (y, x)
    return (hi >> lo) & 1 == 1


MATCHING_SIG = Signature.relational(("R", 2))
STARFOREST_SIG = Signature.relational(("R", 2), ("C", 1), ("S", 2))
PURESET_SIG = Signature()
MARKED_SIG = Signature.relational(("E", 2), ("U", 1))


def matching() -> StructureOracle:
    exact = ExactAcl(
        lambda a: frozenset(a) | frozenset(matching_partner(x) for x in a),
        None,
        "acl(a) = a ∪ partners(a)",
    )
    return StructureOracle(MATCHING_SIG, _matching_rule, "matching", exact=exact)


def starforest() -> StructureOracle:
    exact = ExactAcl(
        lambda a: frozenset(a) | frozenset(star_center(x) for x in a),
        None,
        "acl(a) = a ∪ centres of the leaves in a",
    )
    return StructureOracle(STARFOREST_SIG, _starforest_rule, "starforest", exact=exact)


def pureset() -> StructureOracle:
    exact = ExactAcl(lambda a: frozenset(a), frozenset(), "acl(a) = a")
    return StructureOracle(PURESET_SIG, lambda r, t: False, "pureset", exact=exact)


def marked(F: Iterable[int] = (0,)) -> StructureOracle:
    F = tuple(sorted(set(int(x) for x in F)))
    if any(x < 0 for x in F):
        raise ValueError("marked points must be non-negative")
    Fset = frozenset(F)

    def rule(relation, t):
        if relation == "U":
            return t[0] in Fset
        return rado_edge(*t)

    exact = ExactAcl(lambda a: frozenset(a) | Fset, Fset, "acl(a) = a ∪ F")
    return StructureOracle(MARKED_SIG, rule, "marked", params=F, exact=exact)


def window_backed(w: StructureWindow) -> StructureOracle:
    """A structure agreeing with `w` on the window and empty beyond it."""
    fm = w.fact_map()

    def rule(relation, t):
        return t in fm[relation]

    return StructureOracle(w.sig, rule, "window", params=(w.n,), note="facts outside the window are false")


def user_rule(sig: Signature, rule: Rule, note: str = "") -> StructureOracle:
    return StructureOracle(sig, rule, "user", note=note)


def builtin(tag: str, **params) -> StructureOracle:
    tag = tag.lower()
    if tag == "matching":
        return matching()
    if tag in ("starforest", "star_forest", "star-forest"):
        return starforest()
    if tag in ("pureset", "pure_set", "pure-set"):
        return pureset()
    if tag in ("marked", "markedfamily"):
        return marked(params.get("F", (0,)))
    raise ValueError(f"unknown built-in family {tag!r}")


def oracle_from_spec(spec: Mapping) -> StructureOracle:
    """Build an oracle from a JSON spec such as ``{"family": "marked", "F": [0, 1]}``."""
    fam = str(spec.get("family", "")).lower()
    if fam == "window":
        return window_backed(StructureWindow.from_json(spec["window"]))
    params = {}
    if "F" in spec:
        params["F"] = tuple(int(x) for x in spec["F"])
    return builtin(fam, **params)


def with_exact(s: StructureOracle, exact: ExactAcl | None) -> StructureOracle:
    return replace(s, exact=exact)


def window_signature_symbols(w: StructureWindow) -> tuple[Symbol, ...]:
    return w.sig.relations
