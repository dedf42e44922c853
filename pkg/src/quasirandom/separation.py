"""Trees of permutation prefixes whose translates of a compact set are pairwise disjoint.

A compact set K of copies of a highly algebraic built-in structure is given by
a forced window (complete on ``{0..m-1}``) and an affine bound ``w``. The
bound is the numerical residue of compactness:

``matching``
    K = perfect matchings M with ``M↾m`` forced and ``partner(x) < w(x+1)``.
    Window-level membership is decided exactly (see `matching_window_consistent`)
    and counted by a transfer-matrix recursion over vertices (`MatchingModel.count`).
``starforest``
    K = copies of the star forest with ``M↾m`` forced and, for all n:
    (i) every leaf x has its centre below ``w(x+1)``;
    (ii) ``[n, w(n))`` contains a centre;
    (iii) every centre below n has a leaf in ``[n, w(n))``.

Each tree node s carries ``(ell_s, gamma_s)``. Case 1 nodes (mutually
algebraic pairs) swap ``[ell_s, ell)`` with a set Z on which no edge can
occur; case 2 nodes exchange ``k <-> k + ell''`` for ``ell_s <= k < ell``.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .algebraicity import SearchBounds, dichotomy_case
from .perms import FinSupPermutation
from .structures import StructureOracle, StructureWindow, act_window, builtin, induced_window, qftype

SUPPORTED = ("matching", "starforest")


class ExtensionError(RuntimeError):
    pass


class VerificationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# compact sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineBound:
    slope: int = 1
    offset: int = 3

    def __post_init__(self):
        if self.slope < 1 or self.offset < 1:
            raise ValueError("bound_fn needs slope >= 1 and offset >= 1 so that K is non-empty")

    def __call__(self, n: int) -> int:
        return self.slope * n + self.offset

    def to_json(self) -> dict:
        return {"slope": self.slope, "offset": self.offset}


@dataclass(frozen=True)
class CompactSetSpec:
    family: str
    forced: StructureWindow
    bound: AffineBound = AffineBound()

    def __post_init__(self):
        if self.family not in SUPPORTED:
            raise ValueError(f"compact sets are supported for {SUPPORTED}, not {self.family!r}")
        if self.forced.sig != builtin(self.family).sig:
            raise ValueError(f"forced window is not over the {self.family} signature")

    @property
    def m(self) -> int:
        return self.forced.n

    def w(self, n: int) -> int:
        return self.bound(n)

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "forced": {"n": self.forced.n, "facts": self.forced.to_json()["facts"]},
            "bound_fn": self.bound.to_json(),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CompactSetSpec":
        family = data["family"]
        sig = builtin(family).sig
        forced = data.get("forced", {"n": 0, "facts": {}})
        facts = {k: [tuple(t) for t in v] for k, v in forced.get("facts", {}).items()}
        if family == "starforest":
            facts = _complete_starforest_facts(int(forced["n"]), facts)
        window = StructureWindow.from_facts(sig, int(forced["n"]), facts)
        bound = data.get("bound_fn", {"slope": 1, "offset": 3})
        return cls(family, window, AffineBound(int(bound["slope"]), int(bound["offset"])))


def _complete_starforest_facts(n: int, facts: dict) -> dict:
    """Fill in S from C and R when a star-forest window lists only centres and edges."""
    if "S" in facts:
        return facts
    centres = {t[0] for t in facts.get("C", [])}
    star = {c: c for c in centres}
    for x, y in facts.get("R", []):
        if y in centres:
            star[x] = y
    out = dict(facts)
    out["S"] = [(x, y) for x in range(n) for y in range(n) if x == y or (x in star and y in star and star[x] == star[y])]
    return out


def documented_k(family: str = "matching") -> CompactSetSpec:
    """The example compact sets used throughout the docs and tests."""
    if family == "matching":
        return CompactSetSpec.from_json(
            {"family": "matching", "forced": {"n": 4, "facts": {"R": [[0, 1], [1, 0], [2, 3], [3, 2]]}},
             "bound_fn": {"slope": 1, "offset": 3}}
        )
    if family == "starforest":
        return CompactSetSpec.from_json(
            {"family": "starforest", "forced": {"n": 2, "facts": {"C": [[0]], "R": [[0, 1], [1, 0]]}},
             "bound_fn": {"slope": 2, "offset": 2}}
        )
    raise ValueError(f"no documented compact set for {family!r}")


def forced_embeds(K: CompactSetSpec, search: int = 12) -> tuple[int, ...] | None:
    """Points of the built-in structure whose induced window equals the forced window."""
    s = builtin(K.family)
    if K.m == 0:
        return ()
    for pts in itertools.permutations(range(search), K.m):
        if induced_window(s, pts) == K.forced:
            return pts
    return None


# ---------------------------------------------------------------------------
# matching: exact window consistency and counting
# ---------------------------------------------------------------------------


def _matching_partners(w: StructureWindow) -> dict | None:
    """Partner map of a window that is a partial matching, else None."""
    partner: dict = {}
    for x, y in w.fact_set("R"):
        if x == y or (y, x) not in w.fact_set("R"):
            return None
        if partner.get(x, y) != y:
            return None
        partner[x] = y
    return partner


def _hall_ok(open_points: Iterable[int], L: int, w) -> bool:
    return all(L + i < w(o + 1) for i, o in enumerate(sorted(open_points)))


def matching_window_consistent(V: StructureWindow, K: CompactSetSpec) -> bool:
    """Is V the restriction to ``{0..n-1}`` of some member of K?

    Needs: V is a partial matching agreeing with the forced window, every edge
    ``x < y`` has ``y < w(x+1)``, and the unmatched points can be served in
    order by fresh partners ``n, n+1, ...`` within their bounds. The rest of ℕ
    is then matched consecutively, which the bound allows since
    ``w(u+1) > u+1``.
    """
    if V.n < K.m:
        raise ValueError("windows shorter than the forced segment are not supported")
    partner = _matching_partners(V)
    if partner is None:
        return False
    if V.restrict(K.m) != K.forced:
        return False
    for x, y in partner.items():
        if x < y and y >= K.w(x + 1):
            return False
    return _hall_ok((x for x in range(V.n) if x not in partner), V.n, K.w)


class MatchingModel:
    def __init__(self, K: CompactSetSpec):
        if K.family != "matching":
            raise ValueError("MatchingModel needs a matching compact set")
        self.K = K
        partner = _matching_partners(K.forced)
        if partner is None:
            raise ValueError("forced window is not a partial matching")
        self.fp = {v: partner.get(v) for v in range(K.m)}

    def count(
        self,
        L: int,
        forbidden: Iterable[tuple[int, int]] = (),
        required: Iterable[tuple[int, int]] = (),
        g: FinSupPermutation | None = None,
    ) -> int:
        """Number of K-consistent windows of size L avoiding `forbidden` and containing `required`.

        With `g`, counts windows V such that ``g_*V`` is K-consistent as well.
        """
        K, fp, m, w = self.K, self.fp, self.K.m, self.K.w
        if L < m:
            raise ValueError(f"window size {L} is below the forced segment {m}")
        bad = {frozenset(e) for e in forbidden}
        req: dict = {}

        def need(a, b):
            if a == b or req.get(a, b) != b or req.get(b, a) != a:
                return False
            req[a], req[b] = b, a
            return True

        for v, u in fp.items():
            if u is not None and not need(v, u):
                return 0
        for a, b in required:
            if not (0 <= a < L and 0 <= b < L) or not need(a, b):
                return 0
        gv = ginv = None
        if g is not None:
            if not g.preserves(L):
                raise ValueError(f"{g} does not preserve a window of size {L}")
            gv = [g(x) for x in range(L)]
            ginv = [g.inverse()(x) for x in range(L)]
            for x in range(L):
                if gv[x] < m and fp[gv[x]] is not None and not need(x, ginv[fp[gv[x]]]):
                    return 0

        def edge_ok(p: int, v: int) -> bool:
            if v >= w(p + 1) or frozenset((p, v)) in bad:
                return False
            if req.get(p, v) != v or req.get(v, p) != p:
                return False
            if p < m and v < m and fp[p] != v:
                return False
            if gv is not None:
                a, b = sorted((gv[p], gv[v]))
                if b >= w(a + 1):
                    return False
                if a < m and b < m and fp[a] != b:
                    return False
            return True

        states: dict = {(): 1}
        for v in range(L):
            new: dict = defaultdict(int)
            for pend, cnt in states.items():
                if any(w(p + 1) <= v for p in pend):
                    continue
                for i, p in enumerate(pend):
                    if edge_ok(p, v):
                        new[pend[:i] + pend[i + 1:]] += cnt
                if req.get(v, L) > v:
                    new[pend + (v,)] += cnt
            states = new
        total = 0
        for pend, cnt in states.items():
            if any(p in req for p in pend):
                continue
            if not _hall_ok(pend, L, w):
                continue
            if gv is not None and not _hall_ok((gv[p] for p in pend), L, w):
                continue
            total += cnt
        return total

    def enumerate_naive(self, L: int, limit: int = 200_000) -> Iterator[StructureWindow]:
        """Every K-consistent window of size L, by brute force over partial matchings."""
        sig = self.K.forced.sig
        produced = 0

        def rec(v: int, partner: dict):
            nonlocal produced
            if v == L:
                edges = [(x, y) for x, y in partner.items() if y is not None]
                V = StructureWindow.from_facts(sig, L, {"R": edges})
                if matching_window_consistent(V, self.K):
                    produced += 1
                    if produced > limit:
                        raise ExtensionError(f"more than {limit} consistent windows of size {L}")
                    yield V
                return
            if v in partner:
                yield from rec(v + 1, partner)
                return
            yield from rec(v + 1, partner | {v: None})
            for u in range(v + 1, L):
                if u not in partner:
                    yield from rec(v + 1, partner | {v: u, u: v})

        yield from rec(0, {})


# ---------------------------------------------------------------------------
# star forest: relaxed window consistency and the three claims
# ---------------------------------------------------------------------------


def _forced_star_data(K: CompactSetSpec) -> tuple[set, dict]:
    centres = {t[0] for t in K.forced.fact_set("C")}
    centre_of = {x: y for x, y in K.forced.fact_set("R") if y in centres}
    return centres, centre_of


def starforest_window_plausible(V: StructureWindow, K: CompactSetSpec) -> bool:
    """Necessary conditions for V to be the restriction of a member of K.

    Checks the star-forest shape, the forced window, and rules (i)-(iii) for
    every instance decided inside the window.
    """
    if V.n < K.m or V.restrict(K.m) != K.forced:
        return False
    C = {t[0] for t in V.fact_set("C")}
    R = V.fact_set("R")
    S = V.fact_set("S")
    if any((y, x) not in R for x, y in R) or any((x in C) == (y in C) for x, y in R):
        return False
    centre_of: dict = {}
    for x, y in R:
        if y in C:
            if x in centre_of:
                return False
            centre_of[x] = y
    for x in range(V.n):
        for y in range(V.n):
            same = (x, y) in S
            if x == y and not same:
                return False
            if (x in C and y in C and x != y and same) or ((x, y) in R and not same):
                return False
            if x in centre_of and y in centre_of and same != (centre_of[x] == centre_of[y]):
                return False
            if x in C and y in centre_of and same != (centre_of[y] == x):
                return False
    if any((x, y) in S and (y, z) in S and (x, z) not in S for x in range(V.n) for y in range(V.n) for z in range(V.n)):
        return False
    for x in range(V.n):
        if x in C:
            continue
        if x in centre_of and centre_of[x] >= K.w(x + 1):
            return False
        if x not in centre_of and K.w(x + 1) <= V.n:
            return False
    for n in range(V.n + 1):
        hi = K.w(n)
        if hi > V.n:
            break
        if not any(n <= c < hi for c in C):
            return False
        for c in C:
            if c < n and not any(n <= x < hi and centre_of.get(x) == c for x in range(V.n)):
                return False
    return True


def enumerate_starforest_windows(K: CompactSetSpec, L: int) -> Iterator[StructureWindow]:
    """All plausible windows of size L (brute force; keep L small)."""
    sig = builtin("starforest").sig

    def rec(v: int, star: list, centre: dict):
        if v == L:
            C = [(c,) for c in centre.values()]
            R = []
            for x in range(L):
                c = centre.get(star[x])
                if c is not None and c != x:
                    R += [(x, c), (c, x)]
            S = [(x, y) for x in range(L) for y in range(L) if star[x] == star[y]]
            V = StructureWindow.from_facts(sig, L, {"R": R, "C": C, "S": S})
            if starforest_window_plausible(V, K):
                yield V
            return
        labels = sorted(set(star))
        new = max(labels, default=-1) + 1
        yield from rec(v + 1, star + [new], centre | {new: v})
        yield from rec(v + 1, star + [new], centre)
        for lab in labels:
            yield from rec(v + 1, star + [lab], centre)
            if lab not in centre:
                yield from rec(v + 1, star + [lab], centre | {lab: v})

    yield from rec(0, [], {})


def case2_claims(K: CompactSetSpec, ell_s: int, ell: int, ell1: int, ell2: int) -> dict:
    """Decide claims (a)-(c) for a star-forest node from the forced window and rules (i)-(iii).

    (a) every member has a centre in ``[ell_s, ell)``;
    (b) every centre below ell has a leaf in ``[ell, ell1)``;
    (c) no leaf in ``[ell, ell1)`` has its centre at or above ell2.
    """
    centres, centre_of = _forced_star_data(K)
    m, w = K.m, K.w
    a = any(ell_s <= c < min(ell, m) for c in centres) or ell >= w(ell_s)
    if ell1 >= w(ell):
        b = True
    elif ell <= m:
        b = all(any(ell <= x < min(ell1, m) and centre_of.get(x) == c for x in range(m)) for c in centres if c < ell)
    else:
        b = False
    c_ok = True
    for x in range(ell, ell1):
        if x < m and x in centres:
            continue
        if x < m and x in centre_of:
            c_ok &= centre_of[x] < ell2
        else:
            c_ok &= w(x + 1) <= ell2
    return {"a": a, "b": b, "c": c_ok}


def case2_triple(K: CompactSetSpec, ell_s: int) -> tuple[int, int, int]:
    """The least ``ell < ell' < ell''`` (in that search order) satisfying the three claims."""
    w = K.w
    ell = next(x for x in range(ell_s + 1, w(ell_s) + 1) if case2_claims(K, ell_s, x, x + 1, w(w(x + 1)))["a"])
    ell1 = next(x for x in range(ell + 1, w(ell) + 1) if case2_claims(K, ell_s, ell, x, w(x))["b"])
    ell2 = next(x for x in range(ell1 + 1, w(ell1) + 1) if case2_claims(K, ell_s, ell, ell1, x)["c"])
    return ell, ell1, ell2


# ---------------------------------------------------------------------------
# capture relations
# ---------------------------------------------------------------------------


def consistent_windows(K: CompactSetSpec, L: int, limit: int = 200_000) -> Iterator[StructureWindow]:
    """Every K-consistent window of size L (at least the forced size)."""
    L = max(L, K.m)
    if K.family == "matching":
        yield from MatchingModel(K).enumerate_naive(L, limit)
    else:
        yield from itertools.islice(enumerate_starforest_windows(K, L), limit)


def capture_relations(s: StructureOracle, K: CompactSetSpec, ell_s: int, limit: int = 200_000) -> list:
    """The quantifier-free types of ``(0, ..., ell_s - 1)`` realized across K."""
    if s.family not in SUPPORTED:
        raise ValueError(f"capture relations need a built-in highly algebraic family, not {s.family!r}")
    if s.family != K.family:
        raise ValueError("structure and compact set belong to different families")
    types = set()
    for V in consistent_windows(K, ell_s, limit):
        types.add(qftype(V.restrict(ell_s) if V.n > ell_s else V, tuple(range(ell_s))))
    return sorted(types, key=lambda t: sorted(map(str, t.hits)))


# ---------------------------------------------------------------------------
# tree
# ---------------------------------------------------------------------------


@dataclass
class TreeNode:
    key: str
    ell: int
    gamma: tuple[int, ...]
    case: int | None = None
    data: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"ell": self.ell, "gamma": list(self.gamma), "case": self.case, "data": self.data}

    @classmethod
    def from_json(cls, key: str, d: Mapping) -> "TreeNode":
        return cls(key, int(d["ell"]), tuple(int(x) for x in d["gamma"]), d.get("case"), dict(d.get("data", {})))


@dataclass
class PermTree:
    family: str
    depth: int
    nodes: dict
    k_spec: dict = field(default_factory=dict)

    def leaves(self) -> list[str]:
        return ["".join(b) for b in itertools.product("01", repeat=self.depth)]

    def to_json(self) -> dict:
        return {
            "version": 1,
            "family": self.family,
            "depth": self.depth,
            "k": self.k_spec,
            "nodes": {k: self.nodes[k].to_json() for k in sorted(self.nodes, key=lambda s: (len(s), s))},
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "PermTree":
        nodes = {k: TreeNode.from_json(k, v) for k, v in d["nodes"].items()}
        return cls(d["family"], int(d["depth"]), nodes, dict(d.get("k", {})))


@dataclass(frozen=True)
class Extension:
    case: int
    ell_child: int
    gamma0: tuple[int, ...]
    gamma1: tuple[int, ...]
    data: dict


def _extend_identity(gamma_s: Sequence[int], n: int) -> tuple[int, ...]:
    return tuple(gamma_s) + tuple(range(len(gamma_s), n))


def _swap_extension(gamma_s: Sequence[int], n: int, pairs: Iterable[tuple[int, int]]) -> tuple[int, ...]:
    out = list(_extend_identity(gamma_s, n))
    for x, y in pairs:
        out[x], out[y] = y, x
    return tuple(out)


def case1_extend(s: StructureOracle, K: CompactSetSpec, ell_s: int, gamma_s: Sequence[int], horizon: int | None = None) -> Extension:
    """Find ell with an edge inside ``[ell_s, ell)`` in every member, and an edge-free Z beyond ell."""
    if K.family != "matching":
        raise ExtensionError(f"case 1 extension is implemented for the matching family, not {K.family}")
    model = MatchingModel(K)
    w = K.w
    horizon = horizon or w(w(ell_s + 1)) + K.m
    ell = None
    for cand in range(ell_s + 1, horizon + 1):
        L = max(cand, K.m)
        inside = [(x, y) for x in range(ell_s, cand) for y in range(x + 1, cand)]
        if model.count(L, forbidden=inside) == 0:
            ell = cand
            break
    if ell is None:
        raise ExtensionError(f"no ell <= {horizon} forces an edge inside [{ell_s}, ell) for every member of K")
    Z: list[int] = []
    while len(Z) < ell - ell_s:
        nxt = max([ell] + [z + 1 for z in Z] + [w(z + 1) for z in Z])
        Z.append(nxt)
    L = max(max(Z) + 1, K.m)
    violations = {f"{p},{q}": model.count(L, required=[(p, q)]) for p, q in itertools.combinations(Z, 2)}
    if any(violations.values()):
        raise ExtensionError(f"Z={Z} admits an edge in some member of K: {violations}")
    claim_a = model.count(max(ell, K.m), forbidden=[(x, y) for x in range(ell_s, ell) for y in range(x + 1, ell)])
    ell_child = max(Z) + 1
    gamma0 = _extend_identity(gamma_s, ell_child)
    gamma1 = _swap_extension(gamma_s, ell_child, zip(range(ell_s, ell), Z))
    forced_edges = sorted((x, y) for x, y in K.forced.fact_set("R") if ell_s <= x < y < ell)
    data = {
        "ell": ell,
        "Z": Z,
        "claim_a_violators": claim_a,
        "claim_b_violators": violations,
        "forced_edges": [list(e) for e in forced_edges],
    }
    return Extension(1, ell_child, gamma0, gamma1, data)


def case2_extend(s: StructureOracle, K: CompactSetSpec, ell_s: int, gamma_s: Sequence[int]) -> Extension:
    if K.family != "starforest":
        raise ExtensionError(f"case 2 extension is implemented for the star-forest family, not {K.family}")
    ell, ell1, ell2 = case2_triple(K, ell_s)
    ell_child = ell2 + ell
    gamma0 = _extend_identity(gamma_s, ell_child)
    gamma1 = _swap_extension(gamma_s, ell_child, ((k, k + ell2) for k in range(ell_s, ell)))
    data = {"ell": ell, "ell1": ell1, "ell2": ell2, "claims": case2_claims(K, ell_s, ell, ell1, ell2)}
    return Extension(2, ell_child, gamma0, gamma1, data)


def build_tree(s: StructureOracle, K: CompactSetSpec, depth: int, bounds: SearchBounds | None = None) -> PermTree:
    if s.family not in SUPPORTED:
        raise ValueError(f"separation trees are built for {SUPPORTED}, not {s.family!r}")
    if s.family != K.family:
        raise ValueError("structure and compact set belong to different families")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if forced_embeds(K) is None:
        raise ValueError("the forced window does not embed in the structure")
    bounds = bounds or SearchBounds(witness_window=128)
    nodes = {"": TreeNode("", 0, ())}
    frontier = [""]
    for _ in range(depth):
        nxt = []
        for key in frontier:
            node = nodes[key]
            dic = dichotomy_case(s, tuple(range(node.ell)), bounds)
            if dic.case == 1:
                ext = case1_extend(s, K, node.ell, node.gamma)
            elif dic.case == 2:
                ext = case2_extend(s, K, node.ell, node.gamma)
            else:
                raise ExtensionError(f"dichotomy undetermined at node {key!r}: {dic.note}")
            node.case = ext.case
            node.data = ext.data | {"dichotomy": dic.to_json()}
            for bit, gamma in (("0", ext.gamma0), ("1", ext.gamma1)):
                nodes[key + bit] = TreeNode(key + bit, ext.ell_child, gamma)
                nxt.append(key + bit)
        frontier = nxt
    return PermTree(s.family, depth, nodes, K.to_json())


def leaf_permutations(tree: PermTree) -> dict[str, FinSupPermutation]:
    return {leaf: FinSupPermutation.from_window_perm(tree.nodes[leaf].gamma) for leaf in tree.leaves()}


def check_tree_invariants(tree: PermTree) -> list[str]:
    """Problems with the structural conditions; empty when the tree is sound."""
    problems = []
    root = tree.nodes.get("")
    if root is None or root.ell != 0 or root.gamma != ():
        problems.append("root must have ell = 0 and the empty permutation")
    for key, node in tree.nodes.items():
        if sorted(node.gamma) != list(range(node.ell)):
            problems.append(f"node {key!r}: gamma is not a permutation of range({node.ell})")
        if len(key) < tree.depth:
            kids = [tree.nodes.get(key + b) for b in "01"]
            if any(k is None for k in kids):
                problems.append(f"node {key!r}: missing children")
                continue
            if kids[0].ell != kids[1].ell:
                problems.append(f"node {key!r}: children disagree on ell")
            if kids[0].ell <= node.ell:
                problems.append(f"node {key!r}: ell does not grow")
            for k in kids:
                if tuple(k.gamma[: node.ell]) != tuple(node.gamma):
                    problems.append(f"node {k.key!r}: gamma does not extend its parent")
    if len(tree.nodes) != 2 ** (tree.depth + 1) - 1:
        problems.append(f"expected {2 ** (tree.depth + 1) - 1} nodes, found {len(tree.nodes)}")
    return problems


# ---------------------------------------------------------------------------
# disjointness certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DisjointnessCertificate:
    alpha: str
    beta: str
    node: str
    case: int
    relation: str
    points: tuple[int, ...]
    images: tuple[int, ...]
    region: str
    checks: dict

    @property
    def ok(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "node": self.node,
            "case": self.case,
            "relation": self.relation,
            "points": list(self.points),
            "images": list(self.images),
            "region": self.region,
            "checks": self.checks,
            "ok": self.ok,
        }


def _branch(alpha: str, beta: str) -> tuple[str, str, str]:
    """First branching node and the leaves through its 0- and 1-children."""
    if alpha == beta:
        raise ValueError("leaves must differ")
    if len(alpha) != len(beta):
        raise ValueError("leaves must have equal depth")
    i = next(i for i in range(len(alpha)) if alpha[i] != beta[i])
    zero, one = (alpha, beta) if alpha[i] == "0" else (beta, alpha)
    return alpha[:i], zero, one


def verify_disjoint(tree: PermTree, K: CompactSetSpec, alpha: str, beta: str) -> DisjointnessCertificate:
    """Replay the contradiction at the first node where the two branches split.

    With g0, g1 the leaf permutations through the 0- and 1-child and
    ``g = g1^-1 g0``: in case 1, g maps ``[ell_s, ell)`` into Z; in case 2, g
    fixes ``[ell, ell')`` and pushes ``[ell_s, ell)`` to ``ell''`` and beyond.
    The claims about K are recomputed from K itself, not read from the tree.
    """
    node_key, zero, one = _branch(alpha, beta)
    node = tree.nodes[node_key]
    perms = leaf_permutations(tree)
    g = perms[one].inverse() * perms[zero]
    ell_s = node.ell
    d = node.data
    checks: dict = {}
    if node.case == 1:
        ell, Z = int(d["ell"]), [int(z) for z in d["Z"]]
        model = MatchingModel(K)
        block = range(ell_s, ell)
        checks["g_maps_block_into_Z"] = all(g(x) in Z for x in block)
        checks["Z_beyond_ell"] = all(z >= ell for z in Z) and len(set(Z)) == len(Z)
        checks["claim_a"] = model.count(max(ell, K.m), forbidden=[(x, y) for x in block for y in block if x < y]) == 0
        L = max(max(Z) + 1, K.m)
        checks["claim_b"] = all(model.count(L, required=[(p, q)]) == 0 for p, q in itertools.combinations(Z, 2))
        forced = [(x, y) for x, y in K.forced.fact_set("R") if ell_s <= x < y < ell]
        pts = forced[0] if forced else (ell_s, ell_s + 1 if ell_s + 1 < ell else ell_s)
        region = f"Z={Z}: no member of K has an edge inside Z"
        return DisjointnessCertificate(alpha, beta, node_key, 1, "R", tuple(pts), g.apply(pts), region, checks)
    if node.case == 2:
        ell, ell1, ell2 = int(d["ell"]), int(d["ell1"]), int(d["ell2"])
        claims = case2_claims(K, ell_s, ell, ell1, ell2)
        checks["order"] = ell_s < ell < ell1 < ell2
        checks["g_fixes_middle"] = all(g(x) == x for x in range(ell, ell1))
        checks["g_pushes_block_past_ell2"] = all(g(x) >= ell2 for x in range(ell_s, ell))
        checks |= {f"claim_{k}": v for k, v in claims.items()}
        centres, centre_of = _forced_star_data(K)
        b = next((c for c in sorted(centres) if ell_s <= c < ell), ell_s)
        a = next((x for x in sorted(centre_of) if ell <= x < ell1 and centre_of[x] == b), ell)
        region = f"centres of leaves in [{ell}, {ell1}) lie below {ell2}"
        return DisjointnessCertificate(alpha, beta, node_key, 2, "R", (a, b), (g(a), g(b)), region, checks)
    raise VerificationError(f"node {node_key!r} has no recorded case")


def verify_tree(tree: PermTree, K: CompactSetSpec) -> dict:
    problems = check_tree_invariants(tree)
    certs = []
    leaves = tree.leaves()
    for a, b in itertools.combinations(leaves, 2):
        try:
            certs.append(verify_disjoint(tree, K, a, b))
        except (KeyError, ValueError, VerificationError) as exc:
            problems.append(f"pair {a},{b}: {exc}")
    failing = [c.to_json() for c in certs if not c.ok]
    return {
        "invariant_problems": problems,
        "pairs": len(certs),
        "failing_pairs": failing,
        "ok": not problems and not failing and len(certs) == len(leaves) * (len(leaves) - 1) // 2,
        "certificates": [c.to_json() for c in certs],
    }


def exhaustive_pair_check(tree: PermTree, K: CompactSetSpec, alpha: str, beta: str, method: str = "dp") -> int:
    """Number of K-consistent windows V (of the leaf size) with ``g_*V`` also K-consistent.

    Zero means no window lies in both translates. ``dp`` counts exactly by
    recursion over vertices; ``naive`` enumerates windows one by one.
    """
    if K.family != "matching":
        raise ValueError("exhaustive window checks are implemented for the matching family")
    perms = leaf_permutations(tree)
    g = perms[beta].inverse() * perms[alpha]
    L = max(max(tree.nodes[x].ell for x in (alpha, beta)), K.m)
    model = MatchingModel(K)
    if method == "dp":
        return model.count(L, g=g)
    if method == "naive":
        return sum(1 for V in model.enumerate_naive(L) if matching_window_consistent(act_window(g, V), K))
    raise ValueError(f"unknown method {method!r}")
