"""Algebraic closure, high algebraicity, the two-case dichotomy, and window automorphisms.

Orbits of pointwise stabilizers on an infinite structure are not computable
in general, so membership in acl is three-valued. Two routes exist:

* ``exact``: the family's closed-form closure (built-in families only);
* ``count``: count the realizations of ``qftype(ā b)`` below a growing
  window. More than `threshold` realizations gives No; a count that stays
  constant across two consecutive windows gives a Yes flagged as heuristic.

Automorphisms of finite windows are found by colour refinement followed by
backtracking, which is exact.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .perms import FinSupPermutation
from .structures import StructureOracle, StructureWindow, qftype, window_of

YES, NO, UNKNOWN = "yes", "no", "unknown"

DEFAULT_THRESHOLD = 32
DEFAULT_WINDOWS = (16, 32, 64, 128)
DEFAULT_WINDOW_BOUND = 64


class Cancelled(RuntimeError):
    pass


class SearchExhausted(RuntimeError):
    pass


class CancelToken:
    """Cooperative cancellation flag checked inside long searches."""

    def __init__(self):
        self.cancelled = False

    def cancel(self):
        self.cancelled = True

    def check(self):
        if self.cancelled:
            raise Cancelled("search cancelled")


def _check(token: CancelToken | None):
    if token is not None:
        token.check()


# ---------------------------------------------------------------------------
# window automorphisms
# ---------------------------------------------------------------------------


class _WindowIndex:
    """Fact sets and per-point incidence lists of a window, for fast search."""

    def __init__(self, w: StructureWindow):
        self.n = w.n
        self.facts = [ts for _, ts in w.facts]
        inc: list[list] = [[] for _ in range(w.n)]
        for r, ts in enumerate(self.facts):
            for t in ts:
                for x in set(t):
                    inc[x].append((r, t))
        self.inc = inc
        self.counts = [len(ts) for ts in self.facts]

    def refine(self, individualized: Mapping[int, int], table: dict) -> list[int]:
        """Colour refinement starting from `individualized` (point -> label).

        `table` is shared between calls so colours of different runs compare.
        """
        col = [table.setdefault(("ind", individualized[x]) if x in individualized else ("free",), len(table)) for x in range(self.n)]
        classes = len(set(col))
        while True:
            new = []
            for x in range(self.n):
                nb = sorted((r, tuple(-1 if y == x else col[y] for y in t)) for r, t in self.inc[x])
                new.append(table.setdefault((col[x], tuple(nb)), len(table)))
            k = len(set(new))
            col = new
            if k == classes:
                return col
            classes = k


def _consistent(idx: _WindowIndex, fwd: dict, bwd: dict, x: int, y: int) -> bool:
    for r, t in idx.inc[x]:
        if all(z in fwd for z in t):
            if tuple(fwd[z] for z in t) not in idx.facts[r]:
                return False
    for r, t in idx.inc[y]:
        if all(z in bwd for z in t):
            if tuple(bwd[z] for z in t) not in idx.facts[r]:
                return False
    return True


def _find_automorphism(
    idx: _WindowIndex, prescribed: Mapping[int, int], token: CancelToken | None = None
) -> dict | None:
    """An automorphism extending `prescribed`, or None if none exists."""
    items = list(prescribed.items())
    if len({y for _, y in items}) != len(items):
        return None
    table: dict = {}
    src = idx.refine({x: i for i, (x, _) in enumerate(items)}, table)
    dst = idx.refine({y: i for i, (_, y) in enumerate(items)}, table)
    if sorted(src) != sorted(dst):
        return None
    if any(src[x] != dst[y] for x, y in items):
        return None
    fwd: dict = {}
    bwd: dict = {}
    for x, y in items:
        if x in fwd:
            continue
        fwd[x] = y
        bwd[y] = x
        if not _consistent(idx, fwd, bwd, x, y):
            return None
    by_colour: dict = {}
    for y in range(idx.n):
        by_colour.setdefault(dst[y], []).append(y)
    size = Counter(src)
    order = sorted((x for x in range(idx.n) if x not in fwd), key=lambda x: (size[src[x]], x))

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        _check(token)
        x = order[i]
        for y in by_colour[src[x]]:
            if y in bwd:
                continue
            fwd[x] = y
            bwd[y] = x
            if _consistent(idx, fwd, bwd, x, y) and extend(i + 1):
                return True
            del fwd[x]
            del bwd[y]
        return False

    return dict(fwd) if extend(0) else None


def is_automorphism(w: StructureWindow, perm: Sequence[int]) -> bool:
    perm = tuple(perm)
    if sorted(perm) != list(range(w.n)):
        return False
    return all(tuple(perm[x] for x in t) in ts for _, ts in w.facts for t in ts)


@dataclass(frozen=True)
class WindowGroup:
    """Generators of the automorphism group of a window, with its order."""

    n: int
    generators: tuple[tuple[int, ...], ...]
    order: int
    base_orbits: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {"n": self.n, "order": self.order, "generators": [list(g) for g in self.generators]}


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def add_perm(self, perm: Mapping[int, int]):
        for x, y in perm.items():
            self.union(x, y)

    def classes(self) -> list[tuple[int, ...]]:
        groups: dict = {}
        for x in range(len(self.parent)):
            groups.setdefault(self.find(x), []).append(x)
        return sorted(tuple(g) for g in groups.values())


def _check_bound(w: StructureWindow, bound: int):
    if w.n > bound:
        raise ValueError(f"window size {w.n} exceeds the automorphism search bound {bound}")


def window_aut_generators(
    w: StructureWindow, bound: int = DEFAULT_WINDOW_BOUND, token: CancelToken | None = None
) -> WindowGroup:
    """Strong generating set along the base 0, 1, ..., n-1."""
    _check_bound(w, bound)
    idx = _WindowIndex(w)
    gens: list[tuple[int, ...]] = []
    orbit_sizes = []
    for i in range(w.n):
        fixed = {j: j for j in range(i)}
        table: dict = {}
        col = idx.refine(fixed, table)
        uf = _UnionFind(w.n)
        for y in range(i + 1, w.n):
            if col[y] != col[i] or uf.find(y) == uf.find(i):
                continue
            _check(token)
            found = _find_automorphism(idx, fixed | {i: y}, token)
            if found is not None:
                gens.append(tuple(found[x] for x in range(w.n)))
                uf.add_perm(found)
        orbit_sizes.append(sum(1 for x in range(w.n) if uf.find(x) == uf.find(i)))
    order = 1
    for k in orbit_sizes:
        order *= k
    return WindowGroup(w.n, tuple(gens), order, tuple(orbit_sizes))


def stabilizer_orbits(
    w: StructureWindow,
    a_bar: Sequence[int] = (),
    method: str = "search",
    bound: int = DEFAULT_WINDOW_BOUND,
    token: CancelToken | None = None,
) -> list[tuple[int, ...]]:
    """Orbits of the pointwise stabilizer of `a_bar` in Aut(w), sorted."""
    a_bar = tuple(a_bar)
    if any(not (0 <= a < w.n) for a in a_bar):
        raise ValueError(f"{a_bar} not inside window of size {w.n}")
    fixed = {a: a for a in a_bar}
    uf = _UnionFind(w.n)
    if method == "brute":
        if w.n > 9:
            raise ValueError("brute-force orbit enumeration is limited to windows of size <= 9")
        for perm in itertools.permutations(range(w.n)):
            if all(perm[a] == a for a in a_bar) and is_automorphism(w, perm):
                uf.add_perm(dict(enumerate(perm)))
        return uf.classes()
    if method != "search":
        raise ValueError(f"unknown method {method!r}")
    _check_bound(w, bound)
    idx = _WindowIndex(w)
    col = idx.refine({a: i for i, a in enumerate(dict.fromkeys(a_bar))}, {})
    for x in range(w.n):
        for y in range(x + 1, w.n):
            if col[x] != col[y] or uf.find(x) == uf.find(y):
                continue
            _check(token)
            found = _find_automorphism(idx, fixed | {x: y}, token)
            if found is not None:
                uf.add_perm(found)
    return uf.classes()


def qftype_classes(s, a_bar: Sequence[int], n: int) -> list[tuple[int, ...]]:
    """Partition of ``{0..n-1}`` by the quantifier-free type of ``ā x``."""
    a_bar = tuple(a_bar)
    groups: dict = {}
    for x in range(n):
        groups.setdefault(qftype(s, a_bar + (x,)), []).append(x)
    return sorted(tuple(g) for g in groups.values())


# ---------------------------------------------------------------------------
# acl membership
# ---------------------------------------------------------------------------


class RealizationCounter:
    """Counts realizations of ``qftype(ā b)`` below n, caching per (ā, n)."""

    def __init__(self, s: StructureOracle):
        self.s = s
        self._profiles: dict = {}

    def profile(self, a_bar: tuple, n: int) -> Counter:
        key = (a_bar, n)
        prof = self._profiles.get(key)
        if prof is None:
            members = set(a_bar)
            prof = Counter(qftype(self.s, a_bar + (x,)) for x in range(n) if x not in members)
            self._profiles[key] = prof
        return prof

    def count(self, a_bar: Sequence[int], b: int, n: int) -> int:
        a_bar = tuple(a_bar)
        if b in a_bar:
            raise ValueError(f"{b} is an entry of {a_bar}")
        return self.profile(a_bar, n)[qftype(self.s, a_bar + (b,))]


def count_realizations(s: StructureOracle, a_bar: Sequence[int], b: int, n: int) -> int:
    """``#{b' < n : b' not in ā and qftype(ā b') = qftype(ā b)}``."""
    return RealizationCounter(s).count(a_bar, b, n)


@dataclass(frozen=True)
class AclVerdict:
    member: str
    route: str
    heuristic: bool = False
    counts: tuple[tuple[int, int], ...] = ()
    threshold: int | None = None
    note: str = ""

    @property
    def is_yes(self) -> bool:
        return self.member == YES

    def to_json(self) -> dict:
        return {
            "member": self.member,
            "route": self.route,
            "heuristic": self.heuristic,
            "counts": [list(c) for c in self.counts],
            "threshold": self.threshold,
            "note": self.note,
        }


def in_acl(
    s: StructureOracle,
    a_bar: Sequence[int],
    b: int,
    threshold: int = DEFAULT_THRESHOLD,
    windows: Sequence[int] = DEFAULT_WINDOWS,
    route: str = "auto",
    counter: RealizationCounter | None = None,
) -> AclVerdict:
    a_bar = tuple(a_bar)
    if b in a_bar:
        return AclVerdict(YES, "trivial", note="b is an entry of the tuple")
    if route not in ("auto", "exact", "count"):
        raise ValueError(f"unknown route {route!r}")
    if route in ("auto", "exact") and s.exact is not None:
        hit = b in s.exact.acl(a_bar)
        return AclVerdict(YES if hit else NO, "exact", note=s.exact.description)
    if route == "exact":
        return AclVerdict(UNKNOWN, "exact", note="no closed form for this structure")
    counter = counter or RealizationCounter(s)
    floor = max(a_bar + (b,)) + 1
    usable = [n for n in sorted(windows) if n >= floor]
    seen: list[tuple[int, int]] = []
    for n in usable:
        c = counter.count(a_bar, b, n)
        seen.append((n, c))
        if c > threshold:
            return AclVerdict(NO, "count", counts=tuple(seen), threshold=threshold, note="realizations exceed threshold")
        if len(seen) >= 2 and seen[-2][1] == c:
            return AclVerdict(
                YES,
                "count",
                heuristic=True,
                counts=tuple(seen),
                threshold=threshold,
                note=f"count stable on windows {seen[-2][0]}..{n}",
            )
    return AclVerdict(UNKNOWN, "count", counts=tuple(seen), threshold=threshold, note="count neither stable nor above threshold")


@dataclass(frozen=True)
class AclEstimate:
    a_bar: tuple[int, ...]
    members: frozenset
    verdicts: Mapping[int, AclVerdict] = field(compare=False)
    unknown: frozenset = frozenset()

    def to_json(self) -> dict:
        return {
            "a_bar": list(self.a_bar),
            "members": sorted(self.members),
            "unknown": sorted(self.unknown),
            "verdicts": {str(b): v.to_json() for b, v in sorted(self.verdicts.items())},
        }


def acl_of(
    s: StructureOracle,
    a_bar: Sequence[int],
    candidates: Iterable[int] | None = None,
    threshold: int = DEFAULT_THRESHOLD,
    windows: Sequence[int] = DEFAULT_WINDOWS,
    route: str = "auto",
    counter: RealizationCounter | None = None,
) -> AclEstimate:
    """Members are the candidates with a Yes verdict (entries of ā always included)."""
    a_bar = tuple(a_bar)
    if candidates is None:
        candidates = range(min(windows))
    counter = counter or RealizationCounter(s)
    verdicts = {}
    for b in sorted(set(candidates) | set(a_bar)):
        verdicts[b] = in_acl(s, a_bar, b, threshold, windows, route, counter)
    members = frozenset(b for b, v in verdicts.items() if v.member == YES)
    unknown = frozenset(b for b, v in verdicts.items() if v.member == UNKNOWN)
    return AclEstimate(a_bar, members, verdicts, unknown)


# ---------------------------------------------------------------------------
# high algebraicity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchBounds:
    cbar_bound: int = 4
    search_window: int = 24
    max_tuple_len: int = 2
    witness_count: int = 4
    witness_window: int = 64
    threshold: int = DEFAULT_THRESHOLD
    windows: tuple[int, ...] = DEFAULT_WINDOWS
    route: str = "auto"

    def to_json(self) -> dict:
        return {
            "cbar_bound": self.cbar_bound,
            "search_window": self.search_window,
            "max_tuple_len": self.max_tuple_len,
            "witness_count": self.witness_count,
            "witness_window": self.witness_window,
            "threshold": self.threshold,
            "windows": list(self.windows),
            "route": self.route,
        }


def _tuples_off(avoid: set, window: int, max_len: int, min_len: int = 0):
    pool = [x for x in range(window) if x not in avoid]
    for k in range(min_len, max_len + 1):
        yield from itertools.permutations(pool, k)


@dataclass(frozen=True)
class AlgebraicPair:
    c_bar: tuple[int, ...]
    a_bar: tuple[int, ...]
    b: int
    verdict: AclVerdict

    def to_json(self) -> dict:
        return {"c_bar": list(self.c_bar), "a_bar": list(self.a_bar), "b": self.b, "verdict": self.verdict.to_json()}


def _search_pair(s, c_bar, bounds: SearchBounds, counter, with_params: bool, token=None) -> AlgebraicPair | None:
    c_bar = tuple(c_bar)
    avoid = set(c_bar)
    hi = max(c_bar, default=-1) + 1 + bounds.search_window
    for a_bar in _tuples_off(avoid, hi, bounds.max_tuple_len):
        _check(token)
        used = avoid | set(a_bar)
        for b in range(hi):
            if b in used:
                continue
            base = a_bar + c_bar if with_params else a_bar
            v = in_acl(s, base, b, bounds.threshold, bounds.windows, bounds.route, counter)
            if v.member == YES:
                return AlgebraicPair(c_bar, a_bar, b, v)
    return None


def search_form2(s, c_bar, bounds: SearchBounds = SearchBounds(), counter=None, token=None) -> AlgebraicPair | None:
    """Find ā, b off c̄ with ``b ∈ acl(ā c̄)``."""
    return _search_pair(s, c_bar, bounds, counter or RealizationCounter(s), True, token)


def search_form3(s, c_bar, bounds: SearchBounds = SearchBounds(), counter=None, token=None) -> AlgebraicPair | None:
    """Find ā, b off c̄ with ``b ∈ acl(ā)``."""
    return _search_pair(s, c_bar, bounds, counter or RealizationCounter(s), False, token)


@dataclass(frozen=True)
class DichotomyResult:
    case: int | None
    c_bar: tuple[int, ...]
    a_bar: tuple[int, ...] = ()
    b: int | None = None
    witnesses: tuple[tuple[int, ...], ...] = ()
    note: str = ""

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "c_bar": list(self.c_bar),
            "a_bar": list(self.a_bar),
            "b": self.b,
            "witnesses": [list(w) for w in self.witnesses],
            "note": self.note,
        }


def _disjoint_witnesses(s, a_bar, b, avoid: set, k: int, window: int, token=None) -> tuple | None:
    target = qftype(s, a_bar + (b,))
    used = set(avoid) | {b}
    pool = [x for x in range(window) if x not in used]
    found: list[tuple[int, ...]] = []

    # greedy over increasing tuples; disjointness only needs fresh points each time
    for cand in itertools.permutations(pool, len(a_bar)):
        _check(token)
        if used & set(cand):
            continue
        if qftype(s, cand + (b,)) == target:
            found.append(cand)
            used |= set(cand)
            if len(found) == k:
                return tuple(found)
    return None


def dichotomy_case(
    s: StructureOracle, c_bar: Sequence[int] = (), bounds: SearchBounds = SearchBounds(), counter=None, token=None
) -> DichotomyResult:
    """Case 1 (mutually algebraic pair) or Case 2 (b algebraic over ā, with many disjoint ā^i)."""
    c_bar = tuple(c_bar)
    counter = counter or RealizationCounter(s)
    avoid = set(c_bar)
    hi = max(c_bar, default=-1) + 1 + bounds.search_window
    pool = [x for x in range(hi) if x not in avoid]
    acl_kw = dict(threshold=bounds.threshold, windows=bounds.windows, route=bounds.route, counter=counter)
    for a in pool:
        _check(token)
        for b in pool:
            if a == b:
                continue
            if in_acl(s, (a,), b, **acl_kw).member == YES and in_acl(s, (b,), a, **acl_kw).member == YES:
                return DichotomyResult(1, c_bar, (a,), b, note="mutually algebraic pair")
    for a_bar in _tuples_off(avoid, hi, bounds.max_tuple_len):
        used = avoid | set(a_bar)
        for b in pool:
            if b in used:
                continue
            if in_acl(s, a_bar, b, **acl_kw).member != YES:
                continue
            wit = _disjoint_witnesses(s, a_bar, b, avoid, bounds.witness_count, bounds.witness_window, token)
            if wit is not None:
                return DichotomyResult(2, c_bar, a_bar, b, wit, note=f"{len(wit)} disjoint tuples share qftype(ā b)")
    return DichotomyResult(None, c_bar, note="no algebraic pair found within bounds")


@dataclass(frozen=True)
class HAVerdict:
    status: str
    case: int | None = None
    base_set: tuple[int, ...] | None = None
    certificate: tuple[AlgebraicPair, ...] = ()
    dichotomy: DichotomyResult | None = None
    tested: tuple[tuple[int, ...], ...] = ()
    caveats: tuple[str, ...] = ()
    bounds: SearchBounds = SearchBounds()

    @property
    def headline(self) -> str:
        if self.status == "highly_algebraic":
            return "not quasi-random"
        if self.status == "not_highly_algebraic":
            return "quasi-random (measure constructible)"
        return "undetermined"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "headline": self.headline,
            "case": self.case,
            "base_set": None if self.base_set is None else list(self.base_set),
            "certificate": [p.to_json() for p in self.certificate],
            "dichotomy": None if self.dichotomy is None else self.dichotomy.to_json(),
            "tested_tuples": [list(t) for t in self.tested],
            "caveats": list(self.caveats),
            "bounds": self.bounds.to_json(),
        }


ACL_EMPTY_CAVEAT = (
    "bounded search cannot tell a large finite acl of the empty tuple from an infinite one; "
    "verdicts assume the searched windows are representative"
)


def is_highly_algebraic(s: StructureOracle, bounds: SearchBounds = SearchBounds(), token=None) -> HAVerdict:
    if s.exact is not None and s.exact.base_set is not None and bounds.route != "count":
        B = s.exact.base_set
        tested = []
        hi = max(B, default=-1) + 1 + bounds.cbar_bound
        for a_bar in _tuples_off(set(), hi, bounds.max_tuple_len):
            extra = s.exact.acl(a_bar) - set(a_bar)
            if not extra <= B:
                raise AssertionError(f"closed form violates its base set at {a_bar}")
            tested.append(a_bar)
        return HAVerdict("not_highly_algebraic", base_set=tuple(sorted(B)), tested=tuple(tested), bounds=bounds,
                         caveats=(s.exact.description,))
    counter = RealizationCounter(s)
    cert = []
    for k in range(bounds.cbar_bound + 1):
        c_bar = tuple(range(k))
        pair = search_form3(s, c_bar, bounds, counter, token)
        if pair is None:
            return HAVerdict(
                "unknown",
                certificate=tuple(cert),
                caveats=(f"no algebraic pair off c̄={c_bar} within bounds", ACL_EMPTY_CAVEAT),
                bounds=bounds,
            )
        cert.append(pair)
    dic = dichotomy_case(s, (), bounds, counter, token)
    caveats = [ACL_EMPTY_CAVEAT]
    if any(p.verdict.heuristic for p in cert):
        caveats.append("some acl memberships rest on stabilized counts (heuristic)")
    if s.exact is None:
        caveats.append("qftype is used as the orbit surrogate; exact only for ultrahomogeneous structures")
    if dic.case is None:
        return HAVerdict("unknown", certificate=tuple(cert), dichotomy=dic, caveats=tuple(caveats), bounds=bounds)
    return HAVerdict(
        "highly_algebraic", case=dic.case, certificate=tuple(cert), dichotomy=dic, caveats=tuple(caveats), bounds=bounds
    )


def replay_certificate(s: StructureOracle, verdict: HAVerdict) -> bool:
    """Re-run every recorded acl check and the disjointness conditions."""
    b = verdict.bounds
    for p in verdict.certificate:
        if {p.b} & set(p.a_bar) or ({p.b} | set(p.a_bar)) & set(p.c_bar):
            return False
        if in_acl(s, p.a_bar, p.b, b.threshold, b.windows, b.route).member != YES:
            return False
    return True


# ---------------------------------------------------------------------------
# Neumann disjoiner
# ---------------------------------------------------------------------------


def neumann_disjoiner(
    w: StructureWindow,
    e_bar: Sequence[int],
    gamma: Iterable[int],
    delta: Iterable[int],
    bound: int = DEFAULT_WINDOW_BOUND,
    token: CancelToken | None = None,
) -> FinSupPermutation:
    """An automorphism h of `w` fixing ē pointwise with ``h(Γ) ∩ Δ = ∅``."""
    _check_bound(w, bound)
    e_bar = tuple(e_bar)
    gamma = sorted(set(gamma))
    delta = set(delta)
    if not gamma:
        return FinSupPermutation()
    if set(gamma) & set(e_bar):
        raise SearchExhausted("Γ meets the fixed tuple, which no stabilizer element can move")
    idx = _WindowIndex(w)
    col = idx.refine({e: i for i, e in enumerate(dict.fromkeys(e_bar))}, {})
    fixed = {e: e for e in e_bar}

    def place(i: int, chosen: dict) -> dict | None:
        if i == len(gamma):
            return _find_automorphism(idx, fixed | chosen, token)
        x = gamma[i]
        for y in range(w.n):
            _check(token)
            if y in delta or y in chosen.values() or y in fixed or col[y] != col[x]:
                continue
            if _find_automorphism(idx, fixed | chosen | {x: y}, token) is None:
                continue
            res = place(i + 1, chosen | {x: y})
            if res is not None:
                return res
        return None

    found = place(0, {})
    if found is None:
        raise SearchExhausted(f"no stabilizer element moves Γ off Δ inside a window of size {w.n}")
    return FinSupPermutation.from_mapping(found)


def neumann_disjoiner_oracle(s: StructureOracle, n: int, e_bar, gamma, delta, **kw) -> FinSupPermutation:
    """Disjoiner searched inside the window ``s↾n``; the result is an automorphism of that window."""
    return neumann_disjoiner(window_of(s, n), e_bar, gamma, delta, **kw)
