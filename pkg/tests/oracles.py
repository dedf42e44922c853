"""Independent brute-force reference implementations used to derive frozen test values."""

import itertools
from fractions import Fraction


def brute_type(rel, names_arities, t):
    """Equality pattern plus every atomic fact over entries of t, computed directly."""
    eq = tuple(t.index(x) for x in t)
    facts = []
    for name, k in names_arities:
        for idx in itertools.product(range(len(t)), repeat=k):
            if rel(name, tuple(t[i] for i in idx)):
                facts.append((name, idx))
    return eq, frozenset(facts)


def brute_count(rel, names_arities, a_bar, b, n):
    target = brute_type(rel, names_arities, tuple(a_bar) + (b,))
    return sum(1 for x in range(n) if brute_type(rel, names_arities, tuple(a_bar) + (x,)) == target)


def brute_orbits(facts, n, a_bar=()):
    """Orbits of the pointwise stabilizer by listing all n! permutations."""
    fs = {(r, t) for r, ts in facts.items() for t in ts}
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for p in itertools.permutations(range(n)):
        if any(p[a] != a for a in a_bar):
            continue
        if {(r, tuple(p[i] for i in t)) for r, t in fs} == fs:
            for x in range(n):
                parent[find(x)] = find(p[x])
    groups = {}
    for x in range(n):
        groups.setdefault(find(x), []).append(x)
    return sorted(tuple(g) for g in groups.values())


def geometric_weight(c_bar):
    w = Fraction(1)
    for c in c_bar:
        w *= Fraction(1, 2 ** (c + 1))
    return w


def matching_partner(x):
    return x ^ 1


def matching_rel(name, t):
    return name == "R" and t[0] != t[1] and matching_partner(t[0]) == t[1]


def partial_matchings(L):
    """All partial matchings of range(L) as sets of ordered pairs (both directions)."""
    def rec(v, used):
        if v == L:
            yield frozenset()
            return
        if v in used:
            yield from rec(v + 1, used)
            return
        yield from rec(v + 1, used | {v})
        for u in range(v + 1, L):
            if u not in used:
                for rest in rec(v + 1, used | {v, u}):
                    yield rest | {(v, u), (u, v)}
    yield from rec(0, frozenset())


def random_window(rng, sig, n, p=0.3):
    """A window with independent random facts on every tuple (nullary symbols included)."""
    from quasirandom.structures import StructureWindow

    facts = {}
    for sym in sig.relations:
        facts[sym.name] = [t for t in itertools.product(range(n), repeat=sym.arity) if rng.random() < p]
    return StructureWindow.from_facts(sig, n, facts)


def random_perm(rng, n, support):
    """A permutation of range(n) moving at most `support` points."""
    from quasirandom.perms import FinSupPermutation

    pts = list(rng.choice(n, size=min(support, n), replace=False))
    img = list(pts)
    rng.shuffle(img)
    return FinSupPermutation.from_mapping({int(a): int(b) for a, b in zip(pts, img)})
