"""Finite-support permutations of the natural numbers.

Composition follows ``(g * h)(x) = g(h(x))``. The cycle grammar accepted by
`FinSupPermutation.parse` is a product of cycles of non-negative integers,
e.g. ``"(0 1)(2 5 3)"``; ``"()"`` or the empty string is the identity.
Commas may separate cycle entries.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

_CYCLE_RE = re.compile(r"\(([^()]*)\)")


@dataclass(frozen=True)
class FinSupPermutation:
    """A bijection of ℕ that moves only finitely many points.

    Stored as the sorted tuple of ``(x, g(x))`` for moved points ``x``.
    """

    moved: tuple[tuple[int, int], ...] = ()
    _map: dict = field(init=False, compare=False, repr=False, hash=False)

    def __post_init__(self):
        m = {}
        for x, y in self.moved:
            if x < 0 or y < 0:
                raise ValueError("permutations act on non-negative integers")
            if x in m:
                raise ValueError(f"point {x} mapped twice")
            if x != y:
                m[x] = y
        if set(m) != set(m.values()):
            raise ValueError("mapping is not a bijection of its support")
        object.__setattr__(self, "moved", tuple(sorted(m.items())))
        object.__setattr__(self, "_map", m)

    @classmethod
    def identity(cls) -> "FinSupPermutation":
        return cls()

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> "FinSupPermutation":
        return cls(tuple(mapping.items()))

    @classmethod
    def from_window_perm(cls, gamma: Sequence[int]) -> "FinSupPermutation":
        """Extend a permutation of ``{0..len(gamma)-1}`` by the identity."""
        gamma = tuple(gamma)
        if sorted(gamma) != list(range(len(gamma))):
            raise ValueError(f"{gamma} is not a permutation of range({len(gamma)})")
        return cls(tuple((i, v) for i, v in enumerate(gamma) if i != v))

    @classmethod
    def transposition(cls, a: int, b: int) -> "FinSupPermutation":
        return cls(((a, b), (b, a)))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]]) -> "FinSupPermutation":
        g = cls()
        for cyc in cycles:
            cyc = list(cyc)
            if len(set(cyc)) != len(cyc):
                raise ValueError(f"cycle {cyc} repeats a point")
            if len(cyc) < 2:
                continue
            c = cls(tuple((cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))))
            g = g * c
        return g

    @classmethod
    def parse(cls, text: str) -> "FinSupPermutation":
        text = text.strip()
        if not text:
            return cls()
        leftover = _CYCLE_RE.sub("", text).strip()
        if leftover:
            raise ValueError(f"cannot parse permutation {text!r}")
        cycles = []
        for body in _CYCLE_RE.findall(text):
            parts = [p for p in re.split(r"[\s,]+", body.strip()) if p]
            cycles.append([int(p) for p in parts])
        return cls.from_cycles(cycles)

    def __call__(self, x: int) -> int:
        return self._map.get(x, x)

    def apply(self, t: Iterable[int]) -> tuple[int, ...]:
        m = self._map
        return tuple(m.get(x, x) for x in t)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self._map)

    @property
    def is_identity(self) -> bool:
        return not self._map

    def __mul__(self, other: "FinSupPermutation") -> "FinSupPermutation":
        pts = self.support | other.support
        return FinSupPermutation(tuple((x, self(other(x))) for x in pts))

    def compose(self, other: "FinSupPermutation") -> "FinSupPermutation":
        return self * other

    def inverse(self) -> "FinSupPermutation":
        return FinSupPermutation(tuple((y, x) for x, y in self.moved))

    def restrict(self, n: int) -> tuple[int, ...]:
        """Values on ``0..n-1``; fails if the prefix is not a permutation of itself."""
        vals = tuple(self(i) for i in range(n))
        if any(v >= n for v in vals):
            raise ValueError(f"permutation does not preserve range({n})")
        return vals

    def preserves(self, n: int) -> bool:
        return all(v < n for k, v in self.moved if k < n)

    def extends(self, gamma: Sequence[int]) -> bool:
        """True iff ``self`` agrees with `gamma` on ``0..len(gamma)-1``."""
        return all(self(i) == v for i, v in enumerate(gamma))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = set()
        out = []
        for x, _ in self.moved:
            if x in seen:
                continue
            cyc = [x]
            seen.add(x)
            y = self(x)
            while y != x:
                cyc.append(y)
                seen.add(y)
                y = self(y)
            out.append(tuple(cyc))
        return out

    def __str__(self):
        cs = self.cycles()
        if not cs:
            return "()"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cs)


def compose(g: FinSupPermutation, h: FinSupPermutation) -> FinSupPermutation:
    return g * h


def invert(g: FinSupPermutation) -> FinSupPermutation:
    return g.inverse()


def from_window_perm(gamma: Sequence[int]) -> FinSupPermutation:
    return FinSupPermutation.from_window_perm(gamma)


def extends(g: FinSupPermutation, gamma: Sequence[int]) -> bool:
    return g.extends(gamma)
