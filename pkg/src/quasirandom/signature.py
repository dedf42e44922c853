"""Languages, relationalization, and the parameter-freeze language.

Derived symbol names follow a fixed grammar so that signatures, reports and
certificates compare by value and serialize byte-for-byte:

* relationalized function ``f``  ->  ``R_f``
* frozen symbol for base relation ``R`` and freeze map ``f``  ->
  ``R[a0,a1,...]`` where each atom ``ai`` is ``z`` (the fresh atom) or the
  decimal index ``j`` of the parameter ``c_j``.

Examples: ``E[z,z]``, ``E[0,z]``, ``U[1]``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

Z = "z"
"""The fresh atom of a freeze map."""

Atom = Union[int, str]

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_FROZEN_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\[([z0-9,]*)\]$")


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int


@dataclass(frozen=True)
class Signature:
    """A finite first-order language.

    Names must be unique across relations and functions. Relation symbols
    have arity >= 1; function symbols may be constants (arity 0).
    """

    relations: tuple[Symbol, ...] = ()
    functions: tuple[Symbol, ...] = ()
    allow_nullary: bool = False

    def __post_init__(self):
        rels = tuple(s if isinstance(s, Symbol) else Symbol(*s) for s in self.relations)
        funs = tuple(s if isinstance(s, Symbol) else Symbol(*s) for s in self.functions)
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "functions", funs)
        names = [s.name for s in rels + funs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate symbol names in {names}")
        for s in rels:
            if s.arity < (0 if self.allow_nullary else 1):
                raise ValueError(f"relation {s.name} must have arity >= 1")
        for s in funs:
            if s.arity < 0:
                raise ValueError(f"function {s.name} has negative arity")

    @classmethod
    def relational(cls, *symbols: tuple[str, int]) -> "Signature":
        return cls(relations=tuple(Symbol(n, a) for n, a in symbols))

    @property
    def is_relational(self) -> bool:
        return not self.functions

    def arity(self, name: str) -> int:
        for s in self.relations:
            if s.name == name:
                return s.arity
        raise KeyError(f"unknown relation {name!r}")

    def relation_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.relations)

    def to_json(self) -> dict:
        return {
            "relations": [{"name": s.name, "arity": s.arity} for s in self.relations],
            "functions": [{"name": s.name, "arity": s.arity} for s in self.functions],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Signature":
        rels = tuple(Symbol(d["name"], int(d["arity"])) for d in data.get("relations", []))
        return cls(
            relations=rels,
            functions=tuple(Symbol(d["name"], int(d["arity"])) for d in data.get("functions", [])),
            allow_nullary=any(r.arity == 0 for r in rels),
        )


def relationalize(sig: Signature) -> Signature:
    """Replace every function symbol ``f`` of arity r by a relation ``R_f`` of arity r+1.

    The graph relation holds at ``(x_0, ..., x_{r-1}, y)`` iff ``f(x) = y``.
    Relations of `sig` are kept in order, followed by the new ones.
    """
    if sig.is_relational:
        return sig
    rels = list(sig.relations)
    for f in sig.functions:
        rels.append(Symbol(f"R_{f.name}", f.arity + 1))
    return Signature(relations=tuple(rels))


@dataclass(frozen=True)
class FreezeMap:
    """A map from the positions ``0..n-1`` of a relation to parameters or ``Z``.

    Parameters are stored as indices into the parameter tuple, never as
    element values, so one freeze map serves every parameter tuple of the
    same length.
    """

    assignment: tuple[Atom, ...]

    def __post_init__(self):
        for a in self.assignment:
            if a != Z and not (isinstance(a, int) and not isinstance(a, bool) and a >= 0):
                raise ValueError(f"bad freeze atom {a!r}")

    @property
    def arity_n(self) -> int:
        return len(self.assignment)

    @property
    def k(self) -> int:
        """Number of positions sent to the fresh atom."""
        return sum(1 for a in self.assignment if a == Z)

    @property
    def max_param(self) -> int:
        return max((a for a in self.assignment if a != Z), default=-1)

    def code(self) -> str:
        return ",".join(str(a) for a in self.assignment)

    def __str__(self):
        return f"[{self.code()}]"


def _parse_atoms(code: str) -> tuple[Atom, ...]:
    if code == "":
        return ()
    return tuple(Z if part == Z else int(part) for part in code.split(","))


def frozen_name(relation: str, f: FreezeMap) -> str:
    return f"{relation}[{f.code()}]"


def parse_frozen_name(name: str) -> tuple[str, FreezeMap]:
    m = _FROZEN_RE.match(name)
    if not m:
        raise ValueError(f"not a frozen symbol name: {name!r}")
    return m.group(1), FreezeMap(_parse_atoms(m.group(2)))


@dataclass(frozen=True)
class FrozenSymbol:
    base_relation: str
    freeze: FreezeMap

    @property
    def name(self) -> str:
        return frozen_name(self.base_relation, self.freeze)

    @property
    def arity(self) -> int:
        return self.freeze.k


@dataclass(frozen=True)
class ParamSignature:
    """The language obtained by freezing ``ell`` parameters of a relational language."""

    base: Signature
    param_arity_ell: int
    symbols: tuple[FrozenSymbol, ...]
    _by_name: dict = field(init=False, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {s.name: s for s in self.symbols})

    def as_signature(self) -> Signature:
        """Frozen symbols as a relational signature (nullary symbols included)."""
        return Signature(
            relations=tuple(Symbol(s.name, s.arity) for s in self.symbols),
            allow_nullary=True,
        )

    def lookup(self, name: str) -> FrozenSymbol:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"{name!r} is not a symbol of this frozen signature") from None

    def __len__(self):
        return len(self.symbols)


def freeze_signature(sig: Signature, ell: int) -> ParamSignature:
    """Enumerate one symbol ``R[f]`` per relation ``R`` and map ``f: n -> {0..ell-1} ∪ {z}``.

    The symbol count is ``sum((ell + 1) ** arity(R))``.
    """
    if not sig.is_relational:
        raise ValueError("freeze_signature needs a relational signature; relationalize first")
    if ell < 0:
        raise ValueError("ell must be non-negative")
    atoms: list[Atom] = [Z, *range(ell)]
    symbols = []
    for rel in sig.relations:
        for assignment in itertools.product(atoms, repeat=rel.arity):
            symbols.append(FrozenSymbol(rel.name, FreezeMap(tuple(assignment))))
    return ParamSignature(sig, ell, tuple(symbols))


def embed_tuple(a_bar: Sequence[int], f: FreezeMap, c_bar: Sequence[int]) -> tuple[int, ...]:
    """Fill the ``Z`` positions of `f` with `a_bar` (in order) and the rest with parameters."""
    a_bar = tuple(a_bar)
    c_bar = tuple(c_bar)
    if len(a_bar) != f.k:
        raise ValueError(f"expected {f.k} free entries, got {len(a_bar)}")
    if f.max_param >= len(c_bar):
        raise ValueError(f"freeze map {f} refers past parameter tuple of length {len(c_bar)}")
    params = set(c_bar)
    clash = [a for a in a_bar if a in params]
    if clash:
        raise ValueError(f"entries {clash} collide with parameters {c_bar}")
    free = iter(a_bar)
    return tuple(next(free) if atom == Z else c_bar[atom] for atom in f.assignment)


def unembed_tuple(full: Sequence[int], c_bar: Sequence[int]) -> tuple[tuple[int, ...], FreezeMap]:
    """Split a tuple into its non-parameter entries and the freeze map recording the rest."""
    where = {c: j for j, c in enumerate(c_bar)}
    if len(where) != len(c_bar):
        raise ValueError(f"parameter tuple {tuple(c_bar)} is not injective")
    a_bar = []
    assignment: list[Atom] = []
    for x in full:
        if x in where:
            assignment.append(where[x])
        else:
            assignment.append(Z)
            a_bar.append(x)
    return tuple(a_bar), FreezeMap(tuple(assignment))


def check_injective(t: Iterable[int], what: str = "tuple") -> tuple[int, ...]:
    t = tuple(t)
    if len(set(t)) != len(t):
        raise ValueError(f"{what} {t} is not injective")
    return t


def check_name(name: str) -> str:
    if not _NAME_RE.match(name):
        raise ValueError(f"bad symbol name {name!r}")
    return name
