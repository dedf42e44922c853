"""Quasi-invariant random structures built from a mixing measure and invariant samplers.

A point of the fibered space is a pair ``(c̄, N)``: an injective parameter
tuple and a structure in the frozen language on the reindexed complement of
c̄. Sampling draws ``c̄ ~ ν`` and then ``N`` from an invariant law; the
assembly map `beta_assemble` turns the pair into a structure in the
original language.

Because the frozen laws are transported along any permutation sending one
anchor to another, the only non-invariant ingredient is ν. The fibered
cocycle is therefore the exact rational ``ν(g c̄) / ν(c̄)``.

Randomness: sample ``i`` of a run with root seed ``S`` uses
``numpy.random.default_rng([S, i])``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import stats

from .perms import FinSupPermutation
from .signature import (
    ParamSignature,
    Signature,
    check_injective,
    embed_tuple,
    freeze_signature,
    parse_frozen_name,
)
from .structures import (
    ComplementIndex,
    StructureWindow,
    act_window,
    fibered_relabel,
    rado_edge,
)

# ---------------------------------------------------------------------------
# mixing measure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixingMeasure:
    """A fully supported measure on injective ``ell``-tuples, known up to normalization."""

    ell: int
    weight: Callable[[tuple], Fraction] = field(compare=False)
    draw: Callable[[np.random.Generator], tuple] = field(compare=False)
    name: str = "custom"

    def sample(self, rng: np.random.Generator) -> tuple[int, ...]:
        return self.draw(rng)

    def to_json(self) -> dict:
        return {"name": self.name, "ell": self.ell}


def _geometric_weight(c_bar: tuple) -> Fraction:
    return Fraction(1, 2 ** sum(c + 1 for c in c_bar))


def nu_default(ell: int) -> MixingMeasure:
    """Weight ``∏ 2^-(c_i + 1)`` on injective tuples; collisions are redrawn."""
    if ell < 0:
        raise ValueError("ell must be non-negative")

    def draw(rng: np.random.Generator) -> tuple[int, ...]:
        while True:
            c = tuple(int(x) - 1 for x in rng.geometric(0.5, size=ell))
            if len(set(c)) == ell:
                return c

    return MixingMeasure(ell, _geometric_weight, draw, name="geometric")


def _check_params(nu: MixingMeasure, c_bar) -> tuple[int, ...]:
    c_bar = check_injective(c_bar, "parameter tuple")
    if len(c_bar) != nu.ell:
        raise ValueError(f"expected a tuple of length {nu.ell}, got {c_bar}")
    if any(c < 0 for c in c_bar):
        raise ValueError(f"negative parameter in {c_bar}")
    return c_bar


def nu_ratio(nu: MixingMeasure, c1: Sequence[int], c2: Sequence[int]) -> Fraction:
    c1, c2 = _check_params(nu, c1), _check_params(nu, c2)
    return nu.weight(c1) / nu.weight(c2)


# ---------------------------------------------------------------------------
# array-backed windows
# ---------------------------------------------------------------------------


@dataclass
class ArrayWindow:
    """A window stored as one boolean array per relation (shape ``(n,)*arity``)."""

    sig: Signature
    n: int
    arrays: dict

    def eval(self, relation: str, t: Sequence[int]) -> bool:
        t = tuple(t)
        if len(t) != self.sig.arity(relation):
            raise ValueError(f"{relation} has arity {self.sig.arity(relation)}, got {t}")
        if any(not (0 <= x < self.n) for x in t):
            raise ValueError(f"tuple {t} outside window of size {self.n}")
        return bool(self.arrays[relation][t])

    def to_window(self) -> StructureWindow:
        facts = {}
        for sym in self.sig.relations:
            arr = self.arrays[sym.name]
            if sym.arity == 0:
                facts[sym.name] = [()] if bool(arr) else []
            else:
                facts[sym.name] = [tuple(int(v) for v in row) for row in np.argwhere(arr)]
        return StructureWindow.from_facts(self.sig, self.n, facts)

    @classmethod
    def from_window(cls, w: StructureWindow) -> "ArrayWindow":
        arrays = {}
        for sym in w.sig.relations:
            arr = np.zeros((w.n,) * sym.arity, dtype=bool)
            for t in w.fact_set(sym.name):
                arr[t] = True
            arrays[sym.name] = arr
        return cls(w.sig, w.n, arrays)


def as_window(w) -> StructureWindow:
    return w.to_window() if isinstance(w, ArrayWindow) else w


def as_arrays(w) -> ArrayWindow:
    return w if isinstance(w, ArrayWindow) else ArrayWindow.from_window(w)


# ---------------------------------------------------------------------------
# invariant samplers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolLaw:
    """I.i.d. law of one symbol.

    ``symmetric`` (binary only): one coin per unordered pair.
    ``irreflexive``: tuples with a repeated entry are false.
    ``mirror``: copy another symbol's value at the reversed tuple.
    """

    p: Fraction = Fraction(1, 2)
    symmetric: bool = False
    irreflexive: bool = False
    mirror: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", Fraction(self.p))
        if not (0 <= self.p <= 1):
            raise ValueError(f"probability {self.p} outside [0, 1]")

    def to_json(self) -> dict:
        return {"p": str(self.p), "symmetric": self.symmetric, "irreflexive": self.irreflexive, "mirror": self.mirror}


def _repeated_mask(n: int, arity: int) -> np.ndarray:
    mask = np.zeros((n,) * arity, dtype=bool)
    grids = np.indices((n,) * arity)
    for i, j in itertools.combinations(range(arity), 2):
        mask |= grids[i] == grids[j]
    return mask


@dataclass(frozen=True)
class InvariantSampler:
    """An exchangeable law given by independent per-tuple coins.

    Every law here is invariant under all permutations of the domain, since
    each coin depends only on the equality pattern of its tuple.
    """

    sig: Signature
    laws: tuple[tuple[str, SymbolLaw], ...]
    anchor: tuple[int, ...] = ()

    def __post_init__(self):
        laws = dict(self.laws)
        names = set(self.sig.relation_names())
        if set(laws) != names:
            raise ValueError(f"laws cover {sorted(laws)} but the signature has {sorted(names)}")
        for name, law in laws.items():
            if law.symmetric and self.sig.arity(name) != 2:
                raise ValueError(f"symmetric law needs a binary symbol, {name} is not")
            if law.mirror is not None:
                if law.mirror not in laws or laws[law.mirror].mirror is not None:
                    raise ValueError(f"{name} mirrors {law.mirror}, which must be a sampled symbol")
                if self.sig.arity(law.mirror) != self.sig.arity(name):
                    raise ValueError(f"{name} and {law.mirror} differ in arity")
        object.__setattr__(self, "laws", tuple(sorted(laws.items())))
        check_injective(self.anchor, "anchor")

    def law(self, name: str) -> SymbolLaw:
        return dict(self.laws)[name]

    def sample_arrays(self, rng: np.random.Generator, n: int) -> ArrayWindow:
        arrays = {}
        laws = dict(self.laws)
        # canonical order: symbols in signature order, mirrors filled afterwards
        for sym in self.sig.relations:
            law = laws[sym.name]
            if law.mirror is not None:
                continue
            shape = (n,) * sym.arity
            p = float(law.p)
            if law.symmetric:
                coins = rng.random(shape) < p
                upper = np.triu(coins, 1)
                arr = upper | upper.T
                if not law.irreflexive:
                    arr |= np.diag(np.diag(coins))
            else:
                arr = rng.random(shape) < p if sym.arity else np.bool_(rng.random() < p)
                if law.irreflexive and sym.arity >= 2:
                    arr &= ~_repeated_mask(n, sym.arity)
            arrays[sym.name] = arr
        for sym in self.sig.relations:
            law = laws[sym.name]
            if law.mirror is not None:
                src = arrays[law.mirror]
                arrays[sym.name] = np.transpose(src).copy() if sym.arity >= 2 else np.copy(src)
        return ArrayWindow(self.sig, n, arrays)

    def sample_window(self, rng, n: int) -> StructureWindow:
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        return self.sample_arrays(rng, n).to_window()

    def element(self, k: int) -> int:
        """The original domain element carried by frozen index k."""
        return ComplementIndex(self.anchor).element(k)

    def rank(self, x: int) -> int:
        return ComplementIndex(self.anchor).rank(x)

    def law_descriptor(self) -> dict:
        return {"anchor": list(self.anchor), "laws": {k: v.to_json() for k, v in self.laws}}


def iid_relation_sampler(sig: Signature, probs: Mapping[str, object], symmetric: Iterable[str] = (), irreflexive: Iterable[str] = ()) -> InvariantSampler:
    sym, irr = set(symmetric), set(irreflexive)
    laws = {name: SymbolLaw(Fraction(p), name in sym, name in irr) for name, p in probs.items()}
    return InvariantSampler(sig, tuple(laws.items()))


def erdos_renyi(p=Fraction(1, 2), name: str = "E") -> InvariantSampler:
    sig = Signature.relational((name, 2))
    return InvariantSampler(sig, ((name, SymbolLaw(Fraction(p), True, True)),))


def transport_sampler(base: InvariantSampler, b_bar: Sequence[int], c_bar: Sequence[int]) -> InvariantSampler:
    """The law for anchor c̄, obtained from the law at anchor b̄.

    The relabelling is the order-preserving bijection of the complements. In
    reindexed coordinates it is the identity, so the coin laws carry over
    unchanged and only the anchor moves.
    """
    b_bar = check_injective(b_bar, "anchor")
    c_bar = check_injective(c_bar, "anchor")
    if len(b_bar) != len(c_bar):
        raise ValueError(f"anchors of different length: {b_bar} vs {c_bar}")
    if tuple(base.anchor) != b_bar:
        raise ValueError(f"sampler is anchored at {base.anchor}, not {b_bar}")
    return InvariantSampler(base.sig, base.laws, c_bar)


def transport_map(b_bar: Sequence[int], c_bar: Sequence[int], x: int) -> int:
    """Image of x under the order-preserving bijection ``ℕ∖b̄ -> ℕ∖c̄``."""
    return ComplementIndex(tuple(c_bar)).element(ComplementIndex(tuple(b_bar)).rank(x))


def marked_pipeline(F: Sequence[int] = (0,), p=Fraction(1, 2)) -> tuple[InvariantSampler, ParamSignature]:
    """Frozen-language law for the graph with a unary predicate on F, anchored at sorted F.

    Edges among free points and between free points and parameters are
    fair coins; U holds exactly at the parameters; edges among parameters
    copy the marked structure.
    """
    F = tuple(sorted(set(F)))
    base = Signature.relational(("E", 2), ("U", 1))
    psig = freeze_signature(base, len(F))
    laws = {}
    for s in psig.symbols:
        f = s.freeze.assignment
        if s.base_relation == "U":
            laws[s.name] = SymbolLaw(0 if f[0] == "z" else 1)
        elif f == ("z", "z"):
            laws[s.name] = SymbolLaw(Fraction(p), symmetric=True, irreflexive=True)
        elif f[0] == "z":
            laws[s.name] = SymbolLaw(Fraction(p))
        elif f[1] == "z":
            laws[s.name] = SymbolLaw(mirror=f"E[z,{f[0]}]")
        else:
            laws[s.name] = SymbolLaw(1 if rado_edge(F[f[0]], F[f[1]]) else 0)
    return InvariantSampler(psig.as_signature(), tuple(laws.items()), F), psig


# ---------------------------------------------------------------------------
# fibered points and assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberedSample:
    """A point ``(c̄, N)``; `frozen` lives on the reindexed complement of c̄."""

    c_bar: tuple[int, ...]
    frozen: object
    rejections: int = 0

    @property
    def reindex(self) -> ComplementIndex:
        return ComplementIndex(self.c_bar)

    def to_json(self) -> dict:
        return {
            "c_bar": list(self.c_bar),
            "frozen": as_window(self.frozen).to_json(),
            "rejections": self.rejections,
            "reindex": self.reindex.to_json(),
        }


def _frozen_size_needed(c_bar: tuple, n: int) -> int:
    return n - sum(1 for c in c_bar if c < n)


def _beta_arrays(c_bar: tuple, frozen: ArrayWindow, psig: ParamSignature, n: int) -> ArrayWindow:
    if len(c_bar) != psig.param_arity_ell:
        raise ValueError(f"parameter tuple {c_bar} does not match the frozen language arity {psig.param_arity_ell}")
    if c_bar and max(c_bar) >= n:
        raise ValueError(f"assembled window of size {n} must contain every parameter of {c_bar}")
    need = _frozen_size_needed(c_bar, n)
    if frozen.n < need:
        raise ValueError(f"frozen window of size {frozen.n} cannot answer queries at index {need - 1}")
    others = np.array([x for x in range(n) if x not in c_bar], dtype=np.intp)
    out = {sym.name: np.zeros((n,) * sym.arity, dtype=bool) for sym in psig.base.relations}
    for s in psig.symbols:
        arr = frozen.arrays[s.name]
        if s.arity:
            arr = arr[(slice(0, need),) * s.arity]
        index = [others if a == "z" else np.array([c_bar[a]], dtype=np.intp) for a in s.freeze.assignment]
        shape = [need if a == "z" else 1 for a in s.freeze.assignment]
        target = out[s.base_relation]
        if not index:
            target[()] = bool(arr)
            continue
        target[np.ix_(*index)] = np.reshape(arr, shape)
    return ArrayWindow(psig.base, n, out)


def beta_assemble(c_bar: Sequence[int], frozen, psig: ParamSignature, n: int) -> StructureWindow:
    """Assemble ``(c̄, N)`` into a window of the original language.

    ``R(ā)`` holds iff ``N ⊨ R[f](ē)`` where ``(ē, f) = unembed(ā, c̄)`` and
    ē is reindexed onto the complement.
    """
    c_bar = check_injective(c_bar, "parameter tuple")
    return _beta_arrays(c_bar, as_arrays(frozen), psig, n).to_window()


def beta_assemble_pointwise(c_bar: Sequence[int], frozen: StructureWindow, psig: ParamSignature, n: int) -> StructureWindow:
    """Fact-by-fact assembly, used to cross-check the array version."""
    c_bar = check_injective(c_bar, "parameter tuple")
    if c_bar and max(c_bar) >= n:
        raise ValueError(f"assembled window of size {n} must contain every parameter of {c_bar}")
    idx = ComplementIndex(c_bar)
    facts: dict = {sym.name: [] for sym in psig.base.relations}
    for name, ts in frozen.facts:
        s = psig.lookup(name)
        for t in ts:
            full = embed_tuple(tuple(idx.element(k) for k in t), s.freeze, c_bar)
            if all(x < n for x in full):
                facts[s.base_relation].append(full)
    if frozen.n < _frozen_size_needed(c_bar, n):
        raise ValueError(f"frozen window of size {frozen.n} too small for assembled size {n}")
    return StructureWindow.from_facts(psig.base, n, facts)


def act_fibered(g: FinSupPermutation, sample: FiberedSample) -> FiberedSample:
    """``g·(c̄, N) = (g c̄, σ_* N)`` with σ the induced relabelling of reindexed domains."""
    sigma = fibered_relabel(g, sample.c_bar)
    frozen = act_window(sigma, as_window(sample.frozen))
    return FiberedSample(g.apply(sample.c_bar), frozen, sample.rejections)


def quasi_sample(
    nu: MixingMeasure, base: InvariantSampler, b_bar: Sequence[int], n: int, seed, max_rejections: int = 10_000
) -> tuple[FiberedSample, StructureWindow]:
    """Draw ``c̄ ~ ν`` (tail beyond the window redrawn) and a frozen window from the transported law."""
    fs, arrays = _quasi_sample_arrays(nu, base, tuple(b_bar), n, _rng(seed), max_rejections)
    return FiberedSample(fs.c_bar, as_window(fs.frozen), fs.rejections), arrays.to_window()


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _quasi_sample_arrays(nu, base, b_bar, n, rng, max_rejections=10_000):
    if nu.ell != len(b_bar):
        raise ValueError(f"ν draws {nu.ell}-tuples but the anchor has length {len(b_bar)}")
    if n < nu.ell:
        raise ValueError(f"window of size {n} cannot hold {nu.ell} parameters")
    plain = nu.ell == 0 and not _is_frozen_named(base)
    psig = None if plain else freeze_signature(_base_signature(base), nu.ell)
    rejections = 0
    while True:
        c_bar = nu.sample(rng)
        if not c_bar or max(c_bar) < n:
            break
        rejections += 1
        if rejections > max_rejections:
            raise RuntimeError(f"more than {max_rejections} parameter draws fell outside the window")
    law = transport_sampler(base, b_bar, c_bar)
    frozen = law.sample_arrays(rng, n - len(c_bar))
    if plain:
        # with no parameters the assembly map is the identity
        return FiberedSample(c_bar, frozen, rejections), frozen
    return FiberedSample(c_bar, frozen, rejections), _beta_arrays(c_bar, frozen, psig, n)


def _is_frozen_named(sampler: InvariantSampler) -> bool:
    return all("[" in name for name in sampler.sig.relation_names())


def _base_signature(sampler: InvariantSampler) -> Signature:
    """Recover the original language from frozen symbol names like ``E[z,0]``."""
    arities: dict = {}
    for sym in sampler.sig.relations:
        try:
            base, f = parse_frozen_name(sym.name)
        except ValueError:
            arities.setdefault(sym.name, sym.arity)
            continue
        arities.setdefault(base, f.arity_n)
    return Signature.relational(*arities.items())


def sample_stream(
    nu: MixingMeasure, base: InvariantSampler, b_bar: Sequence[int], n: int, count: int, seed: int
) -> Iterator[tuple[FiberedSample, ArrayWindow]]:
    """``count`` independent draws; draw i uses the generator seeded by ``[seed, i]``."""
    b_bar = tuple(b_bar)
    for i in range(count):
        yield _quasi_sample_arrays(nu, base, b_bar, n, np.random.default_rng([seed, i]))


# ---------------------------------------------------------------------------
# cocycles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CocycleValue:
    ratio: Fraction
    log2_ratio: Fraction | float
    log2_exact: bool
    dependency_support: frozenset

    def to_json(self) -> dict:
        return {
            "ratio": f"{self.ratio.numerator}/{self.ratio.denominator}",
            "numerator": str(self.ratio.numerator),
            "denominator": str(self.ratio.denominator),
            "log2_ratio": str(self.log2_ratio) if self.log2_exact else float(self.log2_ratio),
            "log2_exact": self.log2_exact,
            "dependency_support": sorted(self.dependency_support),
        }


def _log2(q: Fraction) -> tuple[Fraction | float, bool]:
    num, den = q.numerator, q.denominator
    if num & (num - 1) == 0 and den & (den - 1) == 0:
        return Fraction(num.bit_length() - den.bit_length()), True
    return math.log2(num) - math.log2(den), False


def fibered_cocycle(nu: MixingMeasure, g: FinSupPermutation, c_bar: Sequence[int]) -> CocycleValue:
    """``ν(g c̄) / ν(c̄)``: the derivative of the translated measure on the fiber index."""
    c_bar = _check_params(nu, c_bar)
    ratio = nu_ratio(nu, g.apply(c_bar), c_bar)
    log2, exact = _log2(ratio)
    return CocycleValue(ratio, log2, exact, frozenset(c for c in c_bar if g(c) != c))


@dataclass(frozen=True)
class LocalityReport:
    agree_on_params: bool
    value1: Fraction
    value2: Fraction

    @property
    def passed(self) -> bool:
        return not self.agree_on_params or self.value1 == self.value2

    def __bool__(self):
        return self.passed


def cocycle_locality_check(nu: MixingMeasure, g1: FinSupPermutation, g2: FinSupPermutation, c_bar) -> LocalityReport:
    """Permutations agreeing on the parameters must give equal cocycle values."""
    c_bar = _check_params(nu, c_bar)
    agree = all(g1(c) == g2(c) for c in c_bar)
    return LocalityReport(agree, fibered_cocycle(nu, g1, c_bar).ratio, fibered_cocycle(nu, g2, c_bar).ratio)


# ---------------------------------------------------------------------------
# events and statistical tests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    """A cylinder predicate on ``(c̄, window)``.

    kinds: ``param`` (``c̄[index] == value``), ``fact`` (an atomic fact of the
    assembled window), ``all`` (conjunction of sub-events).
    """

    name: str
    kind: str
    index: int = 0
    value: int = 0
    relation: str = ""
    tuple: tuple[int, ...] = ()
    parts: tuple["Event", ...] = ()
    expected_ratio: Fraction | None = None

    def holds(self, c_bar: tuple, window, g: FinSupPermutation | None = None) -> bool:
        """Evaluate on y, or on g·y when `g` is given."""
        if self.kind == "param":
            c = c_bar[self.index]
            return (g(c) if g is not None else c) == self.value
        if self.kind == "fact":
            t = self.tuple if g is None else g.inverse().apply(self.tuple)
            return window.eval(self.relation, t)
        if self.kind == "all":
            return all(p.holds(c_bar, window, g) for p in self.parts)
        raise ValueError(f"unknown event kind {self.kind!r}")

    def max_point(self) -> int:
        if self.kind == "fact":
            return max(self.tuple, default=-1)
        if self.kind == "all":
            return max((p.max_point() for p in self.parts), default=-1)
        return -1

    @classmethod
    def from_json(cls, data: Mapping) -> "Event":
        kind = data["kind"]
        ratio = data.get("expected_ratio")
        ratio = None if ratio is None else Fraction(str(ratio))
        name = data.get("name", kind)
        if kind == "param":
            return cls(name, kind, index=int(data["index"]), value=int(data["value"]), expected_ratio=ratio)
        if kind == "fact":
            return cls(name, kind, relation=data["relation"], tuple=tuple(int(x) for x in data["tuple"]), expected_ratio=ratio)
        if kind == "all":
            return cls(name, kind, parts=tuple(cls.from_json(p) for p in data["events"]), expected_ratio=ratio)
        raise ValueError(f"unknown event kind {kind!r}")

    def to_json(self) -> dict:
        out: dict = {"name": self.name, "kind": self.kind}
        if self.kind == "param":
            out |= {"index": self.index, "value": self.value}
        elif self.kind == "fact":
            out |= {"relation": self.relation, "tuple": list(self.tuple)}
        else:
            out["events"] = [p.to_json() for p in self.parts]
        if self.expected_ratio is not None:
            out["expected_ratio"] = str(self.expected_ratio)
        return out


class _Moments:
    """Running mean and variance (Welford)."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, x: float):
        self.n += 1
        d = x - self.mean
        self.mean += d / self.n
        self.m2 += d * (x - self.mean)

    def z(self) -> float:
        if self.n < 2:
            return 0.0
        var = self.m2 / (self.n - 1)
        if var == 0:
            return 0.0 if self.mean == 0 else math.inf
        return self.mean / math.sqrt(var / self.n)


def _z_crit(alpha: float, k: int) -> float:
    return float(stats.norm.isf(alpha / (2 * max(k, 1))))


def quasi_invariance_test(
    samples: Iterable[tuple[FiberedSample, object]],
    g: FinSupPermutation,
    events: Sequence[Event],
    nu: MixingMeasure,
    alpha: float = 0.001,
    min_samples: int | None = None,
) -> dict:
    """Check ``λ(g⁻¹E) = E_λ[1_E · w]`` with the exact weight ``w = ν(g⁻¹c̄)/ν(c̄)``.

    Per event the report holds the plain frequencies of E and g⁻¹E, the
    weighted frequency, and the z-score of the paired differences
    ``1_E(g·y) - w(y)·1_E(y)``. Events carrying ``expected_ratio`` r also get
    a z-score for ``1_E(y) - r·1_E(g·y)``. Critical values are
    Bonferroni-corrected over all statistics at level `alpha`.
    """
    ginv = g.inverse()
    events = list(events)
    stats_w = [_Moments() for _ in events]
    stats_r = [_Moments() if e.expected_ratio is not None else None for e in events]
    hits = [0] * len(events)
    hits_g = [0] * len(events)
    weighted = [Fraction(0)] * len(events)
    weight_cache: dict = {}
    N = 0
    for fs, window in samples:
        N += 1
        c = fs.c_bar
        w = weight_cache.get(c)
        if w is None:
            w = weight_cache[c] = fibered_cocycle(nu, ginv, c).ratio
        for i, ev in enumerate(events):
            e = ev.holds(c, window)
            eg = ev.holds(c, window, g)
            hits[i] += e
            hits_g[i] += eg
            if e:
                weighted[i] += w
            stats_w[i].add(float(eg) - float(w) * e)
            if stats_r[i] is not None:
                stats_r[i].add(float(e) - float(ev.expected_ratio) * eg)
    need = min_samples if min_samples is not None else math.ceil(1 / alpha)
    if N < need:
        raise ValueError(f"{N} samples are too few for alpha={alpha}; need at least {need}")
    n_stats = sum(1 for e in events) + sum(1 for s in stats_r if s is not None)
    zc = _z_crit(alpha, n_stats)
    rows = []
    all_pass = True
    for i, ev in enumerate(events):
        vacuous = hits[i] == 0 and hits_g[i] == 0
        z_w = stats_w[i].z()
        row = {
            "event": ev.to_json(),
            "count": hits[i],
            "count_translated": hits_g[i],
            "frequency": hits[i] / N,
            "frequency_translated": hits_g[i] / N,
            "weighted_frequency": float(weighted[i]) / N,
            "z_weighted": z_w,
            "vacuous": vacuous,
        }
        ok = vacuous or abs(z_w) <= zc
        if stats_r[i] is not None:
            z_r = stats_r[i].z()
            row["expected_ratio"] = str(ev.expected_ratio)
            row["observed_ratio"] = hits[i] / hits_g[i] if hits_g[i] else None
            row["z_ratio"] = z_r
            ok = ok and (vacuous or abs(z_r) <= zc)
        row["pass"] = ok
        all_pass &= ok
        rows.append(row)
    return {
        "samples": N,
        "g": str(g),
        "alpha": alpha,
        "z_critical": zc,
        "events": rows,
        "pass": all_pass,
    }


def cell_codes(windows: Iterable, relation: str, m: int, arity: int) -> np.ndarray:
    """Encode each window's facts of `relation` on ``{0..m-1}`` as an integer cell index."""
    cells = list(itertools.product(range(m), repeat=arity))
    weights = {t: 1 << i for i, t in enumerate(cells)}
    out = []
    for w in windows:
        out.append(sum(weights[t] for t in cells if w.eval(relation, t)))
    return np.array(out, dtype=np.int64)


def invariance_chi_square(
    sampler: InvariantSampler, g: FinSupPermutation, m: int, count: int, seed: int, relation: str | None = None
) -> dict:
    """Two-sample chi-square: cells of raw draws against cells of independently drawn, g-translated draws."""
    if not g.preserves(m):
        raise ValueError(f"{g} does not preserve a window of size {m}")
    relation = relation or sampler.sig.relations[0].name
    arity = sampler.sig.arity(relation)
    rng_a = np.random.default_rng([seed, 0])
    rng_b = np.random.default_rng([seed, 1])
    ginv_vals = [g.inverse()(i) for i in range(m)]
    raw, moved = [], []
    for _ in range(count):
        raw.append(sampler.sample_arrays(rng_a, m).arrays[relation])
        moved.append(_permute_array(sampler.sample_arrays(rng_b, m).arrays[relation], ginv_vals))
    codes_a = _codes_from_arrays(raw)
    codes_b = _codes_from_arrays(moved)
    keys = np.union1d(codes_a, codes_b)
    table = np.vstack([
        np.array([np.sum(codes_a == k) for k in keys]),
        np.array([np.sum(codes_b == k) for k in keys]),
    ])
    chi2, p, dof, _ = stats.chi2_contingency(table)
    return {"chi2": float(chi2), "p_value": float(p), "dof": int(dof), "cells": int(len(keys)), "samples": count, "g": str(g)}


def _permute_array(arr: np.ndarray, ginv_vals: list[int]) -> np.ndarray:
    """Facts of g_*M: ``out[t] = arr[g⁻¹ t]``."""
    idx = np.array(ginv_vals, dtype=np.intp)
    return arr[np.ix_(*([idx] * arr.ndim))] if arr.ndim else arr


def _codes_from_arrays(arrs: list[np.ndarray]) -> np.ndarray:
    flat = np.array([a.ravel() for a in arrs], dtype=np.int64)
    powers = 1 << np.arange(flat.shape[1], dtype=np.int64)
    return flat @ powers
