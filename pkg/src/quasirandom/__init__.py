"""Quasi-random countable structures: algebraicity, quasi-invariant measures, separation trees."""

__version__ = "0.1.0"

from .perms import FinSupPermutation
from .signature import FreezeMap, ParamSignature, Signature, Symbol, freeze_signature
from .structures import (
    QfType,
    StructureOracle,
    StructureWindow,
    act_oracle,
    act_window,
    builtin,
    freeze_structure,
    qftype,
)
from .algebraicity import (
    HAVerdict,
    SearchBounds,
    acl_of,
    dichotomy_case,
    in_acl,
    is_highly_algebraic,
    stabilizer_orbits,
)
from .measures import (
    MixingMeasure,
    beta_assemble,
    erdos_renyi,
    fibered_cocycle,
    marked_pipeline,
    nu_default,
    quasi_invariance_test,
    quasi_sample,
)
from .separation import CompactSetSpec, PermTree, build_tree, verify_disjoint, verify_tree

__all__ = [name for name in dir() if not name.startswith("_")]
