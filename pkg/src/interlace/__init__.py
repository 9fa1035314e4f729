"""Numerical toolkit for interlacing families: real stable and mixed
characteristic polynomials, partition search and matrix paving."""

from .config import DEFAULT, Tolerances, load_config
from .errors import InterlaceError
from .mixedchar import (
    MixedCharResult,
    mixed_char,
    mixed_real_rooted,
    mixed_root_bound,
    rank_one_identity_check,
)
from .partition import Assignment, LiftedSystem, PartitionSearchResult, partition_search
from .paving import (
    PavingResult,
    choose_r,
    dilate,
    pave_general,
    pave_projection,
    pave_selfadjoint,
    verify_paving,
)
from .realstable import MultiPoly, PSDSystem, barrier, from_determinant, stability_falsifier
from .unipoly import RealPoly, is_nice_family, real_roots

__all__ = [
    "DEFAULT", "Tolerances", "load_config", "InterlaceError",
    "MixedCharResult", "mixed_char", "mixed_real_rooted", "mixed_root_bound",
    "rank_one_identity_check",
    "Assignment", "LiftedSystem", "PartitionSearchResult", "partition_search",
    "PavingResult", "choose_r", "dilate", "pave_general", "pave_projection",
    "pave_selfadjoint", "verify_paving",
    "MultiPoly", "PSDSystem", "barrier", "from_determinant", "stability_falsifier",
    "RealPoly", "is_nice_family", "real_roots",
]
