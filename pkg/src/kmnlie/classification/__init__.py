"""Classification database and equivalence transformations."""

from ..equation import EquationSpec, FSpec
from .database import CaseDatabase, CaseRecord, load_database, lookup_case
from .equivalence import (
    FAMILIES, EquivTransform, apply_equiv, canonicalize, compose_equiv,
    identity, invert_equiv, push_solution, recognize_f, reduce_g_class,
)

__all__ = ["EquationSpec", "FSpec", "CaseDatabase", "CaseRecord",
           "load_database", "lookup_case", "EquivTransform", "FAMILIES",
           "apply_equiv", "push_solution", "compose_equiv", "invert_equiv",
           "canonicalize", "reduce_g_class", "recognize_f", "identity"]
