"""Regenerative composition structures: Lévy tables, decrement matrices, exact laws and samplers."""

from .decrement import (
    DecrementMatrix,
    decrement_from_family,
    decrement_from_phi,
    detect_symmetry,
    stick_breaking_decrement,
    two_param_decrement,
    verify_decrement_recursion,
)
from .law import Composition, CompositionLaw, enumerate_law, eppf, green_matrix
from .phi_model import PRESETS, BetaDensity, Degenerate, DiscreteMeasure, PhiTable, TwoParam, build_phi_table
from .sampler import RngStream, sample_by_growth, sample_composition, sample_compositions
from .scalar import EXACT, FLOAT

__all__ = [
    "EXACT",
    "FLOAT",
    "PRESETS",
    "BetaDensity",
    "Composition",
    "CompositionLaw",
    "DecrementMatrix",
    "Degenerate",
    "DiscreteMeasure",
    "PhiTable",
    "RngStream",
    "TwoParam",
    "build_phi_table",
    "decrement_from_family",
    "decrement_from_phi",
    "detect_symmetry",
    "enumerate_law",
    "eppf",
    "green_matrix",
    "sample_by_growth",
    "sample_composition",
    "sample_compositions",
    "stick_breaking_decrement",
    "two_param_decrement",
    "verify_decrement_recursion",
]
