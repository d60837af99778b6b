"""Dynamics, threshold analysis and fitting for a three-host rabies model with an environmental reservoir."""
from .io import __version__
from .model import (
    COMPARTMENTS, DEFAULT_PARAMS, PAPER_INITIAL_STATE, PARAM_NAMES, Params, StateVector,
    model_rhs, rhs,
)
from .ngm import CORRECTED, PAPER_LITERAL, next_generation_matrix, r0

__all__ = [
    "__version__", "COMPARTMENTS", "DEFAULT_PARAMS", "PAPER_INITIAL_STATE", "PARAM_NAMES",
    "Params", "StateVector", "model_rhs", "rhs", "CORRECTED", "PAPER_LITERAL",
    "next_generation_matrix", "r0",
]
