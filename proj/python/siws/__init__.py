"""Discrete-time SIWS epidemics on layered population/resource networks."""

from ._core import (
    ConvergenceError,
    DimensionError,
    DomainError,
    FormatError,
    IoError,
    Params,
    Scenario,
    assemble_full,
    check_irreducible,
    classify,
    endemic_equilibrium,
    homogeneous_equilibrium,
    reproduction_number,
    s1_shifted,
    simulate,
    spectral_radius,
    step,
    validate,
)

__all__ = [
    "ConvergenceError",
    "DimensionError",
    "DomainError",
    "FormatError",
    "IoError",
    "Params",
    "Scenario",
    "assemble_full",
    "check_irreducible",
    "classify",
    "endemic_equilibrium",
    "homogeneous_equilibrium",
    "reproduction_number",
    "s1_shifted",
    "simulate",
    "spectral_radius",
    "step",
    "validate",
]
