"""Plane waves in anisotropic viscoelastic media with Prony relaxation.

Modules
-------
linalg_core  principal matrix square roots, Hermitian parts, PSD tests
bernstein    matrix complete Bernstein and Stieltjes functions, Pick tests,
             measure recovery
medium       Prony relaxation tensors, Voigt notation, reference media
planewave    wave-number operator ``K_n``, modes, propagator, Zassenhaus split
energyflux   inhomogeneous waves and their mean energy flux
cpd          positive-definiteness checks on relaxation functions
cli          command-line front end (``viscowave``)
"""

from .errors import (
    AccuracyError,
    BranchCutError,
    ConditioningError,
    DomainError,
    RangeError,
    SolverError,
    ViscowaveError,
)
from .medium import (
    PronyTerm,
    RelaxationModel,
    isotropic_elastic,
    reference_medium_a,
    reference_medium_b,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "BranchCutError",
    "ConditioningError",
    "DomainError",
    "PronyTerm",
    "RangeError",
    "RelaxationModel",
    "SolverError",
    "ViscowaveError",
    "isotropic_elastic",
    "reference_medium_a",
    "reference_medium_b",
]
