"""Ideal-frame propagation of perturbed Keplerian motion.

Seven-dimensional scaled-Euler-parameter formulations, the classical
eight-dimensional variant and Cowell's method, with a DOP853 integrator
and a benchmark harness for the J2 + circular-moon test problem.
"""

from idealframe.core import (
    CartesianState,
    GravParams,
    NotBoundError,
    SingularStateError,
    UnitSystem,
    angular_momentum,
    eccentricity_vector,
    make_unit_system,
    orthogonality_defect,
)
from idealframe.forces import ForceConfig, MoonParams
from idealframe.formulations import FormulationKind, decode, encode
from idealframe.integrator import StepStats, Tolerances
from idealframe.propagator import Trajectory, propagate

__all__ = [
    "CartesianState",
    "ForceConfig",
    "FormulationKind",
    "GravParams",
    "MoonParams",
    "NotBoundError",
    "SingularStateError",
    "StepStats",
    "Tolerances",
    "Trajectory",
    "UnitSystem",
    "angular_momentum",
    "decode",
    "eccentricity_vector",
    "encode",
    "make_unit_system",
    "orthogonality_defect",
    "propagate",
]

__version__ = "0.1.0"
