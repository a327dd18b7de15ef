"""Vector helpers, state containers and the internal unit system."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class SingularStateError(ArithmeticError):
    """A state sits on a singularity of the formulation (r = 0, G = 0, ...)."""


class NotBoundError(ValueError):
    """The initial conditions do not describe an elliptic orbit."""


def as_vec3(v) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite vector component in {a!r}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CartesianState:
    """Epoch, inertial position ``x`` and velocity ``X``."""

    t: float
    x: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", as_vec3(self.x))
        object.__setattr__(self, "X", as_vec3(self.X))
        if not np.linalg.norm(self.x) > 0.0:
            raise SingularStateError("state at the origin (r = 0)")

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.x))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.X])


@dataclass(frozen=True)
class GravParams:
    """Central body: gravitational parameter, J2 and equatorial radius."""

    GM: float
    J2: float = 0.0
    Re: float = 1.0

    def __post_init__(self):
        if not self.GM > 0:
            raise ValueError(f"GM must be positive, got {self.GM}")
        if not self.Re > 0:
            raise ValueError(f"Re must be positive, got {self.Re}")
        if not math.isfinite(self.J2):
            raise ValueError("J2 must be finite")


@dataclass(frozen=True)
class UnitSystem:
    """Internal length and time units in which GM becomes 1.

    ``UL`` and ``UT`` are expressed in the source units of the caller.
    """

    UL: float
    UT: float
    GM: float = field(default=1.0)

    def __post_init__(self):
        if not (self.UL > 0 and self.UT > 0):
            raise ValueError("unit lengths must be positive")

    @property
    def UV(self) -> float:
        return self.UL / self.UT

    @property
    def GM_internal(self) -> float:
        return self.GM * self.UT**2 / self.UL**3

    def state_to_internal(self, s: CartesianState) -> CartesianState:
        return CartesianState(s.t / self.UT, s.x / self.UL, s.X / self.UV)

    def state_to_source(self, s: CartesianState) -> CartesianState:
        return CartesianState(s.t * self.UT, s.x * self.UL, s.X * self.UV)


def make_unit_system(x0, X0, GM: float) -> UnitSystem:
    """Build the unit system with UL = GM/(-X.X + 2GM/r), UT = UL*sqrt(UL/GM).

    For an elliptic orbit UL is the semi-major axis.

    Raises:
        NotBoundError: if the orbital energy is not negative.
    """
    x0 = as_vec3(x0)
    X0 = as_vec3(X0)
    r = float(np.linalg.norm(x0))
    if r == 0.0:
        raise SingularStateError("zero radius")
    denom = -float(X0 @ X0) + 2.0 * GM / r
    if not denom > 0.0:
        raise NotBoundError(f"not a bound orbit (2GM/r - X.X = {denom:g})")
    UL = GM / denom
    UT = UL * math.sqrt(UL / GM)
    return UnitSystem(UL=UL, UT=UT, GM=GM)


def angular_momentum(x, X) -> np.ndarray:
    """Angular momentum per unit mass, ``x cross X``."""
    return np.cross(np.asarray(x, dtype=float), np.asarray(X, dtype=float))


def eccentricity_vector(x, X, GM: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise SingularStateError("eccentricity vector undefined at r = 0")
    return np.cross(X, np.cross(x, X)) / GM - x / r


def orthogonality_defect(x, X, GM: float) -> float:
    """Return G.e, which vanishes identically for a consistent state."""
    return float(angular_momentum(x, X) @ eccentricity_vector(x, X, GM))
