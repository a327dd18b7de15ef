"""J2 and circular-moon disturbing accelerations, and their ideal-frame projection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from idealframe.core import GravParams, SingularStateError, UnitSystem, as_vec3


@dataclass(frozen=True)
class MoonParams:
    """Perturbing body on a circular orbit about the central body.

    The orbit plane is given by its inclination and ascending node (radians)
    with respect to the space frame; the body sits at argument of latitude
    ``phase0 + nm * t``.
    """

    GMm: float
    am: float
    nm: float
    inclination: float = 0.0
    raan: float = 0.0
    phase0: float = 0.0
    _basis: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.GMm > 0 and self.am > 0 and self.nm > 0):
            raise ValueError("moon GMm, am and nm must be positive")
        ci, si = math.cos(self.inclination), math.sin(self.inclination)
        co, so = math.cos(self.raan), math.sin(self.raan)
        object.__setattr__(self, "_basis", (co, so, 0.0, -so * ci, co * ci, si))

    @property
    def normal(self) -> np.ndarray:
        p = np.array(self._basis[:3])
        q = np.array(self._basis[3:])
        return np.cross(p, q)

    def position(self, t: float):
        ph = self.phase0 + self.nm * t
        c, s = math.cos(ph), math.sin(ph)
        p1, p2, p3, q1, q2, q3 = self._basis
        a = self.am
        return a * (c * p1 + s * q1), a * (c * p2 + s * q2), a * (c * p3 + s * q3)


@dataclass(frozen=True)
class ForceConfig:
    """Which perturbations are active, plus their parameters."""

    grav: GravParams
    enable_j2: bool = False
    enable_moon: bool = False
    moon: Optional[MoonParams] = None

    def __post_init__(self):
        if self.enable_moon and self.moon is None:
            raise ValueError("enable_moon requires moon parameters")

    @property
    def GM(self) -> float:
        return self.grav.GM

    @property
    def is_unperturbed(self) -> bool:
        return not (self.enable_j2 or self.enable_moon)

    def accel(self, t, x, y, z):
        """Total disturbing acceleration as a float triple (hot path)."""
        ax = ay = az = 0.0
        if self.enable_j2:
            g = self.grav
            ax, ay, az = _j2(x, y, z, g.GM * g.J2 * g.Re * g.Re)
        if self.enable_moon:
            m = self.moon
            bx, by, bz = _third_body(x, y, z, *m.position(t), m.GMm)
            ax += bx
            ay += by
            az += bz
        return ax, ay, az

    def to_internal(self, units: UnitSystem) -> "ForceConfig":
        """Rescale every parameter to the internal units of ``units``."""
        mu_scale = units.UT**2 / units.UL**3
        grav = GravParams(GM=self.grav.GM * mu_scale, J2=self.grav.J2, Re=self.grav.Re / units.UL)
        moon = self.moon
        if moon is not None:
            moon = replace(moon, GMm=moon.GMm * mu_scale, am=moon.am / units.UL, nm=moon.nm * units.UT)
        return replace(self, grav=grav, moon=moon)


class PerturbationSample(NamedTuple):
    P_space: np.ndarray
    Pu: float
    Pv: float
    Pn: float


def _j2(x, y, z, k):
    # k = GM * J2 * Re**2
    r2 = x * x + y * y + z * z
    if r2 == 0.0:
        raise SingularStateError("J2 acceleration singular at r = 0")
    r = math.sqrt(r2)
    f = -1.5 * k / (r2 * r2 * r)
    w = 5.0 * z * z / r2
    return f * x * (1.0 - w), f * y * (1.0 - w), f * z * (3.0 - w)


def _third_body(x, y, z, xm, ym, zm, GMm):
    dx, dy, dz = xm - x, ym - y, zm - z
    d2 = dx * dx + dy * dy + dz * dz
    s2 = xm * xm + ym * ym + zm * zm
    if d2 == 0.0:
        raise SingularStateError("particle collides with the perturbing body")
    if s2 == 0.0:
        raise SingularStateError("perturbing body at the origin")
    d3 = d2 * math.sqrt(d2)
    s3 = s2 * math.sqrt(s2)
    return (
        GMm * (dx / d3 - xm / s3),
        GMm * (dy / d3 - ym / s3),
        GMm * (dz / d3 - zm / s3),
    )


def j2_potential(x, grav: GravParams) -> float:
    """Disturbing J2 force function U; the acceleration is +grad U."""
    x = as_vec3(x)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise SingularStateError("J2 potential singular at r = 0")
    return -grav.GM * grav.J2 * grav.Re**2 / (2 * r**3) * (3 * (x[2] / r) ** 2 - 1)


def j2_accel(x, grav: GravParams) -> np.ndarray:
    x = as_vec3(x)
    return np.array(_j2(*x, grav.GM * grav.J2 * grav.Re**2))


def moon_position(t: float, m: MoonParams) -> np.ndarray:
    return np.array(m.position(t))


def third_body_accel(x, xm, GMm: float) -> np.ndarray:
    """Differential attraction of a point mass at ``xm`` relative to the primary."""
    return np.array(_third_body(*as_vec3(x), *as_vec3(xm), GMm))


def total_perturbation(t: float, x, X, cfg: ForceConfig) -> np.ndarray:
    """Sum of the enabled disturbing accelerations in space axes.

    None of the current contributors depends on the velocity; ``X`` is part
    of the signature for velocity-dependent models.
    """
    return np.array(cfg.accel(t, *as_vec3(x)))


def project_perturbation(P_space, axes, r: float, G: float) -> PerturbationSample:
    """Non-dimensional components of (r**3/G**2) P along u_S, v_S, n_S."""
    P = as_vec3(P_space)
    u, v, n = axes
    f = r**3 / G**2
    return PerturbationSample(P, f * float(P @ u), f * float(P @ v), f * float(P @ n))
