"""Closed-form two-body motion through Kepler's equation.

Used as an independent oracle: it shares no code with the ideal-frame
formulations.
"""

from __future__ import annotations

import math

import numpy as np


def solve_kepler(M: float, e: float, tol: float = 1e-15, max_iter: int = 50) -> float:
    """Eccentric anomaly E with E - e sin E = M, for 0 <= e < 1."""
    if not 0.0 <= e < 1.0:
        raise ValueError(f"elliptic eccentricity required, got {e}")
    M = math.remainder(M, 2.0 * math.pi)
    E = M + e * math.sin(M) if e < 0.8 else math.copysign(math.pi, M) if M else 0.0
    for _ in range(max_iter):
        f = E - e * math.sin(E) - M
        dE = f / (1.0 - e * math.cos(E))
        E -= dE
        if abs(dE) <= tol * max(1.0, abs(E)):
            return E
    raise RuntimeError("Kepler's equation did not converge")


def kepler_propagate(x0, X0, dt: float, GM: float):
    """Position and velocity after ``dt`` on the osculating ellipse of (x0, X0)."""
    x0 = np.asarray(x0, dtype=float)
    X0 = np.asarray(X0, dtype=float)
    r0 = np.linalg.norm(x0)
    h = np.cross(x0, X0)
    evec = np.cross(X0, h) / GM - x0 / r0
    e = np.linalg.norm(evec)
    a = 1.0 / (2.0 / r0 - X0 @ X0 / GM)
    if a <= 0:
        raise ValueError("orbit is not elliptic")
    n = math.sqrt(GM / a**3)
    # perifocal basis; for a circle take the initial radius as reference
    P = evec / e if e > 1e-14 else x0 / r0
    W = h / np.linalg.norm(h)
    Qv = np.cross(W, P)
    # initial eccentric anomaly from the perifocal coordinates
    xp, yp = x0 @ P, x0 @ Qv
    b = a * math.sqrt(1.0 - e * e)
    E0 = math.atan2(yp / b, xp / a + e)
    M = E0 - e * math.sin(E0) + n * dt
    E = solve_kepler(M, e)
    cE, sE = math.cos(E), math.sin(E)
    r = a * (1.0 - e * cE)
    pos = a * (cE - e) * P + b * sE * Qv
    vel = (math.sqrt(GM * a) / r) * (-sE * P + math.sqrt(1.0 - e * e) * cE * Qv)
    return pos, vel
