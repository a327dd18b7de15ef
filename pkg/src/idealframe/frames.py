"""Orbital frame, departure rotation, Euler-parameter rotation and g <-> lambda scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from idealframe.core import SingularStateError, as_vec3


@dataclass(frozen=True)
class OrbitalFrame:
    """Radial/transverse/normal unit vectors of a state in space axes."""

    u: np.ndarray
    v: np.ndarray
    n: np.ndarray
    r: float
    G: float


def orbital_frame(x, X) -> OrbitalFrame:
    """Build (u, v, n) with u = x/r, n = (x cross X)/G and v = n cross u.

    Raises:
        SingularStateError: for r = 0 or a rectilinear state.
    """
    x = as_vec3(x)
    X = as_vec3(X)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise SingularStateError("orbital frame undefined at r = 0")
    Gvec = np.cross(x, X)
    G = float(np.linalg.norm(Gvec))
    if G == 0.0:
        raise SingularStateError("rectilinear state: angular momentum is zero")
    u = x / r
    n = Gvec / G
    v = np.cross(n, u)
    return OrbitalFrame(u=u, v=v, n=n, r=r, G=G)


def departure_matrix(frame: OrbitalFrame) -> np.ndarray:
    """Matrix whose columns are u, v, n in space axes (orbital -> space)."""
    M = np.column_stack([frame.u, frame.v, frame.n])
    M.setflags(write=False)
    return M


def rotation_from_params(lam) -> np.ndarray:
    """Rotation matrix of the Euler parameters (lambda1..lambda4), lambda4 scalar.

    Entries follow the usual quaternion table; the input is used as is,
    without normalisation.
    """
    l1, l2, l3, l4 = (float(c) for c in lam)
    return np.array(
        [
            [1 - 2 * (l2 * l2 + l3 * l3), 2 * (l1 * l2 - l4 * l3), 2 * (l1 * l3 + l4 * l2)],
            [2 * (l1 * l2 + l4 * l3), 1 - 2 * (l1 * l1 + l3 * l3), 2 * (l2 * l3 - l4 * l1)],
            [2 * (l1 * l3 - l4 * l2), 2 * (l2 * l3 + l4 * l1), 1 - 2 * (l1 * l1 + l2 * l2)],
        ]
    )


def scale_params(lam, G: float) -> np.ndarray:
    """Scaled parameters g = sqrt(G) * lambda."""
    if not G > 0:
        raise SingularStateError(f"angular momentum must be positive, got {G}")
    return math.sqrt(G) * np.asarray(lam, dtype=float)


def unscale_params(g) -> tuple[np.ndarray, float]:
    """Return (lambda, G) with G = sum(g**2) and lambda = g / sqrt(G)."""
    g = np.asarray(g, dtype=float)
    G = float(g @ g)
    if not G > 0:
        raise SingularStateError("scaled parameters have zero norm")
    return g / math.sqrt(G), G


def ideal_axes_in_space(M0, params, theta: float):
    """Orbital-frame unit vectors (u_S, v_S, n_S) in space axes.

    ``params`` may be Euler parameters or scaled parameters; they are
    normalised before building the rotation.
    """
    lam, _ = unscale_params(params)
    R = np.asarray(M0, dtype=float) @ rotation_from_params(lam)
    c, s = math.cos(theta), math.sin(theta)
    u = R @ np.array([c, s, 0.0])
    v = R @ np.array([-s, c, 0.0])
    return u, v, R[:, 2].copy()


def space_axes(m, p1, p2, p3, p4, k, c, s):
    """Scalar kernel of :func:`ideal_axes_in_space` used inside the fields.

    ``m`` is the departure matrix flattened row-major, ``k`` the factor in
    front of the quadratic terms of the rotation table (2 for unit Euler
    parameters, 2/sum(g**2) for scaled ones). Returns nine floats:
    u_S, v_S, n_S.
    """
    n11 = 1.0 - k * (p2 * p2 + p3 * p3)
    n22 = 1.0 - k * (p1 * p1 + p3 * p3)
    n33 = 1.0 - k * (p1 * p1 + p2 * p2)
    n12 = k * (p1 * p2 - p4 * p3)
    n21 = k * (p1 * p2 + p4 * p3)
    n13 = k * (p1 * p3 + p4 * p2)
    n31 = k * (p1 * p3 - p4 * p2)
    n23 = k * (p2 * p3 - p4 * p1)
    n32 = k * (p2 * p3 + p4 * p1)
    # ideal-frame u and v in departure axes
    a1 = n11 * c + n12 * s
    a2 = n21 * c + n22 * s
    a3 = n31 * c + n32 * s
    b1 = n12 * c - n11 * s
    b2 = n22 * c - n21 * s
    b3 = n32 * c - n31 * s
    m11, m12, m13, m21, m22, m23, m31, m32, m33 = m
    return (
        m11 * a1 + m12 * a2 + m13 * a3,
        m21 * a1 + m22 * a2 + m23 * a3,
        m31 * a1 + m32 * a2 + m33 * a3,
        m11 * b1 + m12 * b2 + m13 * b3,
        m21 * b1 + m22 * b2 + m23 * b3,
        m31 * b1 + m32 * b2 + m33 * b3,
        m11 * n13 + m12 * n23 + m13 * n33,
        m21 * n13 + m22 * n23 + m23 * n33,
        m31 * n13 + m32 * n23 + m33 * n33,
    )
