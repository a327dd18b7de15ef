"""Derivative fields of every formulation and the Cartesian encode/decode maps.

State vectors are flat float arrays. Component order per kind (the
independent variable is kept outside the vector)::

    COWELL       s = t   y = [x, y, z, vx, vy, vz]
    IDEAL8_QQ    s = th  y = [l1, l2, l3, l4, G, q, Q, t]
    IDEAL8_CS    s = th  y = [l1, l2, l3, l4, G, C, S, t]
    IDEAL7_QQ    s = th  y = [g1, g2, g3, g4, q, Q, t]
    IDEAL7_CS    s = th  y = [g1, g2, g3, g4, C, S, t]
    IDEAL7_QQ_T  s = t   y = [g1, g2, g3, g4, r, rdot, th]
    IDEAL7_CS_T  s = t   y = [g1, g2, g3, g4, C, S, th]

``th`` is the ideal anomaly (angle from the ideal direction u* to the
radius vector), ``q = 1/r``, ``Q = -rdot/G`` and (C, S) are Deprit's ideal
elements. This order is a stability contract for files written by the CLI.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from idealframe.core import CartesianState, SingularStateError, as_vec3
from idealframe.forces import ForceConfig
from idealframe.frames import departure_matrix, orbital_frame, space_axes


class FormulationKind(enum.Enum):
    COWELL = "cowell"
    IDEAL8_QQ = "ideal8_qq"
    IDEAL8_CS = "ideal8_cs"
    IDEAL7_QQ = "ideal7_qq"
    IDEAL7_CS = "ideal7_cs"
    IDEAL7_QQ_T = "ideal7_qq_t"
    IDEAL7_CS_T = "ideal7_cs_t"

    @classmethod
    def parse(cls, text: str) -> "FormulationKind":
        key = text.strip()
        try:
            return cls[key.upper()]
        except KeyError:
            pass
        try:
            return cls(key.lower())
        except ValueError:
            names = ", ".join(k.name for k in cls)
            raise ValueError(f"unknown formulation {text!r} (expected one of {names})") from None

    @property
    def regularized(self) -> bool:
        """True when the independent variable is the ideal anomaly."""
        return self in _REGULARIZED

    @property
    def dimension(self) -> int:
        return len(COMPONENTS[self])


_REGULARIZED = {
    FormulationKind.IDEAL8_QQ,
    FormulationKind.IDEAL8_CS,
    FormulationKind.IDEAL7_QQ,
    FormulationKind.IDEAL7_CS,
}

COMPONENTS = {
    FormulationKind.COWELL: ("x", "y", "z", "vx", "vy", "vz"),
    FormulationKind.IDEAL8_QQ: ("l1", "l2", "l3", "l4", "G", "q", "Q", "t"),
    FormulationKind.IDEAL8_CS: ("l1", "l2", "l3", "l4", "G", "C", "S", "t"),
    FormulationKind.IDEAL7_QQ: ("g1", "g2", "g3", "g4", "q", "Q", "t"),
    FormulationKind.IDEAL7_CS: ("g1", "g2", "g3", "g4", "C", "S", "t"),
    FormulationKind.IDEAL7_QQ_T: ("g1", "g2", "g3", "g4", "r", "rdot", "th"),
    FormulationKind.IDEAL7_CS_T: ("g1", "g2", "g3", "g4", "C", "S", "th"),
}


@dataclass(frozen=True)
class FormulationState:
    """An integration vector together with its independent variable."""

    kind: FormulationKind
    s: float
    y: np.ndarray
    GM: float

    @property
    def t(self) -> float:
        return self.s if not self.kind.regularized else float(self.y[-1])

    @property
    def theta(self) -> float:
        if self.kind is FormulationKind.COWELL:
            raise AttributeError("Cowell states carry no ideal anomaly")
        return self.s if self.kind.regularized else float(self.y[-1])


def _flat(M0):
    return tuple(float(v) for v in np.asarray(M0, dtype=float).reshape(9))


def _force_projection(cfg, m, t, p1, p2, p3, p4, k, r, c, s):
    """Return (P.u, P.v, P.n) of the disturbing acceleration, dimensional.

    The force models in use depend on position only, so the velocity
    rdot*u + (G/r)*v is never formed here.
    """
    ux, uy, uz, vx, vy, vz, nx, ny, nz = space_axes(m, p1, p2, p3, p4, k, c, s)
    Px, Py, Pz = cfg.accel(t, r * ux, r * uy, r * uz)
    return (
        Px * ux + Py * uy + Pz * uz,
        Px * vx + Py * vy + Pz * vz,
        Px * nx + Py * ny + Pz * nz,
    )


def _g_rates(g1, g2, g3, g4, a, b, c, s):
    # common bracket of the scaled-parameter equations:
    # a multiplies g_i, b multiplies the n-component coupling
    return (
        a * g1 + b * (g4 * c - g3 * s),
        a * g2 + b * (g4 * s + g3 * c),
        a * g3 + b * (g1 * s - g2 * c),
        a * g4 - b * (g1 * c + g2 * s),
    )


# --- Cowell -----------------------------------------------------------------


def cowell_field(t, y, cfg: ForceConfig):
    x, yy, z, vx, vy, vz = y.tolist()
    r2 = x * x + yy * yy + z * z
    if r2 == 0.0:
        raise SingularStateError("Cowell field singular at r = 0")
    k = -cfg.GM / (r2 * math.sqrt(r2))
    if cfg.is_unperturbed:
        px = py = pz = 0.0
    else:
        px, py, pz = cfg.accel(t, x, yy, z)
    return np.array([vx, vy, vz, k * x + px, k * yy + py, k * z + pz])


# --- regularised, seven dimensional -------------------------------------------


def _ideal7_qq(th, y, cfg, m):
    g1, g2, g3, g4, q, Q, t = y.tolist()
    if not q > 0.0:
        raise SingularStateError(f"inverse radius q = {q} is not positive")
    G = g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4
    if not G > 0.0:
        raise SingularStateError("scaled parameters have zero norm")
    c, s = math.cos(th), math.sin(th)
    if cfg.is_unperturbed:
        Pu = Pv = Pn = 0.0
    else:
        r = 1.0 / q
        fu, fv, fn = _force_projection(cfg, m, t, g1, g2, g3, g4, 2.0 / G, r, c, s)
        f = r * r * r / (G * G)
        Pu, Pv, Pn = f * fu, f * fv, f * fn
    d1, d2, d3, d4 = _g_rates(g1, g2, g3, g4, 0.5 * Pv, 0.5 * Pn, c, s)
    return np.array(
        [d1, d2, d3, d4, Q, cfg.GM / (G * G) - q * (1.0 + Pu) - Q * Pv, 1.0 / (q * q * G)]
    )


def _ideal7_cs(th, y, cfg, m):
    g1, g2, g3, g4, C, S, t = y.tolist()
    G = g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4
    if not G > 0.0:
        raise SingularStateError("scaled parameters have zero norm")
    c, s = math.cos(th), math.sin(th)
    Gp = cfg.GM / G
    Gr = C * c + S * s + Gp
    if not Gr > 0.0:
        raise SingularStateError(f"G/r = {Gr} is not positive")
    dt = G / (Gr * Gr)
    if cfg.is_unperturbed:
        return np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, dt])
    r = G / Gr
    fu, fv, fn = _force_projection(cfg, m, t, g1, g2, g3, g4, 2.0 / G, r, c, s)
    f = r * r * r / (G * G)
    Pu, Pv, Pn = f * fu, f * fv, f * fn
    d1, d2, d3, d4 = _g_rates(g1, g2, g3, g4, 0.5 * Pv, 0.5 * Pn, c, s)
    w = (Gr + Gp) * Pv
    return np.array([d1, d2, d3, d4, w * c + Gr * Pu * s, w * s - Gr * Pu * c, dt])


# --- regularised, eight dimensional -------------------------------------------


def _ideal8_qq(th, y, cfg, m):
    l1, l2, l3, l4, G, q, Q, t = y.tolist()
    if not q > 0.0:
        raise SingularStateError(f"inverse radius q = {q} is not positive")
    if not G > 0.0:
        raise SingularStateError(f"angular momentum G = {G} is not positive")
    c, s = math.cos(th), math.sin(th)
    if cfg.is_unperturbed:
        Pu = Pv = Pn = 0.0
    else:
        r = 1.0 / q
        fu, fv, fn = _force_projection(cfg, m, t, l1, l2, l3, l4, 2.0, r, c, s)
        f = r * r * r / (G * G)
        Pu, Pv, Pn = f * fu, f * fv, f * fn
    d1, d2, d3, d4 = _g_rates(l1, l2, l3, l4, 0.0, 0.5 * Pn, c, s)
    return np.array(
        [d1, d2, d3, d4, G * Pv, Q, cfg.GM / (G * G) - q * (1.0 + Pu) - Q * Pv, 1.0 / (q * q * G)]
    )


def _ideal8_cs(th, y, cfg, m):
    l1, l2, l3, l4, G, C, S, t = y.tolist()
    if not G > 0.0:
        raise SingularStateError(f"angular momentum G = {G} is not positive")
    c, s = math.cos(th), math.sin(th)
    Gp = cfg.GM / G
    Gr = C * c + S * s + Gp
    if not Gr > 0.0:
        raise SingularStateError(f"G/r = {Gr} is not positive")
    dt = G / (Gr * Gr)
    if cfg.is_unperturbed:
        return np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, dt])
    r = G / Gr
    fu, fv, fn = _force_projection(cfg, m, t, l1, l2, l3, l4, 2.0, r, c, s)
    f = r * r * r / (G * G)
    Pu, Pv, Pn = f * fu, f * fv, f * fn
    d1, d2, d3, d4 = _g_rates(l1, l2, l3, l4, 0.0, 0.5 * Pn, c, s)
    w = (Gr + Gp) * Pv
    return np.array([d1, d2, d3, d4, G * Pv, w * c + Gr * Pu * s, w * s - Gr * Pu * c, dt])


# --- physical time, seven dimensional -------------------------------------------


def _ideal7_qq_t(t, y, cfg, m):
    g1, g2, g3, g4, r, rdot, th = y.tolist()
    if not r > 0.0:
        raise SingularStateError(f"radius r = {r} is not positive")
    G = g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4
    if not G > 0.0:
        raise SingularStateError("scaled parameters have zero norm")
    c, s = math.cos(th), math.sin(th)
    if cfg.is_unperturbed:
        fu = fv = fn = 0.0
    else:
        fu, fv, fn = _force_projection(cfg, m, t, g1, g2, g3, g4, 2.0 / G, r, c, s)
    h = 0.5 * r / G
    d1, d2, d3, d4 = _g_rates(g1, g2, g3, g4, h * fv, h * fn, c, s)
    Gr = G / r
    return np.array([d1, d2, d3, d4, rdot, (Gr - cfg.GM / G) * Gr / r + fu, Gr / r])


def _ideal7_cs_t(t, y, cfg, m):
    g1, g2, g3, g4, C, S, th = y.tolist()
    G = g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4
    if not G > 0.0:
        raise SingularStateError("scaled parameters have zero norm")
    c, s = math.cos(th), math.sin(th)
    Gp = cfg.GM / G
    Gr = C * c + S * s + Gp
    if not Gr > 0.0:
        raise SingularStateError(f"G/r = {Gr} is not positive")
    r = G / Gr
    if cfg.is_unperturbed:
        return np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, Gr / r])
    fu, fv, fn = _force_projection(cfg, m, t, g1, g2, g3, g4, 2.0 / G, r, c, s)
    h = 0.5 * r / G
    d1, d2, d3, d4 = _g_rates(g1, g2, g3, g4, h * fv, h * fn, c, s)
    w = (1.0 + r * Gp / G) * fv
    return np.array([d1, d2, d3, d4, w * c + fu * s, w * s - fu * c, Gr / r])


_KERNELS = {
    FormulationKind.IDEAL8_QQ: _ideal8_qq,
    FormulationKind.IDEAL8_CS: _ideal8_cs,
    FormulationKind.IDEAL7_QQ: _ideal7_qq,
    FormulationKind.IDEAL7_CS: _ideal7_cs,
    FormulationKind.IDEAL7_QQ_T: _ideal7_qq_t,
    FormulationKind.IDEAL7_CS_T: _ideal7_cs_t,
}


def ideal7_qq_field(theta, y, cfg: ForceConfig, M0):
    """Regularised 7D field in (g, q, Q, t) with the ideal anomaly as time."""
    return _ideal7_qq(theta, np.asarray(y, dtype=float), cfg, _flat(M0))


def ideal7_cs_field(theta, y, cfg: ForceConfig, M0):
    """Regularised 7D field in (g, C, S, t).

    Raises:
        SingularStateError: when the osculating conic gives G/r <= 0.
    """
    return _ideal7_cs(theta, np.asarray(y, dtype=float), cfg, _flat(M0))


def ideal8_qq_field(theta, y, cfg: ForceConfig, M0):
    return _ideal8_qq(theta, np.asarray(y, dtype=float), cfg, _flat(M0))


def ideal8_cs_field(theta, y, cfg: ForceConfig, M0):
    return _ideal8_cs(theta, np.asarray(y, dtype=float), cfg, _flat(M0))


def ideal7_time_field(t, y, cfg: ForceConfig, M0, flavor: str = "cs"):
    """Physical-time 7D field; ``flavor`` is ``"qq"`` for (r, rdot) or ``"cs"``."""
    kernel = {"qq": _ideal7_qq_t, "cs": _ideal7_cs_t}[flavor]
    return kernel(t, np.asarray(y, dtype=float), cfg, _flat(M0))


def make_field(kind: FormulationKind, cfg: ForceConfig, M0=None):
    """Bind a formulation's field to its force model: ``f(s, y) -> dy/ds``."""
    if kind is FormulationKind.COWELL:
        return partial(cowell_field, cfg=cfg)
    return partial(_KERNELS[kind], cfg=cfg, m=_flat(M0))


# --- ideal elements <-> radial motion ------------------------------------------


def cs_from_r(G, p, r, rdot, theta):
    """Deprit's ideal elements (C, S) from radius, radial speed and anomaly."""
    if not (r > 0 and G > 0):
        raise SingularStateError("cs_from_r needs r > 0 and G > 0")
    c, s = math.cos(theta), math.sin(theta)
    w = G / r - G / p
    return w * c + rdot * s, w * s - rdot * c


def g_r_from_cs(C, S, theta, G, p):
    """Inverse of :func:`cs_from_r`: returns (G/r, rdot)."""
    c, s = math.cos(theta), math.sin(theta)
    return C * c + S * s + G / p, C * s - S * c


# --- encode / decode ------------------------------------------------------------


def encode(x0, X0, kind: FormulationKind, cfg: ForceConfig, t0: float = 0.0):
    """Initial integration state of ``kind`` for the Cartesian state (x0, X0).

    Returns ``(state, M0)`` where M0 is the departure matrix (identity for
    Cowell). The ideal frame starts aligned with the departure frame, so the
    ideal anomaly starts at zero and the Euler parameters at (0, 0, 0, 1).
    """
    x0 = as_vec3(x0)
    X0 = as_vec3(X0)
    GM = cfg.GM
    if kind is FormulationKind.COWELL:
        CartesianState(t0, x0, X0)
        return FormulationState(kind, float(t0), np.concatenate([x0, X0]), GM), np.eye(3)
    fr = orbital_frame(x0, X0)
    M0 = departure_matrix(fr)
    r, G = fr.r, fr.G
    rdot = float(X0 @ x0) / r
    p = G * G / GM
    sg = math.sqrt(G)
    if kind in (FormulationKind.IDEAL8_QQ, FormulationKind.IDEAL7_QQ, FormulationKind.IDEAL7_QQ_T):
        radial = [1.0 / r, -rdot / G] if kind.regularized else [r, rdot]
    else:
        radial = list(cs_from_r(G, p, r, rdot, 0.0))
    if kind in (FormulationKind.IDEAL8_QQ, FormulationKind.IDEAL8_CS):
        y = [0.0, 0.0, 0.0, 1.0, G] + radial + [float(t0)]
        s = 0.0
    elif kind.regularized:
        y = [0.0, 0.0, 0.0, sg] + radial + [float(t0)]
        s = 0.0
    else:
        y = [0.0, 0.0, 0.0, sg] + radial + [0.0]
        s = float(t0)
    return FormulationState(kind, s, np.array(y), GM), M0


def ideal_quantities(state: FormulationState):
    """Unpack a non-Cowell state into (theta, t, lam, G, r, rdot, k).

    ``lam`` are the parameters fed to the rotation table and ``k`` its
    quadratic factor (2 for Euler parameters, 2/sum(g**2) for scaled ones).
    """
    kind, y, GM = state.kind, state.y.tolist(), state.GM
    if kind is FormulationKind.COWELL:
        raise ValueError("Cowell states have no ideal-frame quantities")
    theta, t = state.theta, state.t
    p = y[:4]
    if kind in (FormulationKind.IDEAL8_QQ, FormulationKind.IDEAL8_CS):
        G = y[4]
        k = 2.0
        a, b = y[5], y[6]
    else:
        G = sum(v * v for v in p)
        k = 2.0 / G if G > 0 else math.inf
        a, b = y[4], y[5]
    if not G > 0:
        raise SingularStateError("angular momentum is not positive")
    if kind in (FormulationKind.IDEAL8_QQ, FormulationKind.IDEAL7_QQ):
        if not a > 0:
            raise SingularStateError(f"inverse radius q = {a} is not positive")
        r, rdot = 1.0 / a, -b * G
    elif kind is FormulationKind.IDEAL7_QQ_T:
        if not a > 0:
            raise SingularStateError(f"radius r = {a} is not positive")
        r, rdot = a, b
    else:
        Gr, rdot = g_r_from_cs(a, b, theta, G, G * G / GM)
        if not Gr > 0:
            raise SingularStateError(f"G/r = {Gr} is not positive")
        r = G / Gr
    return theta, t, p, G, r, rdot, k


def decode(state: FormulationState, M0) -> CartesianState:
    """Cartesian position and velocity in space axes for an integration state."""
    if state.kind is FormulationKind.COWELL:
        y = state.y
        return CartesianState(state.t, y[:3], y[3:])
    theta, t, p, G, r, rdot, k = ideal_quantities(state)
    ax = space_axes(_flat(M0), *p, k, math.cos(theta), math.sin(theta))
    u = np.array(ax[0:3])
    v = np.array(ax[3:6])
    x = r * u
    return CartesianState(t, x, rdot * u + (G / r) * v)
