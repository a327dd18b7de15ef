"""Embedded invariant checks run by ``idealframe selftest``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from idealframe.core import GravParams
from idealframe.forces import ForceConfig, MoonParams
from idealframe.formulations import FormulationKind, decode, encode, make_field
from idealframe.frames import rotation_from_params, scale_params, unscale_params
from idealframe.integrator import Tolerances
from idealframe.kepler import kepler_propagate
from idealframe.propagator import bilinear_residual, propagate_state

_IDEAL = [k for k in FormulationKind if k is not FormulationKind.COWELL]


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.threshold)


def _toy_config(scale: float = 1.0) -> ForceConfig:
    # strong perturbations in internal units, to make the identities non-trivial
    moon = MoonParams(GMm=0.01 * scale, am=8.0, nm=0.05, inclination=0.4, raan=0.3, phase0=1.0)
    return ForceConfig(GravParams(GM=1.0, J2=1e-3 * scale, Re=0.3), True, True, moon)


def _random_bound_states(rng, n):
    out = []
    while len(out) < n:
        x = rng.normal(size=3)
        x *= rng.uniform(0.5, 1.5) / np.linalg.norm(x)
        X = rng.normal(size=3) * 0.6
        r = np.linalg.norm(x)
        if X @ X < 1.8 / r and np.linalg.norm(np.cross(x, X)) > 0.1:
            out.append((x, X))
    return out


def _random_field_states(rng, kind, n, cfg):
    """Encode random states, then move the attitude off its initial value."""
    res = []
    for x, X in _random_bound_states(rng, n):
        st, M0 = encode(x, X, kind, cfg)
        y = st.y.copy()
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        y[:4] = q * np.linalg.norm(st.y[:4])
        res.append((rng.uniform(0, 2 * math.pi) if kind.regularized else st.s, y, M0))
    return res


def check_bilinear(eps: float = 0.0) -> CheckResult:
    rng = np.random.default_rng(1)
    cfg = _toy_config()
    worst = 0.0
    for kind in _IDEAL:
        for s, y, M0 in _random_field_states(rng, kind, 20, cfg):
            dy = make_field(kind, cfg, M0)(s, y)
            dy[0] += eps
            scale = np.linalg.norm(y[:4]) * np.linalg.norm(dy[:4]) or 1.0
            worst = max(worst, abs(bilinear_residual(kind, y, dy)) / scale)
    return CheckResult("bilinear constraint of field outputs", worst, 1e-14)


def check_scaling(eps: float = 0.0) -> CheckResult:
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        lam = rng.normal(size=4)
        lam /= np.linalg.norm(lam)
        G = rng.uniform(0.1, 10.0)
        lam2, G2 = unscale_params(scale_params(lam, G * (1 + eps)))
        worst = max(worst, float(np.max(np.abs(lam2 - lam))), abs(G2 - G) / G)
    return CheckResult("g <-> (lambda, G) round trip", worst, 1e-14)


def check_rotation(eps: float = 0.0) -> CheckResult:
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        lam = rng.normal(size=4)
        lam /= np.linalg.norm(lam)
        N = rotation_from_params(lam * (1 + eps))
        worst = max(worst, float(np.max(np.abs(N.T @ N - np.eye(3)))), abs(np.linalg.det(N) - 1))
    return CheckResult("Euler-parameter rotation orthogonal", worst, 1e-14)


def check_round_trip(eps: float = 0.0) -> CheckResult:
    rng = np.random.default_rng(4)
    cfg = _toy_config()
    worst = 0.0
    for kind in FormulationKind:
        for x, X in _random_bound_states(rng, 20):
            st, M0 = encode(x, X, kind, cfg)
            c = decode(st, M0)
            err = np.linalg.norm(np.concatenate([c.x - x * (1 + eps), c.X - X]))
            worst = max(worst, err / np.linalg.norm(np.concatenate([x, X])))
    return CheckResult("decode(encode(s)) = s", worst, 1e-13)


def check_unperturbed(eps: float = 0.0) -> CheckResult:
    rng = np.random.default_rng(5)
    cfg = ForceConfig(GravParams(GM=1.0))
    worst = 0.0
    for kind in (FormulationKind.IDEAL7_QQ, FormulationKind.IDEAL8_QQ):
        for s, y, M0 in _random_field_states(rng, kind, 20, cfg):
            dy = make_field(kind, cfg, M0)(s, y)
            G = float(y[:4] @ y[:4]) if kind is FormulationKind.IDEAL7_QQ else float(y[4])
            q_idx = 4 if kind is FormulationKind.IDEAL7_QQ else 5
            osc = dy[q_idx + 1] + y[q_idx] - (1.0 + eps) / G**2
            worst = max(worst, float(np.max(np.abs(dy[:4]))), abs(osc))
    return CheckResult("unperturbed reduction (dg = 0, harmonic q)", worst, 1e-14)


def check_product_rule(eps: float = 0.0) -> CheckResult:
    rng = np.random.default_rng(6)
    cfg = _toy_config()
    worst = 0.0
    for s, y8, M0 in _random_field_states(rng, FormulationKind.IDEAL8_CS, 20, cfg):
        y8[:4] /= np.linalg.norm(y8[:4])
        G = y8[4]
        y7 = np.concatenate([math.sqrt(G) * y8[:4], y8[5:]])
        d8 = make_field(FormulationKind.IDEAL8_CS, cfg, M0)(s, y8)
        d7 = make_field(FormulationKind.IDEAL7_CS, cfg, M0)(s, y7)
        dg = math.sqrt(G) * d8[:4] + y8[:4] * d8[4] * (1 + eps) / (2 * math.sqrt(G))
        worst = max(worst, float(np.max(np.abs(dg - d7[:4]))), float(np.max(np.abs(d8[5:] - d7[4:]))))
    return CheckResult("7D field = product rule of 8D field", worst, 1e-14)


def check_conic(eps: float = 0.0) -> CheckResult:
    e, GM = 0.7, 1.0
    rp = 1.0 - e
    x0 = np.array([rp, 0.0, 0.0])
    X0 = np.array([0.0, math.sqrt(GM * (1 + e) / rp), 0.0])
    T = 5 * 2 * math.pi + 1.0
    traj = propagate_state(x0, X0, 0.0, [T], ForceConfig(GravParams(GM=GM)),
                           FormulationKind.IDEAL7_CS, Tolerances(1e-12, 1e-12))
    xk, _ = kepler_propagate(x0, X0, T, GM * (1 + eps))
    err = float(np.linalg.norm(traj.final.x - xk) / np.linalg.norm(xk))
    return CheckResult("Kepler conic, e = 0.7, 5 revolutions", err, 1e-10)


CHECKS = {
    "bilinear": check_bilinear,
    "scaling": check_scaling,
    "rotation": check_rotation,
    "round_trip": check_round_trip,
    "unperturbed": check_unperturbed,
    "product_rule": check_product_rule,
    "conic": check_conic,
}


def run_selftest(perturb: str | None = None) -> list:
    """Run every check; ``perturb`` names one check whose constants get nudged."""
    if perturb is not None and perturb not in CHECKS:
        raise KeyError(f"unknown check {perturb!r}")
    return [fn(1e-6 if name == perturb else 0.0) for name, fn in CHECKS.items()]
