"""End-to-end propagation: encode, integrate, land on output epochs, decode."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from idealframe.core import (
    CartesianState,
    UnitSystem,
    angular_momentum,
    make_unit_system,
    orthogonality_defect,
)
from idealframe.forces import ForceConfig, j2_potential
from idealframe.formulations import (
    FormulationKind,
    FormulationState,
    decode,
    encode,
    make_field,
)
from idealframe.integrator import (
    DOP853Stepper,
    MaxStepsExceeded,
    StepStats,
    Tolerances,
    land_on_epoch,
)

_EIGHT = (FormulationKind.IDEAL8_QQ, FormulationKind.IDEAL8_CS)


@dataclass
class Diagnostics:
    """Constraint residuals and conserved quantities at every output sample.

    ``norm_defect`` is |lambda|**2 - 1 for the 8D kinds and the relative
    mismatch between sum(g**2) and |x cross X| of the decoded state for the
    7D kinds (NaN for Cowell). ``ge_defect`` is G.e in internal units.
    """

    bilinear: np.ndarray
    norm_defect: np.ndarray
    ge_defect: np.ndarray
    energy: np.ndarray
    Gz: np.ndarray
    stats: StepStats = field(default_factory=StepStats)

    def max_abs(self, name: str) -> float:
        vals = np.abs(getattr(self, name))
        return float(np.nanmax(vals)) if np.any(np.isfinite(vals)) else math.nan


@dataclass
class Trajectory:
    """Cartesian samples (source units) at the requested epochs."""

    kind: FormulationKind
    states: list
    raw: list
    diagnostics: Diagnostics
    units: UnitSystem
    M0: np.ndarray

    @property
    def epochs(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> CartesianState:
        return self.states[-1]

    @property
    def stats(self) -> StepStats:
        return self.diagnostics.stats


def conserved_quantities(state: CartesianState, cfg: ForceConfig):
    """Return (energy, Gz): Kepler + J2 energy and polar angular momentum.

    Both are conserved only when the moon is disabled.
    """
    x, X = state.x, state.X
    energy = 0.5 * float(X @ X) - cfg.GM / float(np.linalg.norm(x))
    if cfg.enable_j2:
        energy -= j2_potential(x, cfg.grav)
    return energy, float(angular_momentum(x, X)[2])


def bilinear_residual(kind: FormulationKind, y, dy) -> float:
    """p1*p2' - p2*p1' + p3*p4' - p4*p3' for the attitude parameters."""
    if kind is FormulationKind.COWELL:
        return math.nan
    p1, p2, p3, p4 = (float(v) for v in y[:4])
    d1, d2, d3, d4 = (float(v) for v in dy[:4])
    return p1 * d2 - p2 * d1 + p3 * d4 - p4 * d3


def run_diagnostics(raw: Sequence[FormulationState], M0, cfg_internal: ForceConfig,
                    cfg_source: ForceConfig, units: UnitSystem,
                    stats: Optional[StepStats] = None) -> Diagnostics:
    """Evaluate the residual series on the raw integration states of one run."""
    n = len(raw)
    out = {k: np.full(n, math.nan) for k in ("bilinear", "norm_defect", "ge_defect", "energy", "Gz")}
    if n == 0:
        return Diagnostics(**out, stats=stats or StepStats())
    kind = raw[0].kind
    fun = make_field(kind, cfg_internal, M0)
    for i, st in enumerate(raw):
        cart = decode(st, M0)
        if kind is not FormulationKind.COWELL:
            out["bilinear"][i] = bilinear_residual(kind, st.y, fun(st.s, st.y))
            p = st.y[:4]
            if kind in _EIGHT:
                out["norm_defect"][i] = float(p @ p) - 1.0
            else:
                G = float(p @ p)
                out["norm_defect"][i] = (G - float(np.linalg.norm(angular_momentum(cart.x, cart.X)))) / G
        out["ge_defect"][i] = orthogonality_defect(cart.x, cart.X, cfg_internal.GM)
        out["energy"][i], out["Gz"][i] = conserved_quantities(units.state_to_source(cart), cfg_source)
    return Diagnostics(**out, stats=stats or StepStats())


def _integrate_to_epochs(kind, y0, s0, M0, cfg, epochs, tol, tol_t, observer):
    """Integrate in internal units, returning the raw state at each epoch."""
    fun = make_field(kind, cfg, M0)
    GM = cfg.GM
    clock = None if kind is FormulationKind.COWELL else kind.dimension - 1
    stepper = DOP853Stepper(fun, s0, y0, tol, clock=clock)
    start = FormulationState(kind, s0, stepper.y.copy(), GM)
    t_now = start.t
    raw = []
    pending = list(epochs)
    while pending and abs(pending[0] - t_now) <= tol_t:
        raw.append(start)
        pending.pop(0)
    while pending:
        if stepper.stats.accepted >= tol.max_steps:
            raise MaxStepsExceeded(f"more than {tol.max_steps} steps")
        prev_s, prev_y, prev_h = stepper.s, stepper.y, stepper.h
        if kind.regularized:
            stepper.step()
        else:
            # in physical time the final epoch is hit exactly
            remaining = pending[-1] - stepper.s
            if stepper.step(remaining) == remaining:
                stepper.s = pending[-1]
        if observer is not None:
            observer(stepper.s, stepper.y)
        t_now = FormulationState(kind, stepper.s, stepper.y, GM).t
        while pending and pending[0] <= t_now:
            T = pending.pop(0)
            if T == t_now:
                raw.append(FormulationState(kind, stepper.s, stepper.y.copy(), GM))
            elif kind.regularized:
                y, th = land_on_epoch(fun, prev_y, prev_s, T, tol_t, tol, stats=stepper.stats, h0=prev_h,
                                      clock=clock)
                raw.append(FormulationState(kind, th, y, GM))
            else:
                side = DOP853Stepper(fun, prev_s, prev_y, tol, h=prev_h, clock=clock)
                side.advance_to(T)
                stepper.stats.merge(side.stats)
                raw.append(FormulationState(kind, T, side.y.copy(), GM))
    return raw, stepper.stats


def propagate_state(x0, X0, t0: float, epochs: Sequence[float], cfg: ForceConfig,
                    kind: FormulationKind, tol: Optional[Tolerances] = None,
                    observer=None) -> Trajectory:
    """Propagate a source-unit Cartesian state to every epoch in ``epochs``.

    Integration runs in internal units (GM = 1). Epochs must be
    non-decreasing and not earlier than ``t0``. Samples after the first one
    are branched off the main integration, so intermediate output epochs do
    not perturb the final state.
    """
    tol = tol or Tolerances()
    epochs = [float(e) for e in epochs]
    if not epochs:
        raise ValueError("at least one output epoch is required")
    if any(b < a for a, b in zip(epochs, epochs[1:])) or epochs[0] < t0:
        raise ValueError("output epochs must be sorted and not before t0")
    units = make_unit_system(x0, X0, cfg.GM)
    cfg_int = cfg.to_internal(units)
    init = units.state_to_internal(CartesianState(t0, x0, X0))
    state0, M0 = encode(init.x, init.X, kind, cfg_int, init.t)
    ep_int = [e / units.UT for e in epochs]
    tol_t = 1e-13 * max(1.0, abs(ep_int[-1]))
    raw, stats = _integrate_to_epochs(kind, state0.y, state0.s, M0, cfg_int, ep_int, tol, tol_t, observer)
    states = []
    for st, ep in zip(raw, epochs):
        c = units.state_to_source(decode(st, M0))
        # report at the requested epoch; the landing residual is below tol_t
        states.append(CartesianState(ep, c.x, c.X))
    diag = run_diagnostics(raw, M0, cfg_int, cfg, units, stats)
    return Trajectory(kind=kind, states=states, raw=raw, diagnostics=diag, units=units, M0=M0)


def propagate(scenario, kind: FormulationKind, tol: Optional[Tolerances] = None,
              observer=None) -> Trajectory:
    """Propagate a :class:`~idealframe.scenario.Scenario` with one formulation.

    The trajectory starts with the initial state and ends at the scenario's
    final epoch; times are in seconds.
    """
    epochs = [scenario.t0_s] + [e for e in scenario.epochs_s() if e > scenario.t0_s]
    return propagate_state(
        scenario.x0, scenario.X0, scenario.t0_s, epochs, scenario.force_config(),
        kind, tol, observer,
    )


@dataclass(frozen=True)
class Reference:
    """Self-generated reference final state and its confirmed accuracy."""

    state: CartesianState
    confirm: CartesianState
    kind: FormulationKind
    rtol: float

    @property
    def position_agreement(self) -> float:
        """Relative position difference between the two reference runs."""
        return float(np.linalg.norm(self.state.x - self.confirm.x) / np.linalg.norm(self.state.x))

    @property
    def usable_digits(self) -> float:
        d = self.position_agreement
        return math.inf if d == 0 else -math.log10(d)


def reference_solution(scenario, kind: FormulationKind = FormulationKind.COWELL,
                       rtol: float = 1e-13) -> Reference:
    """Final state at tight tolerance, confirmed by a run at half the tolerance."""
    a = propagate(scenario, kind, Tolerances(rtol=rtol, atol=rtol)).final
    b = propagate(scenario, kind, Tolerances(rtol=rtol / 2, atol=rtol / 2)).final
    return Reference(state=b, confirm=a, kind=kind, rtol=rtol / 2)
