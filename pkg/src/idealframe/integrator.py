"""Adaptive DOP853 integration, a fixed-step RK4 oracle and epoch landing.

The stepper is the Dormand-Prince 8(5,3) pair: an 8th-order solution with
the combined 5th/3rd-order error estimate of Hairer's DOP853, driven by a
PI step-size controller. A field may raise :class:`SingularStateError` on
a trial stage (e.g. q <= 0 after an overshoot); that step is rejected and
retried with a smaller step instead of aborting the integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from idealframe.core import SingularStateError

_N_STAGES = _dop.N_STAGES
_C = _dop.C[:_N_STAGES]
_A = _dop.A[:_N_STAGES, :_N_STAGES]
_B = _dop.B
_E3 = _dop.E3[:_N_STAGES]
_E5 = _dop.E5[:_N_STAGES]
_A_ROWS = [(_C[i], _A[i, :i].copy()) for i in range(1, _N_STAGES)]

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 6.0
# PI controller exponents for an 8th-order method
ALPHA = 0.7 / 8
BETA = 0.4 / 8


class IntegrationError(RuntimeError):
    """The integrator could not complete the requested interval."""


class StepSizeUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-12
    atol: float = 1e-12
    h0: float = 1e-2
    h_max: float = math.inf
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (np.all(np.asarray(self.rtol) > 0) and np.all(np.asarray(self.atol) > 0)):
            raise ValueError("rtol and atol must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0

    def merge(self, other: "StepStats") -> None:
        self.accepted += other.accepted
        self.rejected += other.rejected
        self.evaluations += other.evaluations


@dataclass
class DOP853Stepper:
    """Mutable integration workspace for one propagation.

    Attributes ``s``, ``y`` hold the last accepted point, ``f`` the field
    there (first-same-as-last is not available in DOP853, but the value is
    reused as the first stage of the next step).
    """

    fun: object
    s: float
    y: np.ndarray
    tol: Tolerances = field(default_factory=Tolerances)
    h: float = 0.0
    stats: StepStats = field(default_factory=StepStats)
    clock: int | None = None

    def __post_init__(self):
        self.y = np.array(self.y, dtype=float)
        self.s = float(self.s)
        self.f = self._eval(self.s, self.y)
        if self.h <= 0.0:
            self.h = self.tol.h0
        self._err_prev = 1e-4
        self._K = np.empty((_N_STAGES + 1, self.y.size))
        self._rtol = np.broadcast_to(np.asarray(self.tol.rtol, dtype=float), self.y.shape).copy()
        if self.clock is not None:
            self._rtol[self.clock] = 0.0

    def _eval(self, s, y):
        self.stats.evaluations += 1
        return self.fun(s, y)

    def _attempt(self, h):
        """One trial step of length h. Returns (y_new, f_new, err_norm)."""
        s, y, K = self.s, self.y, self._K
        K[0] = self.f
        for i, (c, a) in enumerate(_A_ROWS, start=1):
            K[i] = self._eval(s + c * h, y + h * (a @ K[:i]))
        y_new = y + h * (_B @ K[:_N_STAGES])
        f_new = self._eval(s + h, y_new)
        K[_N_STAGES] = f_new
        scale = self.tol.atol + self._rtol * np.maximum(np.abs(y), np.abs(y_new))
        k12 = K[:_N_STAGES].T
        err5 = (k12 @ _E5) / scale
        err3 = (k12 @ _E3) / scale
        e5 = float(err5 @ err5)
        e3 = float(err3 @ err3)
        if e5 == 0.0 and e3 == 0.0:
            return y_new, f_new, 0.0
        denom = e5 + 0.01 * e3
        return y_new, f_new, abs(h) * e5 / math.sqrt(denom * y.size)

    def step(self, h_limit: float = math.inf) -> float:
        """Take one accepted step no longer than ``h_limit``; return its length."""
        tol = self.tol
        h_min = 16.0 * np.spacing(max(abs(self.s), 1.0))
        h = min(self.h, tol.h_max)
        clipped = h >= h_limit
        if clipped:
            h = h_limit
        while True:
            if h < h_min:
                raise StepSizeUnderflow(f"step size underflow at s = {self.s!r}")
            try:
                y_new, f_new, err = self._attempt(h)
                ok = bool(np.all(np.isfinite(y_new))) and math.isfinite(err)
            except SingularStateError:
                ok, err = False, math.inf
            if ok and err <= 1.0:
                break
            self.stats.rejected += 1
            clipped = False
            if math.isfinite(err):
                h *= max(MIN_FACTOR, SAFETY * err ** (-1.0 / 8))
            else:
                h *= 0.25
        if err == 0.0:
            factor = MAX_FACTOR
        else:
            factor = SAFETY * err ** (-ALPHA) * self._err_prev**BETA
            factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
        self._err_prev = max(err, 1e-4)
        self.stats.accepted += 1
        self.s += h
        self.y = y_new
        self.f = f_new
        # a step clipped to hit an output point must not shrink the controller
        self.h = max(self.h, h * factor) if clipped else h * factor
        return h

    def advance_to(self, s_end: float, observer=None) -> None:
        """Step until ``s == s_end`` exactly."""
        if s_end < self.s:
            raise ValueError(f"cannot integrate backwards from {self.s} to {s_end}")
        while self.s < s_end:
            if self.stats.accepted >= self.tol.max_steps:
                raise MaxStepsExceeded(f"more than {self.tol.max_steps} steps")
            remaining = s_end - self.s
            h = self.step(remaining)
            if h == remaining:
                self.s = s_end
            if observer is not None:
                observer(self.s, self.y)


def integrate_adaptive(fun, y0, s0: float, s_end: float, tol: Tolerances | None = None, observer=None):
    """Integrate ``dy/ds = fun(s, y)`` from s0 to s_end with DOP853.

    Returns:
        ``(y_end, stats)``.
    """
    stepper = DOP853Stepper(fun, s0, y0, tol or Tolerances())
    stepper.advance_to(s_end, observer)
    return stepper.y.copy(), stepper.stats


def integrate_fixed_rk4(fun, y0, s0: float, s_end: float, n: int) -> np.ndarray:
    """Classical fixed-step fourth-order Runge-Kutta with ``n`` steps."""
    if n < 1:
        raise ValueError("n must be >= 1")
    y = np.array(y0, dtype=float)
    h = (s_end - s0) / n
    for i in range(n):
        s = s0 + i * h
        k1 = fun(s, y)
        k2 = fun(s + h / 2, y + h / 2 * k1)
        k3 = fun(s + h / 2, y + h / 2 * k2)
        k4 = fun(s + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def land_on_epoch(fun, y, theta: float, T: float, tol_t: float, tol: Tolerances | None = None,
                  t_index: int = -1, max_iter: int = 30, stats: StepStats | None = None,
                  h0: float | None = None, clock: int | None = None):
    """Advance a regularised state until its time component equals ``T``.

    Newton iteration on the anomaly increment, using dt/dtheta from the
    field, with every trial integrated by the adaptive stepper from the
    same starting point. A bracket keeps the iteration safe.

    Returns:
        ``(y_at_T, theta_at_T)``.
    """
    tol = tol or Tolerances()
    y = np.asarray(y, dtype=float)
    t0 = float(y[t_index])
    if T < t0:
        raise ValueError(f"target epoch {T} precedes the current epoch {t0}")
    stats = stats if stats is not None else StepStats()
    if abs(T - t0) <= tol_t:
        return y.copy(), theta
    rate = float(fun(theta, y)[t_index])
    stats.evaluations += 1
    if not rate > 0:
        raise IntegrationError("time is not increasing along the flow")
    lo, hi = 0.0, math.inf
    d = (T - t0) / rate
    for _ in range(max_iter):
        st = DOP853Stepper(fun, theta, y, tol, h=h0 or 0.0, clock=clock)
        st.advance_to(theta + d)
        stats.merge(st.stats)
        t = float(st.y[t_index])
        miss = T - t
        if abs(miss) <= tol_t:
            return st.y.copy(), theta + d
        if miss > 0:
            lo = max(lo, d)
        else:
            hi = min(hi, d)
        rate = float(st.f[t_index])
        if not rate > 0:
            raise IntegrationError("time is not increasing along the flow")
        d_new = d + miss / rate
        if not lo < d_new < hi:
            d_new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * d
        if d_new == d:
            return st.y.copy(), theta + d
        d = d_new
    raise IntegrationError(f"epoch landing did not converge in {max_iter} iterations")
