"""Work-precision comparison of formulations on a scenario."""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from idealframe.core import NotBoundError, SingularStateError
from idealframe.formulations import FormulationKind
from idealframe.integrator import IntegrationError, Tolerances
from idealframe.propagator import Reference, propagate, reference_solution


def fmt(v) -> str:
    """Locale-independent, round-trippable number formatting."""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


@dataclass
class BenchRow:
    formulation: str
    rtol: float
    atol: float
    steps: int = 0
    rejected: int = 0
    field_evals: int = 0
    runtime_ns: float = math.nan
    pos_err_km: float = math.nan
    vel_err_km_s: float = math.nan
    pos_err_rel: float = math.nan
    max_bilinear: float = math.nan
    max_norm_defect: float = math.nan
    max_ge_defect: float = math.nan
    ref_digits: float = math.nan
    status: str = "ok"


COLUMNS = tuple(f.name for f in fields(BenchRow))


@dataclass
class BenchReport:
    rows: list
    reference: Reference | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in self.rows:
            d = asdict(row)
            w.writerow([fmt(d[c]) for c in COLUMNS])
        return buf.getvalue()

    def select(self, formulation) -> list:
        name = formulation.name if isinstance(formulation, FormulationKind) else formulation
        return [r for r in self.rows if r.formulation == name]

    def runtime_ratio(self, a, b) -> list:
        """Per-tolerance median runtime ratio a/b."""
        rb = {r.rtol: r.runtime_ns for r in self.select(b)}
        return [(r.rtol, r.runtime_ns / rb[r.rtol]) for r in self.select(a) if r.rtol in rb]


def _wall_ns(scenario, kind, tol) -> int:
    t0 = time.perf_counter_ns()
    propagate(scenario, kind, tol)
    return time.perf_counter_ns() - t0


def compare(scenario, kinds: Sequence[FormulationKind], rtols: Iterable[float],
            repeats: int = 11, atol: float | None = None,
            reference: Reference | None = None,
            reference_kind: FormulationKind = FormulationKind.COWELL,
            reference_rtol: float = 1e-13) -> BenchReport:
    """Run every (formulation, tolerance) cell and score it against a reference.

    A failing cell is recorded with its error message in ``status``; the
    sweep continues.
    """
    kinds = list(kinds)
    rtols = [float(r) for r in rtols]
    if not kinds:
        raise ValueError("at least one formulation is required")
    if not rtols:
        raise ValueError("at least one tolerance is required")
    if reference is None:
        reference = reference_solution(scenario, reference_kind, reference_rtol)
    ref = reference.state
    cells = {}
    for rtol in rtols:
        a = rtol if atol is None else atol
        tol = Tolerances(rtol=rtol, atol=a)
        runs = {}
        for kind in kinds:
            row = BenchRow(kind.name, rtol, a, ref_digits=reference.usable_digits)
            cells[kind, rtol] = row
            try:
                # the untimed first run doubles as warm-up
                runs[kind] = (propagate(scenario, kind, tol), [])
            except (IntegrationError, SingularStateError, NotBoundError, FloatingPointError) as exc:
                row.status = f"failed: {type(exc).__name__}: {exc}"
        # timed repeats rotate through the formulations so slow drift in
        # machine speed does not bias one of them
        for _ in range(repeats):
            for kind, (_, times) in runs.items():
                times.append(_wall_ns(scenario, kind, tol))
        for kind, (traj, times) in runs.items():
            row = cells[kind, rtol]
            fin = traj.final
            st = traj.stats
            d = traj.diagnostics
            row.steps, row.rejected, row.field_evals = st.accepted, st.rejected, st.evaluations
            row.runtime_ns = float(statistics.median(times)) if times else math.nan
            row.pos_err_km = float(np.linalg.norm(fin.x - ref.x))
            row.vel_err_km_s = float(np.linalg.norm(fin.X - ref.X))
            row.pos_err_rel = row.pos_err_km / float(np.linalg.norm(ref.x))
            row.max_bilinear = d.max_abs("bilinear")
            row.max_norm_defect = d.max_abs("norm_defect")
            row.max_ge_defect = d.max_abs("ge_defect")
    rows = [cells[kind, rtol] for kind in kinds for rtol in rtols]
    return BenchReport(rows=rows, reference=reference)


def work_at_accuracy(rows: Sequence[BenchRow], target: float) -> float:
    """Field evaluations needed for a relative position error of ``target``.

    Log-log interpolation between the two sweep points that bracket the
    target; NaN when the sweep does not bracket it.
    """
    pts = sorted(
        (r.pos_err_rel, r.field_evals) for r in rows if r.status == "ok" and r.pos_err_rel > 0
    )
    for (e_lo, w_lo), (e_hi, w_hi) in zip(pts, pts[1:]):
        if e_lo <= target <= e_hi:
            if e_hi == e_lo:
                return float(min(w_lo, w_hi))
            f = (math.log(target) - math.log(e_lo)) / (math.log(e_hi) - math.log(e_lo))
            return math.exp(math.log(w_lo) + f * (math.log(w_hi) - math.log(w_lo)))
    return math.nan


def summary(report: BenchReport) -> str:
    lines = []
    ref = report.reference
    if ref is not None:
        lines.append(
            f"reference: {ref.kind.name} rtol={ref.rtol:g}, two-run agreement "
            f"{ref.position_agreement:.2e} ({ref.usable_digits:.1f} digits)"
        )
    lines.append(f"{'formulation':<12} {'rtol':>8} {'evals':>9} {'runtime_ms':>11} {'pos_err_rel':>12}  status")
    for r in report.rows:
        lines.append(
            f"{r.formulation:<12} {r.rtol:>8.0e} {r.field_evals:>9d} {r.runtime_ns / 1e6:>11.2f} "
            f"{r.pos_err_rel:>12.3e}  {r.status}"
        )
    kinds = list(dict.fromkeys(r.formulation for r in report.rows))
    if "IDEAL7_CS" in kinds and "IDEAL8_CS" in kinds:
        ratios = report.runtime_ratio("IDEAL7_CS", "IDEAL8_CS")
        txt = ", ".join(f"{rt:g}: {q:.3f}" for rt, q in ratios)
        lines.append(f"runtime IDEAL7_CS / IDEAL8_CS per rtol: {txt}")
    return "\n".join(lines)
