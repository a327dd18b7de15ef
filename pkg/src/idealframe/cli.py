"""Command-line entry point: ``run``, ``compare`` and ``selftest``.

Exit codes: 0 success, 1 usage or invalid input, 2 numeric failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from idealframe.bench import compare, fmt, summary
from idealframe.core import SingularStateError
from idealframe.formulations import FormulationKind
from idealframe.integrator import IntegrationError, Tolerances
from idealframe.propagator import Trajectory, propagate
from idealframe.scenario import ScenarioError, parse_scenario
from idealframe.selftest import CHECKS, run_selftest

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

TRAJECTORY_COLUMNS = (
    "t_s", "x_km", "y_km", "z_km", "vx_km_s", "vy_km_s", "vz_km_s",
    "bilinear", "norm_defect", "ge_defect", "energy_km2_s2", "Gz_km2_s",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    d = traj.diagnostics
    for i, s in enumerate(traj.states):
        vals = [s.t, *s.x.tolist(), *s.X.tolist(), d.bilinear[i], d.norm_defect[i], d.ge_defect[i],
                d.energy[i], d.Gz[i]]
        w.writerow([fmt(float(v)) for v in vals])
    return buf.getvalue()


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _floats(text: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise UsageError("empty tolerance list")
    if any(v <= 0 for v in vals):
        raise UsageError("tolerances must be positive")
    return vals


def _kinds(text: str) -> list:
    try:
        kinds = [FormulationKind.parse(k) for k in text.split(",") if k.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not kinds:
        raise UsageError("empty formulation list")
    return kinds


def cmd_run(scenario_path, kind: str, rtol: float, atol: float | None, out) -> int:
    scenario = parse_scenario(scenario_path)
    k = FormulationKind.parse(kind)
    traj = propagate(scenario, k, Tolerances(rtol=rtol, atol=rtol if atol is None else atol))
    _write(out, trajectory_csv(traj))
    return EXIT_OK


def cmd_compare(scenario_path, kinds: str, rtol_sweep: str, repeats: int, out,
                atol: float | None = None, reference_kind: str = "cowell",
                reference_rtol: float = 1e-13) -> int:
    if repeats < 1:
        raise UsageError("--repeats must be at least 1")
    kind_list = _kinds(kinds)
    rtols = _floats(rtol_sweep)
    scenario = parse_scenario(scenario_path)
    report = compare(
        scenario, kind_list, rtols, repeats=repeats, atol=atol,
        reference_kind=FormulationKind.parse(reference_kind), reference_rtol=reference_rtol,
    )
    _write(out, report.to_csv())
    print(summary(report), file=sys.stderr if out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_selftest(perturb: str | None = None) -> int:
    results = run_selftest(perturb)
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name:<{width}}  residual={r.residual:.3e}  threshold={r.threshold:.0e}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="idealframe", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="propagate one scenario and write its trajectory CSV")
    r.add_argument("--scenario", required=True)
    r.add_argument("--formulation", required=True, help="e.g. IDEAL7_CS")
    r.add_argument("--rtol", type=float, default=1e-12)
    r.add_argument("--atol", type=float, default=None, help="defaults to rtol")
    r.add_argument("--out", default="-")

    c = sub.add_parser("compare", help="work-precision sweep over formulations and tolerances")
    c.add_argument("--scenario", required=True)
    c.add_argument("--formulations", required=True, help="comma-separated kinds")
    c.add_argument("--rtol-sweep", required=True, help="comma-separated tolerances")
    c.add_argument("--repeats", type=int, default=11)
    c.add_argument("--atol", type=float, default=None)
    c.add_argument("--reference", default="cowell", help="formulation used for the reference run")
    c.add_argument("--reference-rtol", type=float, default=1e-13)
    c.add_argument("--out", default="-")

    s = sub.add_parser("selftest", help="run the embedded invariant checks")
    s.add_argument("--perturb", choices=sorted(CHECKS), help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.scenario, args.formulation, args.rtol, args.atol, args.out)
        if args.command == "compare":
            return cmd_compare(args.scenario, args.formulations, args.rtol_sweep, args.repeats,
                               args.out, args.atol, args.reference, args.reference_rtol)
        return cmd_selftest(args.perturb)
    except (SingularStateError, IntegrationError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
