"""Scenario files: JSON problem definitions with unit-annotated keys.

Lengths are in km and velocities in km/s. Times carry their unit in the key
suffix, either ``_s`` (seconds) or ``_day`` (days of 86400 s); one suffix
is used throughout a file. Example::

    {
      "name": "toy",
      "GM_km3_s2": 398600.8,
      "x0_km": [7000, 0, 0],
      "X0_km_s": [0, 7.5, 0],
      "t0_s": 0,
      "T_s": 6000,
      "output_epochs_s": [3000, 6000],
      "j2": {"J2": 1.08265e-3, "Re_km": 6371.22},
      "moon": {"GM_km3_s2": 4902.66, "radius_km": 384400,
               "mean_motion_rad_s": 2.665315780887e-6,
               "inclination_deg": 30, "raan_deg": 0, "phase0_deg": 270}
    }

The ``j2`` and ``moon`` blocks are optional; a block may carry
``"enabled": false`` to keep its constants while switching it off.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from idealframe.core import GravParams, NotBoundError, SingularStateError, make_unit_system
from idealframe.forces import ForceConfig, MoonParams

SECONDS_PER = {"s": 1.0, "day": 86400.0}


class ScenarioError(ValueError):
    """Malformed or invalid scenario file."""


@dataclass(frozen=True)
class Scenario:
    """A propagation problem in source units (km, km/s, and ``time_unit``)."""

    name: str
    GM: float
    x0: tuple
    X0: tuple
    t0: float
    T: float
    time_unit: str = "s"
    output_epochs: tuple = ()
    j2: Optional[dict] = None
    moon: Optional[dict] = None
    enable_j2: bool = False
    enable_moon: bool = False
    provenance: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        validate(self)

    @property
    def t0_s(self) -> float:
        return self.t0 * SECONDS_PER[self.time_unit]

    @property
    def T_s(self) -> float:
        return self.T * SECONDS_PER[self.time_unit]

    def epochs_s(self) -> list:
        """Output epochs in seconds, always ending at the final epoch."""
        k = SECONDS_PER[self.time_unit]
        eps = sorted(set(float(e) for e in self.output_epochs) | {float(self.T)})
        return [e * k for e in eps]

    def force_config(self) -> ForceConfig:
        grav = GravParams(GM=self.GM)
        moon = None
        if self.j2 is not None:
            grav = GravParams(GM=self.GM, J2=float(self.j2["J2"]), Re=float(self.j2["Re_km"]))
        if self.moon is not None:
            m = self.moon
            moon = MoonParams(
                GMm=float(m["GM_km3_s2"]),
                am=float(m["radius_km"]),
                nm=float(m["mean_motion_rad_s"]),
                inclination=math.radians(float(m.get("inclination_deg", 0.0))),
                raan=math.radians(float(m.get("raan_deg", 0.0))),
                phase0=math.radians(float(m.get("phase0_deg", 0.0))),
            )
        return ForceConfig(grav=grav, enable_j2=self.enable_j2, enable_moon=self.enable_moon, moon=moon)

    def with_forces(self, j2: Optional[bool] = None, moon: Optional[bool] = None) -> "Scenario":
        return replace(
            self,
            enable_j2=self.enable_j2 if j2 is None else j2,
            enable_moon=self.enable_moon if moon is None else moon,
        )

    def to_dict(self) -> dict:
        u = self.time_unit
        d = {"name": self.name}
        if self.provenance:
            d["provenance"] = self.provenance
        d.update(
            {
                "GM_km3_s2": self.GM,
                "x0_km": list(self.x0),
                "X0_km_s": list(self.X0),
                f"t0_{u}": self.t0,
                f"T_{u}": self.T,
            }
        )
        if self.output_epochs:
            d[f"output_epochs_{u}"] = list(self.output_epochs)
        if self.j2 is not None:
            d["j2"] = {**self.j2, "enabled": self.enable_j2}
        if self.moon is not None:
            d["moon"] = {**self.moon, "enabled": self.enable_moon}
        d.update(self.extra)
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def validate(sc: Scenario) -> None:
    def bad(field_name, msg):
        raise ScenarioError(f"{field_name}: {msg}")

    if sc.time_unit not in SECONDS_PER:
        bad("time_unit", f"unknown unit {sc.time_unit!r}")
    if not (isinstance(sc.GM, (int, float)) and sc.GM > 0):
        bad("GM_km3_s2", "must be a positive number")
    for key, vec in (("x0_km", sc.x0), ("X0_km_s", sc.X0)):
        if len(vec) != 3 or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vec):
            bad(key, "must be three finite numbers")
    if not sc.T > sc.t0:
        bad(f"T_{sc.time_unit}", f"final epoch {sc.T} must be after t0 = {sc.t0}")
    for e in sc.output_epochs:
        if not sc.t0 <= e <= sc.T:
            bad(f"output_epochs_{sc.time_unit}", f"epoch {e} outside [t0, T]")
    try:
        make_unit_system(sc.x0, sc.X0, sc.GM)
    except (NotBoundError, SingularStateError) as exc:
        bad("X0_km_s", str(exc))
    if np.linalg.norm(np.cross(sc.x0, sc.X0)) == 0.0:
        bad("X0_km_s", "rectilinear initial state (x0 parallel to X0)")
    if sc.enable_j2 and sc.j2 is None:
        bad("j2", "J2 enabled without constants")
    if sc.j2 is not None:
        for key in ("J2", "Re_km"):
            if key not in sc.j2:
                bad(f"j2.{key}", "missing")
        if not float(sc.j2["Re_km"]) > 0:
            bad("j2.Re_km", "must be positive")
    if sc.moon is not None:
        for key in ("GM_km3_s2", "radius_km", "mean_motion_rad_s"):
            if key not in sc.moon:
                bad(f"moon.{key}", "missing")
            if not float(sc.moon[key]) > 0:
                bad(f"moon.{key}", "must be positive")


def _time_unit(d: dict) -> str:
    units = {k.rsplit("_", 1)[1] for k in d if k.startswith(("t0_", "T_", "output_epochs_"))}
    if not units:
        raise ScenarioError("t0_s/T_s (or t0_day/T_day): missing epochs")
    if len(units) > 1 or not units <= set(SECONDS_PER):
        raise ScenarioError(f"time keys: mixed or unknown units {sorted(units)}")
    return units.pop()


def from_dict(d: dict) -> Scenario:
    known = {"name", "provenance", "GM_km3_s2", "x0_km", "X0_km_s", "j2", "moon"}
    try:
        u = _time_unit(d)
        j2 = d.get("j2")
        moon = d.get("moon")
        enable_j2 = j2 is not None and bool(j2.get("enabled", True))
        enable_moon = moon is not None and bool(moon.get("enabled", True))
        if j2 is not None:
            j2 = {k: v for k, v in j2.items() if k != "enabled"}
        if moon is not None:
            moon = {k: v for k, v in moon.items() if k != "enabled"}
        time_keys = {f"t0_{u}", f"T_{u}", f"output_epochs_{u}"}
        for key in ("GM_km3_s2", "x0_km", "X0_km_s", f"t0_{u}", f"T_{u}"):
            if key not in d:
                raise ScenarioError(f"{key}: missing")
        return Scenario(
            name=str(d.get("name", "unnamed")),
            GM=d["GM_km3_s2"],
            x0=tuple(d["x0_km"]),
            X0=tuple(d["X0_km_s"]),
            t0=d[f"t0_{u}"],
            T=d[f"T_{u}"],
            time_unit=u,
            output_epochs=tuple(d.get(f"output_epochs_{u}", ())),
            j2=j2,
            moon=moon,
            enable_j2=enable_j2,
            enable_moon=enable_moon,
            provenance=str(d.get("provenance", "")),
            extra={k: v for k, v in d.items() if k not in known | time_keys},
        )
    except ScenarioError:
        raise
    except (TypeError, KeyError, AttributeError) as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from exc


def loads(text: str, source: str = "<string>") -> Scenario:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if text.splitlines() else ""
        raise ScenarioError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from exc
    if not isinstance(d, dict):
        raise ScenarioError(f"{source}: top level must be an object")
    return from_dict(d)


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), str(path))


def benchmark_scenario() -> Scenario:
    """The J2 + circular-moon test orbit shipped with the package."""
    text = resources.files("idealframe.data").joinpath("stiefel_scheifele.json").read_text("utf-8")
    return loads(text, "stiefel_scheifele.json")


def benchmark_path() -> Path:
    return Path(str(resources.files("idealframe.data").joinpath("stiefel_scheifele.json")))
