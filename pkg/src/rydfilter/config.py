"""Run configuration: JSON schema, validation and the shipped figure presets."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .atom_model import AtomRates, Scheme, SchemeConfig, excitation_linewidth
from .geometry import (
    DEFAULT_BOX_SIDE,
    DEFAULT_C6,
    DEFAULT_MIN_SEPARATION,
    EnsembleGeometry,
    sample_positions,
    uniform_blockade_geometry,
)
from .mcwf import MAX_STEP_SCALE, SimulationConfig
from .operators import MAX_ATOMS
from .pulses import PulseSchedule

PRESETS = ("fig2", "fig3", "fig4")
MODES = ("mcwf", "master")


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass
class GeometrySpec:
    """`uniform`: every pair shifted by blockade_factor * w_max (or an explicit `delta`).
    `sampled`: positions drawn in a cube, shifts from C6 / d^6."""

    mode: str = "uniform"
    blockade_factor: float = 10.0
    delta: float | None = None
    box_side: float = DEFAULT_BOX_SIDE
    min_separation: float = DEFAULT_MIN_SEPARATION
    c6: float = DEFAULT_C6
    seed: int = 0


@dataclass
class RunConfig:
    scheme: str = "A"
    atoms: list = field(default_factory=lambda: [5])
    schedule: dict = field(default_factory=dict)
    gamma_re: float = 0.0
    gamma_r: float = 0.0
    rate_overrides: dict = field(default_factory=dict)
    scheme_params: dict = field(default_factory=dict)
    geometry: GeometrySpec = field(default_factory=GeometrySpec)
    trajectories: int = 500
    base_seed: int = 0
    mode: str = "mcwf"
    output_points: int = 41
    mean_N: float = 5.0
    prune: bool = True
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step_scale: float = MAX_STEP_SCALE
    out_dir: str = "results"
    preset: str | None = None
    calibration: dict = field(default_factory=dict)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("$", "config must be a JSON object")
        d = copy.deepcopy(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"$.{sorted(unknown)[0]}", "unknown field")
        geo = d.pop("geometry", {}) or {}
        if not isinstance(geo, dict):
            raise ConfigError("$.geometry", "must be an object")
        gunknown = set(geo) - set(GeometrySpec.__dataclass_fields__)
        if gunknown:
            raise ConfigError(f"$.geometry.{sorted(gunknown)[0]}", "unknown field")
        cfg = cls(geometry=GeometrySpec(**geo), **d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("$", f"cannot read {path}: {exc}") from exc
        return cls.from_dict(data)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    # -- validation ----------------------------------------------------

    def validate(self) -> None:
        if self.scheme not in ("A", "B"):
            raise ConfigError("$.scheme", "must be 'A' or 'B'")
        if self.mode not in MODES:
            raise ConfigError("$.mode", f"must be one of {MODES}")
        if not isinstance(self.atoms, list) or not self.atoms:
            raise ConfigError("$.atoms", "must be a non-empty list of atom numbers")
        for i, n in enumerate(self.atoms):
            if not isinstance(n, int) or not 1 <= n <= MAX_ATOMS:
                raise ConfigError(f"$.atoms[{i}]", f"must be an integer in [1, {MAX_ATOMS}]")
        if self.mode == "master" and max(self.atoms) > 3:
            raise ConfigError("$.atoms", "master mode supports at most 3 atoms")
        if not isinstance(self.trajectories, int) or self.trajectories < 1:
            raise ConfigError("$.trajectories", "must be a positive integer")
        if self.output_points < 2:
            raise ConfigError("$.output_points", "need at least 2 output points")
        if self.geometry.mode not in ("uniform", "sampled"):
            raise ConfigError("$.geometry.mode", "must be 'uniform' or 'sampled'")
        for name in ("gamma_re", "gamma_r"):
            if getattr(self, name) < 0:
                raise ConfigError(f"$.{name}", "must be >= 0")
        try:
            self.pulse_schedule()
        except (TypeError, ValueError) as exc:
            raise ConfigError("$.schedule", str(exc)) from exc
        try:
            self.atom_rates()
        except (TypeError, ValueError) as exc:
            raise ConfigError("$.rate_overrides", str(exc)) from exc

    # -- resolution to engine objects ----------------------------------

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(Scheme(self.scheme), **self.scheme_params)

    def atom_rates(self) -> AtomRates:
        base = self.scheme_config().rates(self.gamma_re, self.gamma_r)
        return base.replace(**self.rate_overrides) if self.rate_overrides else base

    def pulse_schedule(self) -> PulseSchedule:
        return PulseSchedule.from_dict(self.schedule)

    def w_max(self) -> float:
        s = self.pulse_schedule()
        return excitation_linewidth(s.omega_ge_peak, s.omega_er_level, self.atom_rates().gamma_e_total)

    def build_geometry(self, n: int) -> EnsembleGeometry:
        g = self.geometry
        if g.mode == "uniform":
            delta = g.delta if g.delta is not None else g.blockade_factor * self.w_max()
            return uniform_blockade_geometry(n, delta)
        return sample_positions(n, g.box_side, g.min_separation, g.seed + n, g.c6)

    def simulation(self, n: int) -> SimulationConfig:
        sched = self.pulse_schedule()
        return SimulationConfig(
            n_atoms=n,
            rates=self.atom_rates(),
            schedule=sched,
            geometry=self.build_geometry(n),
            output_times=tuple(np.linspace(0.0, sched.total_duration, self.output_points)),
            prune=self.prune,
            rtol=self.rtol,
            atol=self.atol,
            max_step_scale=self.max_step_scale,
        )


def load_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError("--preset", f"unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files("rydfilter.presets").joinpath(f"{name}.json").read_text()
    cfg = RunConfig.from_dict(json.loads(text))
    cfg.preset = name
    return cfg


def parse_sweep(text: str) -> list[int]:
    """'1..10' -> [1, ..., 10]; '3' -> [3]; '1,3,5' -> [1, 3, 5]."""
    try:
        if ".." in text:
            a, b = text.split("..")
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError("--sweep", f"cannot parse {text!r}; use A..B") from None
