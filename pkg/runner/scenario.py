"""Scenario configuration: strict TOML schema and the records built from it."""

from __future__ import annotations

import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from beam.kinematics import kinematics_from_energy
from beam.klystron import BeamSpec
from infra.errors import ConfigError
from interaction.two_level import (
    SystemKind,
    TwoLevelSystem,
    k41_clock_system,
    nv_spin_system,
    nv_zpl_system,
)
from qed.params import FINE_GRID, Direction, GridResolution, WavePacketSpec

_REQUIRED = object()


@dataclass(frozen=True)
class KeySpec:
    kind: str
    default: object = _REQUIRED
    choices: tuple[str, ...] = ()

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED


SCHEMA: dict[str, dict[str, KeySpec]] = {
    "scenario": {
        "id": KeySpec("str"),
        "description": KeySpec("str", ""),
        "seed": KeySpec("int", 0),
    },
    "beam": {
        "mean_current": KeySpec("float"),
        "frequency_hz": KeySpec("float"),
        "mod_depth": KeySpec("float"),
        "drift_length": KeySpec("float"),
        "kinetic_energy": KeySpec("float"),
        "waist": KeySpec("float"),
        "impact_distance": KeySpec("float"),
        "linewidth_hz": KeySpec("float", 0.0),
        "energy_spread": KeySpec("float", 0.0),
        "divergence": KeySpec("float", 0.0),
    },
    "system": {
        "kind": KeySpec("str", choices=tuple(kind.value for kind in SystemKind)),
        "frequency_hz": KeySpec("float", 0.0),
        "moment": KeySpec("float", 0.0),
        "moment_direction": KeySpec("floats", [1.0, 0.0, 0.0]),
        "t1": KeySpec("float", 0.0),
        "t2": KeySpec("float", 0.0),
        "optical_dipole": KeySpec("floats", []),
    },
    "wavepacket": {
        "delta_r_perp": KeySpec("float"),
        "delta_z0": KeySpec("float"),
        "impact_distances": KeySpec("floats"),
        "kinetic_energy": KeySpec("float", 0.0),
        "offset_direction": KeySpec("floats", [0.0, 1.0]),
        "total_path": KeySpec("float", 1.0),
        "direction": KeySpec(
            "str", Direction.EMISSION.value, tuple(item.value for item in Direction)
        ),
        "electric": KeySpec("bool", False),
    },
    "solver": {
        "duration": KeySpec("float", 0.02),
        "n_times": KeySpec("int", 2001),
        "rel_tol": KeySpec("float", 1e-10),
        "abs_tol": KeySpec("float", 1e-12),
        "realizations": KeySpec("int", 12),
        "electrons_per_sample": KeySpec("float", 1.0),
        "substeps": KeySpec("int", 64),
        "log2_samples": KeySpec("int", 9),
        "scrambles": KeySpec("int", 8),
        "radial_nodes": KeySpec("int", 128),
        "angular_nodes": KeySpec("int", 128),
        "tensor_grid": KeySpec("bool", False),
        "hermite_nodes": KeySpec("int", 16),
        "probability_tol": KeySpec("float", 0.05),
        "overlap_tol": KeySpec("float", 0.005),
        "kepler_samples": KeySpec("int", 1024),
    },
    "spectrum": {
        "n_periods": KeySpec("int"),
        "desk_periods": KeySpec("int", 0),
        "samples_per_period": KeySpec("int", 32),
        "harmonics": KeySpec("int", 5),
        "mode": KeySpec("str", "auto", ("auto", "pulse", "impulse")),
        "compare_current": KeySpec("float", 0.0),
        "compare_periods": KeySpec("int", 0),
    },
    "profile": {
        "trajectory": KeySpec("str", choices=("static", "linear", "circular_section")),
        "min_distance": KeySpec("float"),
        "span": KeySpec("float"),
        "harmonic": KeySpec("int", 1),
        "axis": KeySpec("floats", [1.0, 0.0]),
        "tail_from": KeySpec("float", 0.0),
        "n_positions": KeySpec("int", 401),
        "bunching": KeySpec("float", 0.5),
        "kinetic_energy": KeySpec("float", 0.0),
        "waist": KeySpec("float", 0.0),
        "refractive_index": KeySpec("float", 1.0),
        "hermite_nodes": KeySpec("int", 12),
        "electric_loss": KeySpec("bool", True),
    },
    "loss": {
        "cross_section": KeySpec("float", 1.5e-21),
        "density_fraction": KeySpec("float", 1e-3),
        "duration": KeySpec("float", 0.02),
        "n_times": KeySpec("int", 201),
        "atom_mass_u": KeySpec("float", 40.96182526),
        "trap_frequency_hz": KeySpec("float", 300e3),
        "recoil_momentum": KeySpec("float", 0.0),
        "atom_speed": KeySpec("float", 0.0),
    },
}

REQUIRED_SECTIONS = ("scenario", "beam", "system")


@dataclass(frozen=True)
class SolverOptions:
    duration: float
    n_times: int
    rel_tol: float
    abs_tol: float
    realizations: int
    electrons_per_sample: float
    substeps: int
    log2_samples: int
    scrambles: int
    radial_nodes: int
    angular_nodes: int
    tensor_grid: bool
    hermite_nodes: int
    probability_tol: float
    overlap_tol: float
    kepler_samples: int

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.n_times < 2:
            raise ValueError("n_times must be at least 2")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.realizations <= 0:
            raise ValueError("realizations must be positive")
        if self.electrons_per_sample < 1.0:
            raise ValueError("electrons_per_sample must be at least 1")
        if self.substeps <= 0:
            raise ValueError("substeps must be positive")
        if self.probability_tol <= 0 or self.overlap_tol <= 0:
            raise ValueError("probability_tol and overlap_tol must be positive")
        if self.kepler_samples < 8:
            raise ValueError("kepler_samples must be at least 8")


@dataclass(frozen=True)
class SpectrumOptions:
    n_periods: int
    desk_periods: int
    samples_per_period: int
    harmonics: int
    mode: str
    compare_current: float
    compare_periods: int

    def __post_init__(self) -> None:
        if self.n_periods <= 0:
            raise ValueError("n_periods must be positive")
        if self.desk_periods < 0 or self.compare_periods < 0:
            raise ValueError("desk_periods and compare_periods must be non-negative")
        if self.harmonics <= 0:
            raise ValueError("harmonics must be positive")
        if self.compare_current < 0:
            raise ValueError("compare_current must be non-negative")

    def periods(self, full: bool) -> int:
        if full or self.desk_periods == 0:
            return self.n_periods
        return min(self.n_periods, self.desk_periods)


@dataclass(frozen=True)
class ProfileOptions:
    trajectory: str
    min_distance: float
    span: float
    harmonic: int
    axis: list[float]
    tail_from: float
    n_positions: int
    bunching: float
    kinetic_energy: float
    waist: float
    refractive_index: float
    hermite_nodes: int
    electric_loss: bool

    def __post_init__(self) -> None:
        if self.min_distance <= 0 or self.span <= 0:
            raise ValueError("min_distance and span must be positive")
        if self.harmonic not in (1, 2):
            raise ValueError("harmonic must be 1 or 2")
        if len(self.axis) != 2 or not any(self.axis):
            raise ValueError("axis must be a non-zero 2-vector")
        if self.tail_from < 0:
            raise ValueError("tail_from must be non-negative")
        if self.n_positions < 3:
            raise ValueError("n_positions must be at least 3")
        if not 0.0 <= self.bunching < 1.0:
            raise ValueError("bunching must be in [0, 1)")
        if self.kinetic_energy < 0 or self.waist < 0:
            raise ValueError("kinetic_energy and waist must be non-negative")
        if self.refractive_index < 1.0:
            raise ValueError("refractive_index must be at least 1")


@dataclass(frozen=True)
class LossOptions:
    cross_section: float
    density_fraction: float
    duration: float
    n_times: int
    atom_mass_u: float
    trap_frequency_hz: float
    recoil_momentum: float
    atom_speed: float

    def __post_init__(self) -> None:
        if self.cross_section < 0:
            raise ValueError("cross_section must be non-negative")
        if not 0.0 < self.density_fraction <= 1.0:
            raise ValueError("density_fraction must be in (0, 1]")
        if self.duration <= 0 or self.n_times < 2:
            raise ValueError("duration must be positive and n_times at least 2")
        if self.atom_mass_u <= 0 or self.trap_frequency_hz <= 0:
            raise ValueError("atom_mass_u and trap_frequency_hz must be positive")
        if self.recoil_momentum < 0:
            raise ValueError("recoil_momentum must be non-negative")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario tree with every default filled in.

    tree keeps the resolved values by section so the digest covers exactly
    what the run used.
    """

    tree: dict[str, dict[str, Any]]
    source: str = ""

    @property
    def scenario_id(self) -> str:
        return str(self.tree["scenario"]["id"])

    @property
    def seed(self) -> int:
        return int(self.tree["scenario"]["seed"])

    def has(self, section: str) -> bool:
        return section in self.tree

    def section(self, name: str) -> dict[str, Any]:
        if name not in self.tree:
            raise ConfigError("section is required by this command", key_path=name)
        return self.tree[name]

    def beam_spec(self) -> BeamSpec:
        return build_beam_spec(self.tree["beam"])

    def system(self) -> TwoLevelSystem:
        return build_system(self.tree["system"])

    def optical_system(self) -> TwoLevelSystem | None:
        dipole = self.tree["system"]["optical_dipole"]
        if not dipole:
            return None
        return nv_zpl_system(tuple(dipole))

    def solver(self) -> SolverOptions:
        return _record(SolverOptions, "solver", self.tree.get("solver", _defaults("solver")))

    def spectrum(self) -> SpectrumOptions:
        return _record(SpectrumOptions, "spectrum", self.section("spectrum"))

    def profile(self) -> ProfileOptions:
        return _record(ProfileOptions, "profile", self.section("profile"))

    def loss(self) -> LossOptions:
        return _record(LossOptions, "loss", self.tree.get("loss", _defaults("loss")))

    def wave_packets(self) -> list[WavePacketSpec]:
        return build_wave_packets(self.section("wavepacket"), self.tree["beam"])

    def direction(self) -> Direction:
        return Direction(self.section("wavepacket")["direction"])

    def grid(self, full: bool = False) -> GridResolution:
        solver = self.solver()
        grid = _record(
            GridResolution,
            "solver",
            {
                "log2_samples": solver.log2_samples,
                "scrambles": solver.scrambles,
                "radial_nodes": solver.radial_nodes,
                "angular_nodes": solver.angular_nodes,
                "seed": self.seed,
                "tensor_grid": solver.tensor_grid,
                "hermite_nodes": solver.hermite_nodes,
            },
        )
        if not full:
            return grid
        return GridResolution(
            log2_samples=max(grid.log2_samples, FINE_GRID.log2_samples),
            scrambles=max(grid.scrambles, FINE_GRID.scrambles),
            radial_nodes=max(grid.radial_nodes, FINE_GRID.radial_nodes),
            angular_nodes=max(grid.angular_nodes, FINE_GRID.angular_nodes),
            seed=grid.seed,
            tensor_grid=grid.tensor_grid,
            hermite_nodes=max(grid.hermite_nodes, FINE_GRID.hermite_nodes),
        )

    def electrons_per_sample(self, full: bool = False) -> float:
        return 1.0 if full else self.solver().electrons_per_sample


def _defaults(section: str) -> dict[str, Any]:
    return {key: spec.default for key, spec in SCHEMA[section].items()}


def _record(cls: Any, path: str, values: Mapping[str, Any]) -> Any:
    try:
        return cls(**values)
    except ValueError as exc:
        raise ConfigError(str(exc), key_path=path) from exc


def _coerce(value: Any, spec: KeySpec, path: str) -> Any:
    if spec.kind == "str":
        if not isinstance(value, str):
            raise ConfigError("expected a string", key_path=path)
        if spec.choices and value not in spec.choices:
            raise ConfigError(f"expected one of {', '.join(spec.choices)}", key_path=path)
        return value
    if spec.kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError("expected true or false", key_path=path)
        return value
    if spec.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("expected an integer", key_path=path)
        return value
    if spec.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("expected a number", key_path=path)
        if not math.isfinite(value):
            raise ConfigError("expected a finite number", key_path=path)
        return float(value)
    if not isinstance(value, list) or any(
        isinstance(item, bool) or not isinstance(item, (int, float)) for item in value
    ):
        raise ConfigError("expected a list of numbers", key_path=path)
    return [float(item) for item in value]


def resolve_tree(raw: Mapping[str, Any]) -> dict[str, dict[str, Any]]:
    """Check a parsed tree against SCHEMA and fill in defaults.

    Unknown sections and keys fail on the first one found; missing required
    keys are collected and reported together.
    """
    for name, body in raw.items():
        if name not in SCHEMA:
            raise ConfigError("unknown section", key_path=name)
        if not isinstance(body, dict):
            raise ConfigError("expected a table", key_path=name)
        for key in body:
            if key not in SCHEMA[name]:
                raise ConfigError("unknown key", key_path=f"{name}.{key}")

    missing: list[str] = []
    resolved: dict[str, dict[str, Any]] = {}
    for name, keys in SCHEMA.items():
        if name not in raw and name not in REQUIRED_SECTIONS:
            continue
        body = raw.get(name, {})
        section: dict[str, Any] = {}
        for key, spec in keys.items():
            path = f"{name}.{key}"
            if key in body:
                section[key] = _coerce(body[key], spec, path)
            elif spec.required:
                missing.append(path)
            else:
                default = spec.default
                section[key] = list(default) if isinstance(default, list) else default
        resolved[name] = section
    if missing:
        raise ConfigError("missing required keys", key_path=", ".join(missing))
    return resolved


def _override_value(text: str) -> Any:
    try:
        return tomllib.loads(f"value = {text}")["value"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: Mapping[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Copy of raw with each section.key=value override applied."""
    tree: dict[str, Any] = {
        name: dict(body) if isinstance(body, dict) else body for name, body in raw.items()
    }
    for item in overrides:
        if "=" not in item:
            raise ConfigError("override must look like section.key=value", key_path=item)
        path, text = item.split("=", 1)
        parts = path.strip().split(".")
        if len(parts) != 2 or not all(parts):
            raise ConfigError("override key must be section.key", key_path=path.strip())
        section, key = parts
        body = tree.setdefault(section, {})
        if not isinstance(body, dict):
            raise ConfigError("expected a table", key_path=section)
        body[key] = _override_value(text.strip())
    return tree


def build_beam_spec(beam: Mapping[str, Any]) -> BeamSpec:
    try:
        return BeamSpec(
            mean_current=beam["mean_current"],
            mod_angular_freq=2.0 * math.pi * beam["frequency_hz"],
            mod_depth=beam["mod_depth"],
            drift_length=beam["drift_length"],
            kinematics=kinematics_from_energy(beam["kinetic_energy"]),
            waist=beam["waist"],
            impact_distance=beam["impact_distance"],
            linewidth=2.0 * math.pi * beam["linewidth_hz"],
            energy_spread=beam["energy_spread"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc), key_path="beam") from exc


def _rate(lifetime: float) -> float:
    return 1.0 / lifetime if lifetime > 0 else 0.0


def build_system(system: Mapping[str, Any]) -> TwoLevelSystem:
    kind = SystemKind(system["kind"])
    gamma1 = _rate(system["t1"])
    gamma2 = _rate(system["t2"])
    direction = np.asarray(system["moment_direction"], dtype=float)
    try:
        if direction.shape != (3,) or not np.any(direction):
            raise ValueError("moment_direction must be a non-zero 3-vector")
        if system["optical_dipole"] and len(system["optical_dipole"]) != 3:
            raise ValueError("optical_dipole must be a 3-vector")
        unit = direction / np.linalg.norm(direction)
        if kind is SystemKind.GENERIC:
            if system["frequency_hz"] <= 0 or system["moment"] <= 0:
                raise ValueError("generic systems need positive frequency_hz and moment")
            return TwoLevelSystem(
                omega0=2.0 * math.pi * system["frequency_hz"],
                kind=kind,
                magnetic_moment=system["moment"] * unit,
                gamma1=gamma1,
                gamma2=gamma2,
            )
        if system["frequency_hz"] or system["moment"]:
            raise ValueError("frequency_hz and moment are fixed for this kind")
        base = k41_clock_system() if kind is SystemKind.K41_HYPERFINE else nv_spin_system()
        return TwoLevelSystem(base.omega0, kind, unit, None, gamma1, gamma2)
    except ValueError as exc:
        raise ConfigError(str(exc), key_path="system") from exc


def build_wave_packets(
    packet: Mapping[str, Any], beam: Mapping[str, Any]
) -> list[WavePacketSpec]:
    """One packet per impact distance, offset along offset_direction."""
    direction = np.asarray(packet["offset_direction"], dtype=float)
    if direction.shape != (2,) or not np.any(direction):
        raise ConfigError("expected a non-zero 2-vector", key_path="wavepacket.offset_direction")
    if not packet["impact_distances"]:
        raise ConfigError("expected at least one distance", key_path="wavepacket.impact_distances")
    unit = direction / np.linalg.norm(direction)
    energy = packet["kinetic_energy"] or beam["kinetic_energy"]
    try:
        return [
            WavePacketSpec(
                delta_r_perp=packet["delta_r_perp"],
                delta_z0=packet["delta_z0"],
                kinetic_energy=energy,
                impact_offset=(float(r * unit[0]), float(r * unit[1])),
                total_path=packet["total_path"],
            )
            for r in packet["impact_distances"]
        ]
    except ValueError as exc:
        raise ConfigError(str(exc), key_path="wavepacket") from exc


def parse_config(raw: Mapping[str, Any], source: str = "") -> ScenarioConfig:
    """Resolve a parsed tree and build every record once so errors surface early."""
    config = ScenarioConfig(resolve_tree(raw), source)
    config.beam_spec()
    config.system()
    config.solver()
    for name, build in (
        ("spectrum", config.spectrum),
        ("profile", config.profile),
        ("loss", config.loss),
        ("wavepacket", config.wave_packets),
    ):
        if config.has(name):
            build()
    return config


def load_config(path: str | Path, overrides: list[str] | None = None) -> ScenarioConfig:
    config_path = Path(path)
    try:
        raw = tomllib.loads(config_path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError("config file not found", key_path=str(config_path)) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML ({exc})", key_path=str(config_path)) from exc
    return parse_config(apply_overrides(raw, overrides or []), str(config_path))
