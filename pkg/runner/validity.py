"""Physics validity conditions evaluated for a scenario before it runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from beam.kinematics import kinematics_from_energy, modulation_wavelength
from beam.klystron import fourier_coefficient, velocity_spread_effect
from bloch.drive import rabi_from_current
from ensemble.statistics import continuity_condition
from infra.errors import OvertakingError, ValidityError
from interaction.estimates import momentum_shift_check
from numerics.constants import (
    CLASSICAL_ELECTRON_RADIUS,
    COMPTON_WAVELENGTH,
    ELECTRON_MASS,
    ELEMENTARY_CHARGE,
    FINE_STRUCTURE,
    HBAR,
)
from runner.scenario import ScenarioConfig

# a condition written as x << 1 passes below PASS_RATIO and warns below WARN_RATIO
PASS_RATIO = 0.01
WARN_RATIO = 0.1


class Status(str, Enum):
    PASS = "pass"
    WARN = "warn"
    FAIL = "fail"
    ADVISORY = "advisory"


@dataclass(frozen=True)
class ValidityEntry:
    name: str
    value: float
    threshold: float
    status: Status
    note: str = ""
    hard: bool = False

    def to_record(self) -> dict[str, object]:
        return {
            "name": self.name,
            "value": self.value if math.isfinite(self.value) else None,
            "threshold": self.threshold,
            "status": self.status.value,
            "note": self.note,
        }


@dataclass(frozen=True)
class ValidityReport:
    entries: list[ValidityEntry] = field(default_factory=list)

    def entry(self, name: str) -> ValidityEntry:
        for item in self.entries:
            if item.name == name:
                return item
        raise KeyError(name)

    def names(self) -> list[str]:
        return [item.name for item in self.entries]

    def to_records(self) -> list[dict[str, object]]:
        return [item.to_record() for item in self.entries]

    def enforce(self, required: tuple[str, ...] = ()) -> None:
        """Raise for hard failures and for failures of the conditions a command needs."""
        for item in self.entries:
            if item.status is not Status.FAIL:
                continue
            if item.name == "overtaking":
                raise OvertakingError(item.note)
            if item.hard or item.name in required:
                raise ValidityError(item.name, item.note or f"ratio {item.value:.3g} too large")


def classify(ratio: float) -> Status:
    if ratio < PASS_RATIO:
        return Status.PASS
    if ratio < WARN_RATIO:
        return Status.WARN
    return Status.FAIL


def _small(name: str, ratio: float, fail_note: str = "") -> ValidityEntry:
    status = classify(ratio)
    note = fail_note if status is Status.FAIL else ""
    return ValidityEntry(name, ratio, WARN_RATIO, status, note)


def validity_report(config: ScenarioConfig) -> ValidityReport:
    """Evaluate every condition that applies to the configured beam and packet."""
    spec = config.beam_spec()
    kin = spec.kinematics
    v0 = kin.velocity
    r_b = spec.drift_length * spec.mod_angular_freq * spec.velocity_amplitude / v0**2
    if r_b >= 1.0:
        note = f"bunching parameter r_b={r_b:.6g} >= 1, electrons overtake each other"
        return ValidityReport(
            [ValidityEntry("overtaking", r_b, 1.0, Status.FAIL, note, hard=True)]
        )
    entries = [ValidityEntry("overtaking", r_b, 1.0, Status.PASS, hard=True)]

    d = spec.impact_distance
    entries.append(
        _small(
            "continuity",
            continuity_condition(spec),
            "too few electrons per field correlation time for a mean field; use bloch-spikes",
        )
    )

    resonant = fourier_coefficient(1, r_b, spec.mean_current) if r_b > 0 else 0.0
    if resonant > 0:
        damping = 2.0 * CLASSICAL_ELECTRON_RADIUS * spec.mean_current / (resonant * d)
    else:
        damping = math.inf
    entries.append(_small("shot_damping", damping, "shot-noise damping rivals the drive"))

    peak_current = spec.mean_current / (1.0 - r_b)
    length = COMPTON_WAVELENGTH * FINE_STRUCTURE / (2.0 * math.pi)
    peak = length**2 * peak_current / (ELEMENTARY_CHARGE * kin.gamma * v0 * d)
    entries.append(_small("shot_damping_peak", peak, "shot-noise damping at the current peak"))

    divergence = 5.0 * config.tree["beam"]["divergence"] / kin.gamma
    entries.append(_small("divergence", divergence, "beam divergence is not negligible"))
    entries.append(
        _small("energy_spread", velocity_spread_effect(spec), "energy spread smears bunching")
    )

    system = config.system()
    duration = config.solver().duration
    rabi = rabi_from_current(system, resonant, d)
    weak = math.pi / (rabi * duration) if rabi > 0 else math.inf
    if weak > 1.0:
        entries.append(
            ValidityEntry(
                "field_strength",
                weak,
                1.0,
                Status.ADVISORY,
                "field too weak: less than half a Rabi flop within the run",
            )
        )
    else:
        entries.append(ValidityEntry("field_strength", weak, 1.0, Status.PASS))

    if config.has("wavepacket"):
        packet = config.wave_packets()[0]
        pkin = kinematics_from_energy(packet.kinetic_energy)
        entries.append(
            _small(
                "momentum_shift",
                momentum_shift_check(system, pkin, packet.delta_z0),
                "recoil is not small against the packet momentum spread",
            )
        )
        spread = HBAR * packet.total_path / (
            2.0 * ELECTRON_MASS * pkin.gamma**3 * pkin.velocity * packet.delta_z0
        )
        size = math.hypot(packet.delta_z0, spread)
        entries.append(
            _small(
                "packet_length",
                size / modulation_wavelength(pkin, system.omega0),
                "packet is not short against the modulation wavelength",
            )
        )
    return ValidityReport(entries)
