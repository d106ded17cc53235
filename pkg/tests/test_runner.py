import json
import math
from pathlib import Path

import numpy as np
import pytest

from infra.errors import ConfigError, OvertakingError, ValidityError
from runner.commands import COMMANDS, Command, CommandResult, RunContext
from runner.outputs import Table, jsonable, read_csv, stable_hash, write_csv
from runner.run import (
    EXIT_CONFIG,
    EXIT_CONVERGENCE,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_VALIDITY,
    run,
)
from runner.scenario import apply_overrides, load_config, parse_config, resolve_tree
from runner.validity import Status, ValidityEntry, ValidityReport, classify, validity_report

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _minimal_tree() -> dict:
    return {
        "scenario": {"id": "minimal"},
        "beam": {
            "mean_current": 100e-6,
            "frequency_hz": 254e6,
            "mod_depth": 0.05,
            "drift_length": 1.0,
            "kinetic_energy": 18000.0,
            "waist": 50e-6,
            "impact_distance": 250e-6,
        },
        "system": {"kind": "k41_hyperfine"},
    }


def test_resolve_tree_fills_defaults() -> None:
    tree = resolve_tree(_minimal_tree())

    assert tree["scenario"]["seed"] == 0
    assert tree["beam"]["linewidth_hz"] == 0.0
    assert tree["system"]["moment_direction"] == [1.0, 0.0, 0.0]
    assert "solver" not in tree


def test_resolve_tree_rejects_unknown_names() -> None:
    raw = _minimal_tree()
    raw["beam"]["colour"] = "blue"
    with pytest.raises(ConfigError) as excinfo:
        resolve_tree(raw)
    assert excinfo.value.key_path == "beam.colour"

    with pytest.raises(ConfigError) as excinfo:
        resolve_tree({**_minimal_tree(), "extras": {}})
    assert excinfo.value.key_path == "extras"


def test_resolve_tree_reports_every_missing_key() -> None:
    raw = _minimal_tree()
    del raw["beam"]["waist"]
    del raw["beam"]["mod_depth"]

    with pytest.raises(ConfigError) as excinfo:
        resolve_tree(raw)
    assert "beam.waist" in excinfo.value.key_path
    assert "beam.mod_depth" in excinfo.value.key_path


def test_resolve_tree_type_checks() -> None:
    raw = _minimal_tree()
    raw["beam"]["mean_current"] = True
    with pytest.raises(ConfigError):
        resolve_tree(raw)

    raw = _minimal_tree()
    raw["system"]["kind"] = "cesium"
    with pytest.raises(ConfigError):
        resolve_tree(raw)

    raw = _minimal_tree()
    raw["beam"]["mean_current"] = 1
    assert resolve_tree(raw)["beam"]["mean_current"] == 1.0


def test_apply_overrides_parses_values_without_touching_input() -> None:
    raw = _minimal_tree()
    tree = apply_overrides(raw, ["beam.mean_current=2e-6", "scenario.id=other"])

    assert tree["beam"]["mean_current"] == 2e-6
    assert tree["scenario"]["id"] == "other"
    assert raw["beam"]["mean_current"] == 100e-6
    with pytest.raises(ConfigError):
        apply_overrides(raw, ["beam.mean_current"])
    with pytest.raises(ConfigError):
        apply_overrides(raw, ["mean_current=1"])


def test_parse_config_builds_records() -> None:
    config = parse_config(_minimal_tree())

    assert config.scenario_id == "minimal"
    assert config.solver().duration == 0.02
    assert config.beam_spec().mod_angular_freq == pytest.approx(2.0 * math.pi * 254e6)
    with pytest.raises(ConfigError):
        config.spectrum()

    raw = _minimal_tree()
    raw["beam"]["mod_depth"] = 1.5
    with pytest.raises(ConfigError) as excinfo:
        parse_config(raw)
    assert excinfo.value.key_path == "beam"


def test_shipped_configs_load() -> None:
    paths = sorted(CONFIGS.glob("*.toml"))
    assert paths
    for path in paths:
        assert load_config(path).scenario_id


def test_missing_config_file_is_config_error(tmp_path) -> None:
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")


def test_classify_thresholds() -> None:
    assert classify(0.005) is Status.PASS
    assert classify(0.05) is Status.WARN
    assert classify(0.5) is Status.FAIL


def test_k41_validity_passes() -> None:
    report = validity_report(load_config(CONFIGS / "k41.toml"))

    assert report.entry("overtaking").value == pytest.approx(0.48846, rel=1e-3)
    assert report.entry("continuity").status is Status.PASS
    assert report.entry("field_strength").status is Status.PASS
    report.enforce(("continuity",))


def test_nv_validity_needs_spikes() -> None:
    report = validity_report(load_config(CONFIGS / "nv.toml"))

    assert report.entry("continuity").status is Status.FAIL
    report.enforce()
    with pytest.raises(ValidityError) as excinfo:
        report.enforce(("continuity",))
    assert excinfo.value.condition == "continuity"


def test_overtaking_stops_the_report() -> None:
    config = load_config(CONFIGS / "k41.toml", ["beam.mod_depth=0.2"])
    report = validity_report(config)

    assert report.names() == ["overtaking"]
    with pytest.raises(OvertakingError):
        report.enforce()


def test_validity_entry_record_drops_infinities() -> None:
    entry = ValidityEntry("shot_damping", math.inf, 0.1, Status.FAIL)
    assert entry.to_record()["value"] is None
    assert ValidityReport([entry]).to_records()[0]["status"] == "fail"


def test_jsonable_converts_numpy_and_complex() -> None:
    value = {"a": np.float64(1.5), "b": np.array([1, 2]), "c": 1 + 2j, 3: math.nan}
    assert jsonable(value) == {"a": 1.5, "b": [1, 2], "c": [1.0, 2.0], "3": None}


def test_stable_hash_ignores_key_order() -> None:
    assert stable_hash({"a": 1, "b": 2}) == stable_hash({"b": 2, "a": 1})
    assert stable_hash({"a": 1}) != stable_hash({"a": 2})


def test_csv_tables(tmp_path) -> None:
    table = Table.from_columns("trace", t=np.array([0.0, 0.5]), b=np.array([1.0, -2.0]))
    path = write_csv(tmp_path / "nested", table)

    assert path.read_text().splitlines()[0] == "t,b"
    loaded = read_csv(path)
    assert loaded.columns == ["t", "b"]
    np.testing.assert_array_equal(loaded.data, table.data)
    with pytest.raises(ValueError):
        Table("bad", ["a", "b"], np.zeros((3, 3)))


def test_run_validity_writes_meta(tmp_path) -> None:
    outcome = run("validity", CONFIGS / "k41.toml", out_dir=tmp_path)

    assert outcome.exit_status == EXIT_OK
    assert outcome.out_dir == tmp_path / "k41" / "validity"
    meta = json.loads((outcome.out_dir / "meta.json").read_text())
    assert meta["seed"] == 41
    assert meta["scenario"] == "k41"
    assert meta["exit_status"] == EXIT_OK
    assert {"numpy", "scipy", "python"} <= set(meta["versions"])
    assert "continuity" in [item["name"] for item in meta["validity"]]
    assert len(meta["config_digest"]) == 64


def test_run_kepler_current_tables(tmp_path) -> None:
    outcome = run("kepler-current", CONFIGS / "k41.toml", out_dir=tmp_path, seed=5)

    assert outcome.exit_status == EXIT_OK
    assert outcome.artifacts == ["kepler_current.csv", "fourier.csv"]
    assert outcome.summary["max_fourier_rel_error"] < 1e-8
    meta = json.loads((outcome.out_dir / "meta.json").read_text())
    assert meta["seed"] == 5


def test_run_config_error_exit(tmp_path) -> None:
    outcome = run("validity", CONFIGS / "k41.toml", ["beam.bogus=1"], out_dir=tmp_path)

    assert outcome.exit_status == EXIT_CONFIG
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["error"]["key_path"] == "beam.bogus"
    assert run("validity", CONFIGS / "k41.toml", seed=-1, out_dir=tmp_path).exit_status == 2


def test_run_validity_failures_exit(tmp_path) -> None:
    outcome = run("bloch-mean", CONFIGS / "nv.toml", out_dir=tmp_path)
    assert outcome.exit_status == EXIT_VALIDITY
    meta = json.loads((outcome.out_dir / "meta.json").read_text())
    assert meta["error"]["condition"] == "continuity"

    overtaking = run(
        "kepler-current", CONFIGS / "k41.toml", ["beam.mod_depth=0.2"], out_dir=tmp_path
    )
    assert overtaking.exit_status == EXIT_VALIDITY
    assert overtaking.artifacts == []


def test_run_rejects_unknown_command(tmp_path) -> None:
    with pytest.raises(ValueError):
        run("teleport", CONFIGS / "k41.toml", out_dir=tmp_path)


TINY_QED = [
    "solver.log2_samples=3",
    "solver.scrambles=2",
    "solver.radial_nodes=8",
    "solver.angular_nodes=8",
    "wavepacket.impact_distances=[5e-8]",
]
LOOSE_TOLERANCES = ["solver.probability_tol=1000.0", "solver.overlap_tol=1000.0"]


def _header(path: Path) -> str:
    return path.read_text().splitlines()[0]


def _significant_digits(text: str) -> int:
    mantissa = text.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
    return len(mantissa)


def _meta(outcome) -> dict:
    return json.loads((outcome.out_dir / "meta.json").read_text())


def test_run_spectrum_compares_two_currents(tmp_path) -> None:
    outcome = run(
        "spectrum",
        CONFIGS / "spectrum.toml",
        ["spectrum.compare_current=20e-6"],
        out_dir=tmp_path,
    )

    assert outcome.exit_status == EXIT_OK
    assert outcome.artifacts == ["trace.csv", "spectrum.csv", "harmonics.csv"]
    assert _header(outcome.out_dir / "harmonics.csv") == "n,amplitude,ratio,expected_ratio"
    assert _header(outcome.out_dir / "spectrum.csv") == (
        "frequency_hz,amplitude,amplitude_re,amplitude_im"
    )
    summary = outcome.summary
    assert summary["periods"] == 1000
    assert abs(summary["peak_frequency_hz"] - 254e6) <= summary["bin_width_hz"]
    assert summary["noise_floor"]["ratio"] == pytest.approx(1.0, abs=0.2)
    compare = summary["compare"]
    # SNR grows as the square root of the charge passing during the trace
    assert compare["expected_snr_ratio"] == pytest.approx(math.sqrt(10.0))
    assert compare["snr_ratio"] == pytest.approx(compare["expected_snr_ratio"], rel=0.2)
    assert _meta(outcome)["summary"]["compare"]["periods"] == 100


def test_csv_values_carry_twelve_significant_digits(tmp_path) -> None:
    outcome = run(
        "spectrum", CONFIGS / "spectrum.toml", ["spectrum.compare_current=0.0"], out_dir=tmp_path
    )
    rows = (outcome.out_dir / "trace.csv").read_text().splitlines()
    times = [row.split(",")[0] for row in rows[1:200]]

    assert rows[0] == "t,field"
    assert max(_significant_digits(value) for value in times) == 12
    loaded = read_csv(outcome.out_dir / "trace.csv")
    assert loaded.data.shape == (32000, 2)


def test_run_bloch_mean_flops_at_the_rabi_frequency(tmp_path) -> None:
    outcome = run("bloch-mean", CONFIGS / "k41.toml", out_dir=tmp_path)

    assert outcome.exit_status == EXIT_OK
    assert outcome.artifacts == ["bloch_mean.csv"]
    assert _header(outcome.out_dir / "bloch_mean.csv") == (
        "t,rho_ee,rho_gg,rho_eg_re,rho_eg_im,inversion"
    )
    summary = outcome.summary
    assert summary["rabi"] == pytest.approx(3339.0, rel=1e-3)
    assert summary["dephasing"] == pytest.approx(math.pi * 25.0)
    assert summary["first_max_inversion"] >= 0.9
    assert summary["first_max_time"] == pytest.approx(math.pi / summary["rabi"], rel=0.02)
    assert abs(summary["frequency_error"]) < 0.01


def test_run_bloch_shot_stays_on_the_mean_field(tmp_path) -> None:
    outcome = run("bloch-shot", CONFIGS / "k41.toml", out_dir=tmp_path)

    assert outcome.exit_status == EXIT_OK
    assert outcome.artifacts == ["bloch_shot.csv"]
    assert _header(outcome.out_dir / "bloch_shot.csv") == (
        "t,inversion_shot,inversion_reference,deviation"
    )
    assert outcome.summary["shot_damping"] >= 0.0
    assert outcome.summary["single_electron_probability"] > 0.0
    assert outcome.summary["max_deviation"] < 1e-4


def test_run_bloch_spikes_on_a_short_window(tmp_path) -> None:
    overrides = ["solver.duration=2e-6", "solver.n_times=11", "solver.realizations=2"]
    outcome = run("bloch-spikes", CONFIGS / "nv.toml", overrides, out_dir=tmp_path, workers=2)

    assert outcome.exit_status == EXIT_OK
    assert outcome.artifacts == ["bloch_spikes.csv"]
    table = read_csv(outcome.out_dir / "bloch_spikes.csv")
    assert table.data.shape == (11, 6)
    summary = outcome.summary
    assert summary["realizations"] == 2
    assert summary["electrons_per_sample"] == 1000.0
    assert summary["samples"] > 0
    assert summary["max_trace_error"] < 1e-9
    # far less than one Rabi period fits the window
    assert summary["first_max_time"] is None
    continuity = [item for item in _meta(outcome)["validity"] if item["name"] == "continuity"]
    assert continuity[0]["status"] == "fail"


def test_run_probability_on_a_tiny_grid(tmp_path) -> None:
    outcome = run(
        "probability",
        CONFIGS / "qed_backaction.toml",
        TINY_QED + LOOSE_TOLERANCES,
        out_dir=tmp_path,
    )

    assert outcome.exit_status == EXIT_OK
    assert outcome.artifacts == ["probability.csv"]
    assert _header(outcome.out_dir / "probability.csv") == (
        "impact_distance,rho,P_semiclassical,P_plus,P_minus,ratio,"
        "err_plus,err_minus,overlap_re,overlap_im"
    )
    table = read_csv(outcome.out_dir / "probability.csv")
    assert table.data[0, 1] == pytest.approx(10.0)
    summary = outcome.summary
    assert summary["P_magnetic"] > 0.0
    assert summary["P_electric"] > 0.0
    assert len(summary["backaction"]) == 1
    assert {"P_plus", "P_minus", "ratio"} <= set(summary["backaction"][0])


def test_run_probability_exits_4_when_refinement_runs_out(tmp_path) -> None:
    tight = ["solver.probability_tol=1e-12", "solver.overlap_tol=1e-12"]
    outcome = run(
        "probability",
        CONFIGS / "qed_backaction.toml",
        TINY_QED + tight,
        out_dir=tmp_path,
        max_refinements=0,
    )

    assert outcome.exit_status == EXIT_CONVERGENCE
    assert outcome.artifacts == []
    meta = _meta(outcome)
    assert meta["exit_status"] == EXIT_CONVERGENCE
    assert meta["error"]["type"] == "ConvergenceError"
    assert meta["error"]["error_estimate"] > 1e-12
    assert "P_plus" in meta["error"]["partial"]


def test_run_overlap_on_a_tiny_grid(tmp_path) -> None:
    outcome = run("overlap", CONFIGS / "qed_backaction.toml", TINY_QED, out_dir=tmp_path)

    assert outcome.exit_status == EXIT_OK
    assert outcome.artifacts == ["overlap.csv"]
    assert _header(outcome.out_dir / "overlap.csv") == (
        "impact_distance,rho,overlap_abs,overlap_re,overlap_im,error"
    )
    assert outcome.summary["samples"] == 2 * 2 * 2**3
    assert math.isfinite(outcome.summary["min_overlap_abs"])


def test_run_rabi_profile_resolves_forty_nanometres(tmp_path) -> None:
    outcome = run("rabi-profile", CONFIGS / "nanoscale.toml", out_dir=tmp_path)

    assert outcome.exit_status == EXIT_OK
    assert outcome.artifacts == ["rabi_profile.csv"]
    assert _header(outcome.out_dir / "rabi_profile.csv") == "position,rabi_per_ampere"
    summary = outcome.summary
    assert summary["trajectory"] == "circular_section"
    assert summary["fwhm"] == pytest.approx(40.5e-9, rel=0.02)
    assert summary["tail_slope"] == pytest.approx(-1.92, abs=0.02)
    assert 0.0 <= summary["electric_loss"]["no_excitation"] <= 1.0


def test_run_loss_estimate(tmp_path) -> None:
    outcome = run("loss-estimate", CONFIGS / "k41.toml", out_dir=tmp_path)

    assert outcome.exit_status == EXIT_OK
    assert outcome.artifacts == ["loss.csv"]
    table = read_csv(outcome.out_dir / "loss.csv")
    assert table.columns == ["t", "fraction"]
    assert table.data.shape == (201, 2)
    assert np.all(np.diff(table.data[:, 1]) >= 0.0)
    summary = outcome.summary
    assert 0.0 <= summary["final_fraction"] <= 1.0
    assert summary["doppler_detuning_hz"] == pytest.approx(0.393, rel=0.01)
    assert summary["lamb_dicke"] > 0.0


def test_unexpected_errors_still_write_meta(tmp_path, monkeypatch) -> None:
    def broken(ctx: RunContext) -> CommandResult:
        raise FloatingPointError("overflow in a command")

    monkeypatch.setitem(COMMANDS, "loss-estimate", Command("loss-estimate", broken, "broken"))
    outcome = run("loss-estimate", CONFIGS / "k41.toml", out_dir=tmp_path)

    assert outcome.exit_status == EXIT_INTERNAL
    meta = _meta(outcome)
    assert meta["exit_status"] == EXIT_INTERNAL
    assert meta["error"] == {"type": "FloatingPointError", "message": "overflow in a command"}
    assert "wall_time_s" in meta
