import os

import pytest

from infra.config import load_dotenv, load_settings


def test_load_settings_defaults() -> None:
    settings = load_settings({})
    assert settings.log_path == "klystron.log"
    assert settings.workers == 1
    assert settings.out_dir == "out"
    assert settings.full_scale is False
    assert settings.max_refinements == 3


def test_load_settings_reads_environment_values() -> None:
    settings = load_settings(
        {
            "KLYSTRON_WORKERS": "4",
            "KLYSTRON_OUT_DIR": "runs",
            "KLYSTRON_FULL_SCALE": "Yes",
            "KLYSTRON_MAX_REFINEMENTS": "0",
        }
    )
    assert settings.workers == 4
    assert settings.out_dir == "runs"
    assert settings.full_scale is True
    assert settings.max_refinements == 0


@pytest.mark.parametrize(
    "env",
    [
        {"KLYSTRON_WORKERS": "0"},
        {"KLYSTRON_WORKERS": "many"},
        {"KLYSTRON_LOG_PATH": ""},
        {"KLYSTRON_MAX_REFINEMENTS": "-1"},
    ],
)
def test_invalid_settings_raise(env: dict[str, str]) -> None:
    with pytest.raises(ValueError):
        load_settings(env)


def test_load_dotenv_keeps_existing_values(tmp_path, monkeypatch) -> None:
    env_file = tmp_path / ".env"
    env_file.write_text("# local run\nKLYSTRON_WORKERS=3\nKLYSTRON_OUT_DIR=elsewhere\n")
    monkeypatch.delenv("KLYSTRON_WORKERS", raising=False)
    monkeypatch.setenv("KLYSTRON_OUT_DIR", "kept")

    load_dotenv(str(env_file))

    assert os.environ["KLYSTRON_WORKERS"] == "3"
    assert os.environ["KLYSTRON_OUT_DIR"] == "kept"
    monkeypatch.delenv("KLYSTRON_WORKERS")
