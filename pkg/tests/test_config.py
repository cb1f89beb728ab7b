from pathlib import Path

import pytest
from pydantic import ValidationError

from waveop2d.config import RunConfig, WorkbenchSettings
from waveop2d.exceptions import ConfigurationException

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_defaults_describe_the_full_size_experiment():
    config = RunConfig()
    assert config.grid.n == 256
    assert config.grid.spacing == pytest.approx(0.1875)
    assert config.energy.count == 128
    assert config.propagation.dt == 5e-4


def test_unknown_keys_are_rejected(make_config):
    with pytest.raises(ValidationError):
        make_config(grid={"bogus": 1})


def test_grid_size_must_be_a_power_of_two(make_config):
    with pytest.raises(ValidationError):
        make_config(grid={"n": 100})


def test_nyquist_margin(make_config):
    with pytest.raises(ValidationError, match="Nyquist"):
        make_config(energy={"lambda_max": 200.0})


def test_time_ladder_must_be_geometric(make_config):
    with pytest.raises(ValidationError):
        make_config(propagation={"t_ladder": [0.1, 0.3, 0.4]})


def test_unknown_check_names(make_config):
    with pytest.raises(ValidationError):
        make_config(verify={"checks": ["levinson", "nonsense"]})


def test_missing_file():
    with pytest.raises(ConfigurationException) as excinfo:
        RunConfig.from_file("missing.toml")
    assert excinfo.value.code == "NOT_FOUND"


def test_unsupported_format(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("grid: {}\n")
    with pytest.raises(ConfigurationException) as excinfo:
        RunConfig.from_file(path)
    assert excinfo.value.code == "FORMAT"


def test_toml_uses_box_alias():
    config = RunConfig.from_file(CONFIGS / "zero_quick.toml")
    assert config.grid.half_width == 8.0
    assert config.potential.tag == "zero"
    assert "levinson" in config.verify.checks


def test_json_round_trip(tmp_path, zero_config):
    path = tmp_path / "run.json"
    path.write_text(zero_config.model_dump_json(by_alias=True))
    assert RunConfig.from_file(path).config_hash() == zero_config.config_hash()


def test_hash_ignores_output_locations(zero_config, make_config):
    moved = zero_config.with_overrides(output_dir=Path("elsewhere"), cache_dir=Path("c"))
    assert moved.config_hash() == zero_config.config_hash()
    assert make_config(potential={"coupling": 0.0, "v_cut": 0.5}).config_hash() != \
        zero_config.config_hash()


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("WAVEOP2D_THREADS", "3")
    monkeypatch.setenv("WAVEOP2D_OUTPUT_DIR", "out")
    settings = WorkbenchSettings()
    assert settings.threads == 3
    assert settings.output_dir == Path("out")


def test_settings_from_dotenv(tmp_path, monkeypatch):
    monkeypatch.setenv("WAVEOP2D_LOG_LEVEL", "INFO")
    monkeypatch.delenv("WAVEOP2D_LOG_LEVEL")
    env_file = tmp_path / ".env"
    env_file.write_text("WAVEOP2D_LOG_LEVEL=DEBUG\n")
    assert WorkbenchSettings.from_env(env_file).log_level == "DEBUG"


@pytest.mark.parametrize(
    "path", sorted(CONFIGS.glob("*.toml")) + [CONFIGS.parent / "config.json"],
    ids=lambda p: p.name,
)
def test_shipped_configs_validate(path):
    config = RunConfig.from_file(path)
    assert config.config_hash()
