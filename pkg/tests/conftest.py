import numpy as np
import pytest

from waveop2d.config import RunConfig
from waveop2d.core.free_ops import make_energy_grid
from waveop2d.core.grid import WavePacketSpec, make_grid, make_packet
from waveop2d.core.potential import build_support, factorize, make_potential, sample_potential
from waveop2d.lab.base import ScatteringContext


@pytest.fixture(autouse=True)
def isolated_dirs(tmp_path, monkeypatch):
    """Keep log files and default outputs of every test inside its tmp dir"""
    monkeypatch.setenv("WAVEOP2D_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def grid():
    # h = 0.25, Nyquist margin sqrt(lambda) < 10.05
    return make_grid(64, 8.0)


@pytest.fixture
def wide_grid():
    return make_grid(128, 16.0)


@pytest.fixture
def gaussian():
    return make_potential("gaussian_well", 1.0, params={"range": 1.0})


@pytest.fixture
def zero_potential():
    return make_potential("zero", 0.0)


@pytest.fixture
def quad(grid, gaussian):
    return build_support(factorize(sample_potential(gaussian, grid)), 1e-2, 4000)


@pytest.fixture
def egrid():
    return make_energy_grid(32, 50.0, 1e-3)


@pytest.fixture
def packet(grid):
    return make_packet(grid, WavePacketSpec(momentum=(4.0, 0.0), width=1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def small_config(**sections) -> RunConfig:
    """Coarse experiment that validates on the n=64, L=8 grid"""
    data = {
        "grid": {"n": 64, "L_box": 8.0},
        "potential": {"tag": "zero", "coupling": 0.0},
        "energy": {"count": 32, "lambda_max": 50.0, "n_omega": 32},
        "verify": {"family": {"fine_count": 256, "fine_lambda_min": 4.0,
                              "fine_lambda_max": 40.0}},
    }
    for name, values in sections.items():
        merged = dict(data.get(name, {}))
        merged.update(values)
        data[name] = merged
    return RunConfig.model_validate(data)


@pytest.fixture
def zero_config():
    return small_config()


@pytest.fixture
def zero_context(zero_config):
    return ScatteringContext.from_config(zero_config)


@pytest.fixture
def make_config():
    return small_config
