import json

import pytest

from scarkit.config import GridConfig, RunConfig, SpectralConfig
from scarkit.errors import ConfigError


def test_spectral_defaults():
    cfg = SpectralConfig()
    assert (cfg.r, cfg.C, cfg.c, cfg.tau) == (100.0, 4.0, 0.5, 0.5)
    assert cfg.L == 10
    assert cfg.u_cut(1.0) == pytest.approx(0.2)
    assert cfg.b == pytest.approx(100 ** 0.25 * (30 / 201) ** 0.5)
    assert cfg.s_max == 260.0


@pytest.mark.parametrize("bad", [{"tau": 1.0}, {"tau": 0.0}, {"eta": 1.0}, {"C": 0.0},
                                 {"r": 3.0}, {"c": -1.0}, {"N": 0.0}])
def test_spectral_validation(bad):
    with pytest.raises(ConfigError):
        SpectralConfig(**bad)


def test_small_C_is_allowed_but_not_strict():
    cfg = SpectralConfig(C=0.5)
    assert not cfg.strict and SpectralConfig().strict


def test_run_config_roundtrip(tmp_path):
    run = RunConfig(spectral=SpectralConfig(r=50.0), grid=GridConfig(n_t=16), N_sweep=(0.5, 1.0),
                    seed=7, basis_count=3)
    again = RunConfig.from_dict(json.loads(run.dumps()))
    assert again == run
    path = tmp_path / "run.json"
    path.write_text(run.dumps())
    assert RunConfig.load(path) == run


@pytest.mark.parametrize("bad", [{"nope": 1}, {"spectral": {"q": 1}}, {"target_fraction": 0.0},
                                 {"k3_max": -1.0}, {"N_sweep": []}, {"N_sweep": [1.0, -2.0]}])
def test_run_config_validation(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "absent.json")
