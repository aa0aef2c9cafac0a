import json

import pytest
from pydantic import ValidationError

from hedger.cache.file_cache import get_cache_dir
from hedger.config import ExperimentConfig, get_settings, load_config
from hedger.database import get_db_path
from hedger.errors import ConfigurationError
from tests.conftest import CONFIGS, FIXTURES


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.mode == "gbm"
    assert cfg.training.episodes == 5000
    assert cfg.training.steps == 25
    assert cfg.test.lambdas == [0.0, 0.03]
    assert not cfg.is_sv
    hp = cfg.training.hyperparams()
    assert hp.actor_lr == 5e-6 and hp.critic_lr == 5e-4
    assert hp.kappa == 0.005


@pytest.mark.parametrize("name", ["gbm", "gbm_mismatch", "sv_arbitrary", "sv_calibrated"])
def test_shipped_configs_validate(name):
    cfg = load_config(str(CONFIGS / f"{name}.json"))
    assert cfg.out.startswith("runs/")


def test_sv_arbitrary_config():
    cfg = load_config(str(CONFIGS / "sv_arbitrary.json"))
    params = cfg.model_params()
    assert (params.rho, params.nu, params.sigma0) == (-0.4, 0.1, 0.2)
    assert cfg.test.rebalances == 21
    assert cfg.option.maturity == pytest.approx(1 / 12)


def test_overrides_apply_over_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"option": {"strike": 95.0}, "test": {"n_paths": 50}}))
    cfg = load_config(str(path), {"test.n_paths": 10, "seeds.test": 7, "out": None})
    assert cfg.option.strike == 95.0
    assert cfg.test.n_paths == 10
    assert cfg.seeds.test == 7
    assert cfg.out == "runs/latest"


@pytest.mark.parametrize(
    "payload",
    [
        {"unknown": 1},
        {"test": {"lambdas": [-0.01]}},
        {"test": {"lambdas": []}},
        {"mode": "sv-arbitrary", "model": {"sigma_buyer": 0.24}},
        {"option": {"strike": 0}},
        {"seeds": {"train": -1}},
    ],
)
def test_invalid_configs(payload):
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(payload)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(str(tmp_path / "nope.json"))


def test_require_files(tmp_path):
    cfg = ExperimentConfig.model_validate(
        {"data": {"option_chain": str(FIXTURES / "option_chain.csv"), "symbol_params": str(tmp_path / "absent.json")}}
    )
    cfg.require_files("option_chain")
    with pytest.raises(ConfigurationError):
        cfg.require_files("symbol_params")
    with pytest.raises(ConfigurationError):
        cfg.require_files("agent")


def test_dump_echoes_config(tmp_path):
    cfg = ExperimentConfig.model_validate({"model": {"sigma_buyer": 0.24}})
    path = cfg.dump(tmp_path / "out" / "config.json")
    assert load_config(str(path)) == cfg


def test_settings_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HEDGER_LOG_LEVEL", "debug")
    settings = get_settings()
    assert settings.log_level == "DEBUG"
    assert settings.cache_dir == tmp_path / "cache"


def test_storage_paths_default_under_the_data_dir(tmp_path, monkeypatch):
    monkeypatch.delenv("HEDGER_CACHE_DIR")
    monkeypatch.delenv("HEDGER_DB_PATH")
    monkeypatch.setenv("HEDGER_DATA_DIR", str(tmp_path / "store"))
    assert get_cache_dir() == tmp_path / "store" / "cache"
    assert get_db_path() == tmp_path / "store" / "hedger_runs.db"


def test_input_files_follow_the_data_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("HEDGER_DATA_DIR", str(tmp_path))
    data = ExperimentConfig().data
    assert data.option_chain == str(tmp_path / "fixtures" / "option_chain.csv")
    assert data.reference == str(tmp_path / "reference" / "published_pnl.csv")
    assert ExperimentConfig.model_validate({"data": {"asset_paths": "x.csv"}}).data.asset_paths == "x.csv"
