"""
Tests for layered configuration loading.
"""

from pathlib import Path

import pytest
import yaml

from src.config import Settings


@pytest.fixture
def config_file(temp_dir):
    path = temp_dir / "config.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "store": {"root": "/data/cvd", "fsync": False, "keep_manifests": 3},
                "partition": {"picker": "min_weight", "band": 0.95},
                "maintenance": {"gamma": "2x", "mu": 1.2, "check_every": 10},
                "bench": {"workers": 4},
                "logging": {"level": "debug"},
            }
        )
    )
    return path


@pytest.mark.unit
class TestSettings:
    def test_yaml_layer(self, config_file, monkeypatch):
        for var in ("CVDSTORE_ROOT", "CVDSTORE_FSYNC", "CVDSTORE_PICKER", "CVDSTORE_LOG_LEVEL"):
            monkeypatch.delenv(var, raising=False)
        settings = Settings(config_file)
        assert settings.store.root == Path("/data/cvd")
        assert settings.store.fsync is False
        assert settings.store.keep_manifests == 3
        assert settings.partition.picker == "min_weight"
        assert settings.partition.band == 0.95
        assert settings.maintenance.gamma == "2x"
        assert settings.maintenance.check_every == 10
        assert settings.bench.workers == 4
        assert settings.app.log_level == "DEBUG"

    def test_environment_overrides_yaml(self, config_file, monkeypatch):
        monkeypatch.setenv("CVDSTORE_ROOT", "/elsewhere")
        monkeypatch.setenv("CVDSTORE_FSYNC", "yes")
        monkeypatch.setenv("CVDSTORE_MU", "3")
        settings = Settings(config_file)
        assert settings.store.root == Path("/elsewhere")
        assert settings.store.fsync is True
        assert settings.maintenance.mu == 3.0

    def test_missing_file_uses_defaults(self, temp_dir, monkeypatch):
        for var in ("CVDSTORE_MU", "CVDSTORE_GAMMA", "CVDSTORE_PICKER"):
            monkeypatch.delenv(var, raising=False)
        settings = Settings(temp_dir / "absent.yaml")
        assert settings.partition.picker == "balance"
        assert settings.partition.max_oracle_versions == 10
        assert settings.maintenance.gamma == "1.5x"
        assert settings.baselines.shingle_count == 16

    def test_to_dict_has_every_section(self, config_file):
        data = Settings(config_file).to_dict()
        assert set(data) == {"app", "store", "partition", "maintenance", "baselines", "bench"}
        assert data["partition"]["picker"] in ("balance", "min_weight")
