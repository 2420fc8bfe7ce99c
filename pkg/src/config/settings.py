"""
Centralized configuration management for the CVD store.

Values are resolved in this order: environment variables (a ``.env``
file is loaded first), then the YAML file named by ``CVDSTORE_CONFIG`` or
``config.yaml`` at the project root, then dataclass defaults.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


@dataclass
class StoreConfig:
    """On-disk store settings."""
    root: Path = Path("./cvd_root")
    fsync: bool = True
    keep_manifests: int = 1


@dataclass
class PartitionConfig:
    """Partition optimizer settings."""
    picker: str = "balance"
    band: float = 0.99
    tolerance: float = 1e-9
    max_oracle_versions: int = 10
    max_weighted_copies: int = 1_000_000


@dataclass
class MaintenanceConfig:
    """Online maintenance defaults; ``gamma`` is absolute or ``"<k>x"``."""
    gamma: str = "1.5x"
    mu: float = 1.5
    check_every: int = 1


@dataclass
class BaselineDefaults:
    """Defaults for the Agglo and KMeans partitioners."""
    iterations: int = 10
    shingle_count: int = 16
    candidate_window: int = 100
    tau_sample_pairs: int = 100
    seed: int = 0


@dataclass
class BenchConfig:
    """Experiment driver settings."""
    sample_versions: int = 100
    timeout_seconds: float = 36000.0
    workers: int = 1
    output_dir: Path = Path("./bench_results")


@dataclass
class ApplicationConfig:
    """Main application configuration."""
    # Paths
    project_root: Path = Path(__file__).parent.parent.parent

    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


class Settings:
    """Global settings manager."""

    def __init__(self, config_path: Optional[Path] = None):
        """Initialize all configuration components."""
        self.app = ApplicationConfig()
        self._file = self._load_yaml(config_path)
        self.store = self._load_store_config()
        self.partition = self._load_partition_config()
        self.maintenance = self._load_maintenance_config()
        self.baselines = self._load_baseline_config()
        self.bench = self._load_bench_config()
        logging_section = self._file.get("logging", {})
        self.app.log_level = os.getenv(
            "CVDSTORE_LOG_LEVEL", logging_section.get("level", self.app.log_level)
        ).upper()
        self.app.log_format = logging_section.get("format", self.app.log_format)

    def _load_yaml(self, config_path: Optional[Path]) -> Dict[str, Any]:
        """Read the YAML layer; a missing file is an empty layer."""
        path = config_path or os.getenv("CVDSTORE_CONFIG")
        path = Path(path) if path else self.app.project_root / "config.yaml"
        if not path.exists():
            return {}
        with open(path, "r") as f:
            return yaml.safe_load(f) or {}

    def _get(self, section: str, key: str, env: Optional[str], default: Any) -> Any:
        if env and os.getenv(env) is not None:
            return os.getenv(env)
        return self._file.get(section, {}).get(key, default)

    def _load_store_config(self) -> StoreConfig:
        """Load store configuration."""
        return StoreConfig(
            root=Path(self._get("store", "root", "CVDSTORE_ROOT", "./cvd_root")),
            fsync=_as_bool(self._get("store", "fsync", "CVDSTORE_FSYNC", True)),
            keep_manifests=int(self._get("store", "keep_manifests", None, 1)),
        )

    def _load_partition_config(self) -> PartitionConfig:
        """Load partition optimizer configuration."""
        return PartitionConfig(
            picker=str(self._get("partition", "picker", "CVDSTORE_PICKER", "balance")),
            band=float(self._get("partition", "band", None, 0.99)),
            tolerance=float(self._get("partition", "tolerance", None, 1e-9)),
            max_oracle_versions=int(self._get("partition", "max_oracle_versions", None, 10)),
            max_weighted_copies=int(
                self._get("partition", "max_weighted_copies", None, 1_000_000)
            ),
        )

    def _load_maintenance_config(self) -> MaintenanceConfig:
        """Load online maintenance configuration."""
        return MaintenanceConfig(
            gamma=str(self._get("maintenance", "gamma", "CVDSTORE_GAMMA", "1.5x")),
            mu=float(self._get("maintenance", "mu", "CVDSTORE_MU", 1.5)),
            check_every=int(self._get("maintenance", "check_every", None, 1)),
        )

    def _load_baseline_config(self) -> BaselineDefaults:
        """Load baseline partitioner defaults."""
        return BaselineDefaults(
            iterations=int(self._get("baselines", "iterations", None, 10)),
            shingle_count=int(self._get("baselines", "shingle_count", None, 16)),
            candidate_window=int(self._get("baselines", "candidate_window", None, 100)),
            tau_sample_pairs=int(self._get("baselines", "tau_sample_pairs", None, 100)),
            seed=int(self._get("baselines", "seed", None, 0)),
        )

    def _load_bench_config(self) -> BenchConfig:
        """Load experiment driver configuration."""
        return BenchConfig(
            sample_versions=int(self._get("bench", "sample_versions", None, 100)),
            timeout_seconds=float(
                self._get("bench", "timeout_seconds", "CVDSTORE_BENCH_TIMEOUT", 36000)
            ),
            workers=int(self._get("bench", "workers", None, 1)),
            output_dir=Path(self._get("bench", "output_dir", None, "./bench_results")),
        )

    def to_dict(self) -> dict:
        """Convert settings to dictionary."""
        return {
            "app": self.app.__dict__,
            "store": self.store.__dict__,
            "partition": self.partition.__dict__,
            "maintenance": self.maintenance.__dict__,
            "baselines": self.baselines.__dict__,
            "bench": self.bench.__dict__,
        }


# Global settings instance
settings = Settings()
