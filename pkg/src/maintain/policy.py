"""Maintenance policy: storage threshold γ, tolerance μ and the last δ*."""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

from ..config import settings
from ..core.exceptions import ParameterError
from ..partition.lyresplit import PICKERS


def parse_gamma(text: Any) -> Tuple[float, bool]:
    """``"1.5x"`` -> (1.5, True); ``"5000"`` -> (5000.0, False)."""
    raw = str(text).strip().lower()
    multiple = raw.endswith("x")
    if multiple:
        raw = raw[:-1]
    try:
        value = float(raw)
    except ValueError:
        raise ParameterError(f"invalid storage threshold '{text}'")
    return value, multiple


@dataclass
class MaintenancePolicy:
    gamma: float = 1.5
    gamma_is_multiple: bool = True
    mu: float = 1.5
    delta_star: Optional[float] = None
    check_every: int = 1
    picker: str = "balance"
    enabled: bool = False

    def __post_init__(self) -> None:
        if self.mu <= 1.0:
            raise ParameterError(f"tolerance factor mu must exceed 1, got {self.mu}")
        if self.gamma <= 0 or (self.gamma_is_multiple and self.gamma < 1.0):
            raise ParameterError(f"storage threshold must be at least |R|, got {self.gamma}")
        if self.check_every < 1:
            raise ParameterError("check_every must be at least 1")
        if self.delta_star is not None and not 0.0 < self.delta_star <= 1.0:
            raise ParameterError(f"delta must be in (0, 1], got {self.delta_star}")
        if self.picker not in PICKERS:
            raise ParameterError(f"unknown edge picker '{self.picker}'")

    @classmethod
    def from_settings(cls) -> "MaintenancePolicy":
        gamma, multiple = parse_gamma(settings.maintenance.gamma)
        return cls(
            gamma=gamma,
            gamma_is_multiple=multiple,
            mu=settings.maintenance.mu,
            check_every=settings.maintenance.check_every,
            picker=settings.partition.picker,
        )

    def budget(self, n_records: int) -> float:
        """γ in records for the current |R|."""
        return self.gamma * n_records if self.gamma_is_multiple else self.gamma

    def gamma_text(self) -> str:
        return f"{self.gamma:g}x" if self.gamma_is_multiple else f"{self.gamma:g}"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MaintenancePolicy":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)
