"""
Конфигурация восстановления и командной строки.

RecoveryConfig хранит параметры задачи (T, F, k, delta, ...) и ручки
алгоритма. None означает значение по умолчанию, вычисляемое из
параметров задачи. Файлы конфигурации - JSON; неизвестные ключи
отвергаются.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional

from .errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_B = 16


def next_power_of_two(n: int) -> int:
    return 1 << max(int(n) - 1, 1).bit_length()


@dataclass(frozen=True)
class RecoveryConfig:
    """Problem description plus algorithm knobs."""

    k: int
    T: float
    F: float
    delta: float = 0.01
    Delta: Optional[float] = None
    Delta_h: Optional[float] = None
    B: int = DEFAULT_B
    seed: Optional[int] = None
    degree: Optional[int] = None
    h_s1: Optional[float] = None
    h_ell: Optional[int] = None
    g_alpha: float = 0.2
    g_c2: float = 2.0
    c_delta: float = 0.5
    c_beta: float = 0.01
    s_vote: float = 0.1
    c_vote: float = 0.5
    R_est: Optional[int] = None
    R_repeats: Optional[int] = None
    R_loc: int = 20
    t_regions: Optional[int] = None
    D_max: Optional[int] = None
    d_cap: int = 40
    c_m: float = 0.05
    m_cap: int = 200_000
    max_columns: int = 256
    stages: Optional[int] = None
    list_cap: Optional[int] = None
    poly_fail_prob: float = 0.125
    refine: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if not self.F > 0:
            raise ConfigError(f"F must be positive, got {self.F}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        for name in ("Delta", "Delta_h", "h_s1"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.B < 2:
            raise ConfigError(f"B must be at least 2, got {self.B}")
        for name in ("R_est", "R_repeats", "R_loc", "D_max", "stages", "list_cap"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} must be at least 1, got {value}")
        if self.t_regions is not None and self.t_regions < 5:
            raise ConfigError(f"t_regions must be at least 5, got {self.t_regions}")
        if not 0 < self.g_alpha < 1:
            raise ConfigError(f"g_alpha must lie in (0, 1), got {self.g_alpha}")
        if not 0 < self.poly_fail_prob < 1:
            raise ConfigError(f"poly_fail_prob must lie in (0, 1), got {self.poly_fail_prob}")
        if self.degree is not None and self.degree < 0:
            raise ConfigError(f"degree must be non-negative, got {self.degree}")
        if min(self.c_delta, self.c_beta, self.s_vote, self.c_m, self.g_c2) <= 0:
            raise ConfigError("c_delta, c_beta, s_vote, c_m and g_c2 must be positive")
        if self.m_cap < 1 or self.max_columns < 1:
            raise ConfigError("m_cap and max_columns must be at least 1")

        normalized = next_power_of_two(self.B)
        if normalized != self.B:
            logger.info(f"B={self.B} rounded up to {normalized}")
            object.__setattr__(self, "B", normalized)

    @property
    def cluster_width(self) -> float:
        """Delta, or c_delta * k^2 / T when unset."""
        if self.Delta is not None:
            return self.Delta
        return self.c_delta * self.k ** 2 / self.T

    def with_overrides(self, **overrides) -> "RecoveryConfig":
        return self.from_dict({**self.to_dict(), **{k: v for k, v in overrides.items() if v is not None}})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RecoveryConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        missing = [name for name in ("k", "T", "F") if name not in data]
        if missing:
            raise ConfigError(f"missing config keys: {', '.join(missing)}")
        try:
            return cls(**data)
        except TypeError as error:
            raise ConfigError(f"invalid config: {error}") from error


def load_config_dict(path: str) -> Dict[str, Any]:
    """Read a JSON object from path; every failure becomes ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as error:
        raise ConfigError(f"cannot read config '{path}': {error}") from error
    except json.JSONDecodeError as error:
        raise ConfigError(f"config '{path}' is not valid JSON: {error}") from error
    if not isinstance(data, dict):
        raise ConfigError(f"config '{path}' must hold a JSON object")
    return data


def load_config(path: Optional[str], **overrides) -> RecoveryConfig:
    """
    Defaults, then the JSON file, then explicit overrides (None is skipped).

    Args:
        path: JSON config file or None
        **overrides: Values from the command line

    Returns:
        Validated RecoveryConfig
    """
    data: Dict[str, Any] = load_config_dict(path) if path else {}
    known = {f.name for f in fields(RecoveryConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown keys in '{path}': {', '.join(unknown)}")
    data.update({key: value for key, value in overrides.items() if value is not None})
    config = RecoveryConfig.from_dict(data)
    logger.debug(f"Resolved recovery config: {config.to_dict()}")
    return config


@dataclass(frozen=True)
class CliConfig:
    """Resolved command line: what to run, on which files, with which seed."""

    subcommand: str
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    seed: Optional[int] = None
    verbose: bool = False
    recovery: Optional[RecoveryConfig] = None
    options: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "subcommand": self.subcommand,
            "inputs": dict(self.inputs),
            "outputs": dict(self.outputs),
            "seed": self.seed,
            "verbose": self.verbose,
            "options": dict(self.options),
        }
        if self.recovery is not None:
            data["recovery"] = self.recovery.to_dict()
        return data

    def with_recovery(self, recovery: RecoveryConfig) -> "CliConfig":
        return replace(self, recovery=recovery)


def desk_config(k: int, T: float, F: float, **overrides) -> RecoveryConfig:
    """Desk-scale profile: Delta = 1/T and a hashing scale of 8/T."""
    data = {"k": k, "T": T, "F": F, "Delta": 1.0 / T, "Delta_h": 8.0 / T}
    data.update({key: value for key, value in overrides.items() if value is not None})
    return RecoveryConfig.from_dict(data)


# fewer stages and repeats on top of the desk profile; k=1 at F*T=200 stays near 10^5 samples
FAST_OVERRIDES: Dict[str, Any] = {"stages": 3, "R_est": 8, "R_repeats": 4, "R_loc": 9}


def fast_config(k: int, T: float, F: float, **overrides) -> RecoveryConfig:
    """Desk profile with FAST_OVERRIDES; explicit overrides still win."""
    return desk_config(k, T, F, **{**FAST_OVERRIDES, **{key: v for key, v in overrides.items() if v is not None}})


PROFILES = {"desk": desk_config, "fast": fast_config}


def profile_config(profile: str, k: int, T: float, F: float, **overrides) -> RecoveryConfig:
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile '{profile}', expected one of {', '.join(sorted(PROFILES))}")
    return PROFILES[profile](k, T, F, **overrides)
