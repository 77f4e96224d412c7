"""
Модели результата: смешанный базис, список частот, отчет о восстановлении.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError
from .poly_interp import Polynomial
from .signal_core import norm_T

logger = logging.getLogger(__name__)


class MixedBasisModel:
    """x~(t) = sum_i exp(2 pi i f_i t) P_i(t) on [0, T]."""

    def __init__(self, terms: Sequence[Tuple[float, Polynomial]], T: float):
        if T <= 0:
            raise ConfigError(f"T must be positive, got {T}")
        self.terms = [(float(f), poly) for f, poly in terms]
        self.T = float(T)

    @property
    def freqs(self) -> List[float]:
        return [f for f, _ in self.terms]

    @property
    def degree(self) -> int:
        return max((len(poly.coeffs) - 1 for _, poly in self.terms), default=0)

    @property
    def n_params(self) -> int:
        return sum(len(poly.coeffs) for _, poly in self.terms)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        total = np.zeros(t_arr.shape, dtype=complex)
        for freq, poly in self.terms:
            total = total + np.exp(2j * np.pi * freq * t_arr) * poly(t_arr)
        if t_arr.ndim == 0:
            return complex(total)
        return total

    def to_dict(self) -> Dict:
        return {
            "T": self.T,
            "terms": [dict(f=freq, **poly.to_dict()) for freq, poly in self.terms],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "MixedBasisModel":
        try:
            terms = [(item["f"], Polynomial.from_dict(item)) for item in data["terms"]]
            return cls(terms, data["T"])
        except (KeyError, TypeError) as error:
            raise ConfigError(f"malformed model description: {error}") from error

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2)

    @classmethod
    def load(cls, path: str) -> "MixedBasisModel":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as error:
            raise ConfigError(f"cannot read model file '{path}': {error}") from error
        except json.JSONDecodeError as error:
            raise ConfigError(f"model file '{path}' is not valid JSON: {error}") from error
        if "model" in data:
            data = data["model"]
        return cls.from_dict(data)


@dataclass(frozen=True)
class FrequencyList:
    """Sorted candidate frequencies, at most cap of them."""

    freqs: Tuple[float, ...]
    cap: int

    def __post_init__(self):
        ordered = tuple(sorted(float(f) for f in self.freqs))
        object.__setattr__(self, "freqs", ordered)
        if len(ordered) > self.cap:
            raise ConfigError(f"{len(ordered)} frequencies exceed the list cap {self.cap}")

    def __len__(self) -> int:
        return len(self.freqs)

    def __iter__(self):
        return iter(self.freqs)

    def distance_to(self, f: float) -> float:
        if not self.freqs:
            return float("inf")
        return float(np.min(np.abs(np.asarray(self.freqs) - f)))


@dataclass
class RecoveryReport:
    """Per-run record written by the CLI and the bench harness."""

    model: MixedBasisModel
    n_samples: int
    err_T: Optional[float]
    noise_level: float
    seed: Optional[int]
    wall_time: float
    freqs: List[float] = field(default_factory=list)
    config: Dict = field(default_factory=dict)
    command: str = ""
    extras: Dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = True) -> Dict:
        data = {
            "command": self.command,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "err_T": self.err_T,
            "noise_level": self.noise_level,
            "freqs": list(self.freqs),
            "config": self.config,
            "model": self.model.to_dict(),
        }
        data.update(self.extras)
        # wall time is the only field that differs between identical runs
        if include_timing:
            data["wall_time"] = self.wall_time
        return data


def estimate_residual(src, model: MixedBasisModel, rng: np.random.Generator, n: int = 256) -> float:
    """RMS of src - model over n fresh uniform samples (the reported noise level)."""
    t = rng.uniform(0.0, model.T, size=n)
    residual = src.sample(t) - model(t)
    return float(np.sqrt(np.mean(np.abs(residual) ** 2)))


def model_error_T(model: MixedBasisModel, truth, T: float) -> float:
    """||model - truth||_T by quadrature."""
    return norm_T(lambda t: model(t) - truth(t), T)
