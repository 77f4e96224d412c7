"""
Перестановка частот и HashToBins.

Сигнал x * H растягивается во времени в sigma раз, сдвигается и
модулируется частотой b; затем B*D отсчетов умножаются на отсчеты G,
сворачиваются в B ячеек и переводятся в частотную область FFT длины B.
Каждая компонента результата - значение "бинового" сигнала z^(j) в
центре окна tau.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy import fft
from scipy.integrate import simpson

from .errors import ConfigError
from .filters import FilterG, FilterH, eval_h, eval_hat_g_periodic, eval_hat_h
from .signal_core import FourierSparseSignal, SignalSource

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HashConfig:
    """Permutation (sigma, a, b) and the bin layout (B, D)."""

    sigma: float
    a: float
    b: float
    B: int
    D: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.B < 2:
            raise ConfigError(f"B must be at least 2, got {self.B}")
        if self.D < 1:
            raise ConfigError(f"D must be at least 1, got {self.D}")

    @property
    def tau(self) -> float:
        """Centre of the sampling window in seconds."""
        return self.sigma * (self.B * self.D / 2 - self.a)

    def at(self, tau: float) -> "HashConfig":
        return replace(self, a=self.B * self.D / 2 - tau / self.sigma)


def draw_hash_config(g: FilterG, Delta_hash: float, rng: np.random.Generator,
                     tau: float = 0.0) -> HashConfig:
    """
    sigma ~ U[1/(B Delta), 2/(B Delta)], b ~ U[0, 1/sigma).

    b covers one full hash period, so every frequency lands in a uniform bin.
    """
    if Delta_hash <= 0:
        raise ConfigError(f"hashing scale must be positive, got {Delta_hash}")
    sigma = rng.uniform(1 / (g.B * Delta_hash), 2 / (g.B * Delta_hash))
    b = rng.uniform(0.0, 1 / sigma)
    return HashConfig(sigma=sigma, a=0.0, b=b, B=g.B, D=g.D).at(tau)


def permute(src: SignalSource, cfg: HashConfig) -> SignalSource:
    """(P x)(t) = x(sigma (t - a)) exp(-2 pi i sigma b t)."""

    def apply(parent, t):
        return parent.sample(cfg.sigma * (t - cfg.a)) * np.exp(-2j * np.pi * cfg.sigma * cfg.b * t)

    return src.derive(apply, label=f"P({src.label})")


def window_source(src: SignalSource, h: FilterH) -> SignalSource:
    """x * H; x is only queried inside [0, T]."""

    def apply(parent, t):
        out = np.zeros(t.shape, dtype=complex)
        inside = (t >= 0) & (t <= h.T)
        if np.any(inside):
            out[inside] = parent.sample(t[inside]) * eval_h(h, t[inside])
        return out

    return src.derive(apply, label=f"H*{src.label}")


def hash_freq(cfg: HashConfig, f):
    """Bin of f: round(((sigma (f - b)) mod 1) * B) mod B, ties to even."""
    position = np.mod(cfg.sigma * (np.asarray(f, dtype=float) - cfg.b), 1.0) * cfg.B
    bins = np.mod(np.round(position).astype(int), cfg.B)
    if bins.ndim == 0:
        return int(bins)
    return bins


def hash_to_bins(windowed: SignalSource, g: FilterG, cfg: HashConfig) -> np.ndarray:
    """
    Take B*D samples around cfg.tau and return the B bin values.

    Args:
        windowed: Source of x * H
        g: Bin filter; its B and D must match cfg
        cfg: Permutation and window position

    Returns:
        Complex vector u_hat of length B
    """
    if cfg.B != g.B or cfg.D != g.D:
        raise ConfigError(f"hash layout B={cfg.B}, D={cfg.D} does not match filter B={g.B}, D={g.D}")
    offsets = np.arange(cfg.B * cfg.D) - cfg.B * cfg.D / 2
    t = cfg.tau + cfg.sigma * offsets
    v = windowed.sample(t) * np.exp(-2j * np.pi * cfg.sigma * cfg.b * offsets) * g.taps
    folded = v.reshape(cfg.D, cfg.B).sum(axis=0)
    return fft.fft(folded)


def fold_then_dft(v: np.ndarray, B: int) -> np.ndarray:
    """Alias a length-BD vector into B cells and take the B-point DFT."""
    return fft.fft(np.asarray(v).reshape(-1, B).sum(axis=0))


def bin_signal_oracle(sig: FourierSparseSignal, h: FilterH, g: FilterG, cfg: HashConfig,
                      n_grid: int = 20001) -> np.ndarray:
    """
    z^(j)(tau) for every bin by frequency-domain quadrature.

    The spectrum of x * H is sum_k v_k H^(f - f_k), supported within
    Delta_h / 2 of each tone, and bin j weights it by the periodised G
    response.
    """
    values = np.zeros(cfg.B, dtype=complex)
    offsets = np.linspace(-h.Delta_h / 2, h.Delta_h / 2, n_grid)
    base = eval_hat_h(h, offsets)
    for freq, amp in zip(sig.freqs, sig.amps):
        f = freq + offsets
        carrier = amp * base * np.exp(2j * np.pi * f * cfg.tau)
        for j in range(cfg.B):
            response = eval_hat_g_periodic(g, cfg.sigma, cfg.b, j, cfg.B, f)
            values[j] += simpson(carrier * response, x=f)
    return values
