"""
Базовые типы сигналов, нормы, генерация и численные оракулы.

Модуль содержит точное представление k-разреженного сигнала, источник
отсчетов со счетчиком (через него считается выборочная сложность всех
алгоритмов), добавление шума и "грубые" численные проверки, на которые
опираются тесты и bench.
"""

import json
import logging
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from .errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

DEFAULT_GRID = 2 ** 14 + 1


@dataclass(frozen=True)
class QuadratureSpec:
    """Uniform composite Simpson grid on [0, T]."""

    n: int = DEFAULT_GRID
    tol: float = 1e-6

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"quadrature grid needs at least 2 points, got {self.n}")


class FourierSparseSignal:
    """
    Точный k-разреженный сигнал x*(t) = sum_j v_j exp(2 pi i f_j t).

    Совпадающие частоты при построении объединяются (амплитуды
    складываются), поэтому все f_j различны.
    """

    def __init__(self, tones: Sequence[Tuple[float, complex]]):
        merged: Dict[float, complex] = {}
        for freq, amp in tones:
            freq = float(freq)
            if not np.isfinite(freq):
                raise ConfigError(f"tone frequency must be finite, got {freq}")
            merged[freq] = merged.get(freq, 0j) + complex(amp)
        if not merged:
            raise ConfigError("a sparse signal needs at least one tone")
        order = sorted(merged)
        self._freqs = np.array(order, dtype=float)
        self._amps = np.array([merged[f] for f in order], dtype=complex)
        self._freqs.setflags(write=False)
        self._amps.setflags(write=False)

    @property
    def freqs(self) -> np.ndarray:
        return self._freqs

    @property
    def amps(self) -> np.ndarray:
        return self._amps

    @property
    def k(self) -> int:
        return len(self._freqs)

    @property
    def tones(self) -> List[Tuple[float, complex]]:
        return list(zip(self._freqs.tolist(), self._amps.tolist()))

    def __call__(self, t):
        return eval_sparse(self, t)

    def __repr__(self) -> str:
        return f"FourierSparseSignal(k={self.k}, freqs={self._freqs.tolist()})"

    def to_dict(self, T: float, F: float) -> Dict:
        return {
            "tones": [
                {"f": float(f), "re": float(v.real), "im": float(v.imag)}
                for f, v in zip(self._freqs, self._amps)
            ],
            "T": float(T),
            "F": float(F),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "FourierSparseSignal":
        try:
            tones = [(item["f"], complex(item["re"], item["im"])) for item in data["tones"]]
        except (KeyError, TypeError) as error:
            raise ConfigError(f"malformed signal description: {error}") from error
        return cls(tones)


def eval_sparse(sig: FourierSparseSignal, t):
    """Evaluate sum_j v_j exp(2 pi i f_j t) at a scalar or an array of times."""
    t_arr = np.asarray(t, dtype=float)
    phases = np.exp(2j * np.pi * np.multiply.outer(t_arr, sig.freqs))
    values = phases @ sig.amps
    if t_arr.ndim == 0:
        return complex(values)
    return values


class SignalSource:
    """
    Оракул отсчетов t -> C с монотонным счетчиком.

    Счетчик увеличивается на число запрошенных моментов времени и защищен
    блокировкой, поэтому источник можно разделять между потоками
    Монте-Карло. Производные источники (шум, перестановка, окно) вызывают
    sample() родителя, так что корневой счетчик видит реальные обращения
    к сигналу.
    """

    def __init__(self, sampler: Callable, label: str = "signal"):
        self._sampler = sampler
        self.label = label
        self._samples_taken = 0
        self._lock = threading.Lock()

    @classmethod
    def from_signal(cls, sig: FourierSparseSignal, label: str = "clean") -> "SignalSource":
        return cls(lambda t: eval_sparse(sig, t), label=label)

    @property
    def samples_taken(self) -> int:
        return self._samples_taken

    def sample(self, t):
        t_arr = np.asarray(t, dtype=float)
        values = np.asarray(self._sampler(t_arr), dtype=complex)
        with self._lock:
            self._samples_taken += t_arr.size
        if t_arr.ndim == 0:
            return complex(values)
        return values

    def __call__(self, t):
        return self.sample(t)

    def derive(self, transform: Callable, label: str) -> "SignalSource":
        """Wrap this source; transform(parent, t) returns the new values."""
        return SignalSource(lambda t: transform(self, t), label=label)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model g(t); level is the target ||g||_T."""

    kind: str = "none"
    level: float = 0.0
    func: Optional[Callable] = None
    cells: int = 64
    hits: int = 4
    white_cells: int = 2 ** 20

    KINDS = ("none", "gaussian-white", "adversarial-sparse", "custom-callable")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown noise kind '{self.kind}', expected one of {self.KINDS}")
        if self.level < 0 or not np.isfinite(self.level):
            raise ConfigError(f"noise level must be a finite non-negative number, got {self.level}")
        if self.kind == "custom-callable" and self.func is None:
            raise ConfigError("custom-callable noise requires func")
        if not 1 <= self.hits <= self.cells:
            raise ConfigError("adversarial-sparse noise needs 1 <= hits <= cells")


def with_noise(clean: SignalSource, spec: NoiseSpec, T: float, rng: np.random.Generator) -> SignalSource:
    """
    Add noise g to a clean source so that ||g||_T matches spec.level.

    Args:
        clean: Source of the clean signal
        spec: Noise description
        T: Observation interval length in seconds
        rng: Generator used for every random draw of the noise

    Returns:
        New source sampling x* + g
    """
    if spec.kind == "none" or spec.level == 0:
        return clean.derive(lambda parent, t: parent.sample(t), label=f"{clean.label}+none")

    if spec.kind == "gaussian-white":
        # fixed realisation on a fine cell grid: g is a function of t, so
        # repeated and concurrent queries agree
        n_cells = spec.white_cells
        field = rng.standard_normal(n_cells) + 1j * rng.standard_normal(n_cells)
        field *= spec.level / np.sqrt(2.0)

        def add_white(parent, t):
            idx = np.clip(np.floor(t / T * n_cells).astype(int), 0, n_cells - 1)
            return parent.sample(t) + field[idx]

        return clean.derive(add_white, label=f"{clean.label}+white({spec.level:g})")

    if spec.kind == "adversarial-sparse":
        hit_cells = rng.choice(spec.cells, size=spec.hits, replace=False)
        values = np.zeros(spec.cells, dtype=complex)
        values[hit_cells] = np.exp(2j * np.pi * rng.uniform(size=spec.hits))
        values *= spec.level * np.sqrt(spec.cells / spec.hits)
        logger.debug(f"Impulsive noise on cells {sorted(hit_cells.tolist())}")

        def add_impulses(parent, t):
            idx = np.clip(np.floor(t / T * spec.cells).astype(int), 0, spec.cells - 1)
            return parent.sample(t) + values[idx]

        return clean.derive(add_impulses, label=f"{clean.label}+sparse({spec.level:g})")

    base_norm = norm_T(spec.func, T)
    if base_norm == 0:
        raise ConfigError("custom noise callable is identically zero on [0, T]")
    gain = spec.level / base_norm

    def add_custom(parent, t):
        return parent.sample(t) + gain * np.asarray(spec.func(t), dtype=complex)

    return clean.derive(add_custom, label=f"{clean.label}+custom({spec.level:g})")


def _grid_values(y, t: np.ndarray) -> np.ndarray:
    values = np.asarray(y(t), dtype=complex)
    if values.shape != t.shape:
        values = np.broadcast_to(values, t.shape)
    if not np.all(np.isfinite(values)):
        raise NumericalError("non-finite sample value on the quadrature grid")
    return values


def norm_T(y, T: float, quad: Optional[QuadratureSpec] = None) -> float:
    """
    RMS of y over [0, T] by composite Simpson quadrature.

    y may be a SignalSource, a FourierSparseSignal or any vectorised callable.
    """
    if T <= 0:
        raise ConfigError(f"T must be positive, got {T}")
    quad = quad or QuadratureSpec()
    t = np.linspace(0.0, T, quad.n)
    power = np.abs(_grid_values(y, t)) ** 2
    return float(np.sqrt(simpson(power, x=t) / T))


def gram_matrix(freqs: Sequence[float], T: float) -> np.ndarray:
    """G[i, j] = (1/T) int_0^T exp(2 pi i (f_i - f_j) t) dt in closed form."""
    f = np.asarray(freqs, dtype=float)
    diff = np.subtract.outer(f, f) * T
    # np.sinc(0) == 1 covers coincident frequencies
    return np.exp(1j * np.pi * diff) * np.sinc(diff)


def gram_norm_T(sig: FourierSparseSignal, T: float) -> float:
    """||x||_T of a sparse signal from its Gram matrix."""
    v = sig.amps
    energy = np.real(v @ gram_matrix(sig.freqs, T) @ v.conj())
    return float(np.sqrt(max(energy, 0.0)))


def max_to_mean_ratio(y, T: float, n_grid: int = 10_000, quad: Optional[QuadratureSpec] = None) -> float:
    """max_t |y(t)|^2 on an n_grid-point grid divided by ||y||_T^2."""
    t = np.linspace(0.0, T, n_grid)
    peak = float(np.max(np.abs(_grid_values(y, t)) ** 2))
    mean = norm_T(y, T, quad) ** 2
    if mean == 0:
        return 0.0
    return peak / mean


@dataclass(frozen=True)
class SignalGenSpec:
    """Recipe for random test signals."""

    k: int
    F: float
    min_gap: float = 0.0
    amplitude_law: str = "unit"
    cluster_layout: Optional[Tuple[Tuple[float, float, int], ...]] = None

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if self.F <= 0:
            raise ConfigError(f"F must be positive, got {self.F}")
        if self.min_gap < 0:
            raise ConfigError(f"min_gap must be non-negative, got {self.min_gap}")
        if self.amplitude_law not in ("unit", "log-uniform"):
            raise ConfigError(f"unknown amplitude law '{self.amplitude_law}'")
        if self.cluster_layout is not None:
            if self.min_gap > 0:
                raise ConfigError("min_gap cannot be combined with a cluster layout; space the centres instead")
            total = sum(int(count) for _, _, count in self.cluster_layout)
            if total != self.k:
                raise ConfigError(f"cluster layout holds {total} tones but k={self.k}")


def gen_signal(spec: SignalGenSpec, rng: np.random.Generator) -> FourierSparseSignal:
    """
    Draw a random k-sparse signal.

    Without a cluster layout the frequencies are drawn uniformly among all
    configurations in [-F, F] with pairwise gaps >= min_gap (sorted uniform
    offsets plus j * min_gap), so the gap holds by construction.
    """
    if spec.cluster_layout is not None:
        parts = [
            center + rng.uniform(-width / 2, width / 2, size=int(count))
            for center, width, count in spec.cluster_layout
        ]
        freqs = np.concatenate(parts)
    else:
        if spec.k * spec.min_gap > 2 * spec.F:
            raise ConfigError(
                f"cannot place {spec.k} tones with gap {spec.min_gap} inside [-{spec.F}, {spec.F}]"
            )
        slack = 2 * spec.F - (spec.k - 1) * spec.min_gap
        offsets = np.sort(rng.uniform(0.0, slack, size=spec.k))
        freqs = -spec.F + offsets + np.arange(spec.k) * spec.min_gap

    phases = np.exp(2j * np.pi * rng.uniform(size=spec.k))
    if spec.amplitude_law == "log-uniform":
        amps = 10.0 ** rng.uniform(-1.0, 0.0, size=spec.k) * phases
    else:
        amps = phases
    return FourierSparseSignal(list(zip(freqs.tolist(), amps.tolist())))


def dense_spectrum_oracle(
    src,
    T: float,
    freqs: Sequence[float],
    window=None,
    n_time: Optional[int] = None,
    chunk: int = 256,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Brute-force |X(f)|^2 of src * window by Simpson quadrature in time.

    Without a window the integral runs over [0, T]; with a FilterH it runs
    over [-T/2, 3T/2] where the window has decayed below round-off.

    Returns:
        (freqs, power) arrays of equal length
    """
    from .filters import eval_h

    f = np.asarray(freqs, dtype=float)
    if window is None:
        t = np.linspace(0.0, T, n_time or DEFAULT_GRID)
        y = _grid_values(src, t)
    else:
        t = np.linspace(-T / 2, 3 * T / 2, n_time or 2 * DEFAULT_GRID - 1)
        y = _grid_values(src, t) * eval_h(window, t)

    power = np.empty(len(f))
    for start in range(0, len(f), chunk):
        block = f[start:start + chunk]
        kernel = np.exp(-2j * np.pi * np.multiply.outer(block, t))
        spectrum = simpson(kernel * y, x=t, axis=1)
        power[start:start + chunk] = np.abs(spectrum) ** 2
    if not np.all(np.isfinite(power)):
        raise NumericalError("non-finite value in the dense spectrum")
    return f, power


def heavy_clusters(
    freqs: np.ndarray, power: np.ndarray, threshold: float, Delta: float
) -> List[Tuple[float, float]]:
    """
    Группирует "тяжелые" частоты в интервалы.

    Частота f тяжелая, если энергия спектра в окне [f - Delta, f + Delta]
    не меньше threshold. Соседние тяжелые точки сетки сливаются в один
    кластер.

    Args:
        freqs: Uniform ascending frequency grid
        power: |X(f)|^2 on that grid
        threshold: Energy threshold (T * N^2 / k in the usual setting)
        Delta: Half width of the energy window

    Returns:
        List of (lo, hi) frequency intervals
    """
    cumulative = cumulative_trapezoid(power, freqs, initial=0.0)
    upper = np.interp(freqs + Delta, freqs, cumulative)
    lower = np.interp(freqs - Delta, freqs, cumulative)
    heavy = (upper - lower) >= threshold

    clusters = []
    start = None
    for idx, flag in enumerate(heavy):
        if flag and start is None:
            start = idx
        if not flag and start is not None:
            clusters.append((float(freqs[start]), float(freqs[idx - 1])))
            start = None
    if start is not None:
        clusters.append((float(freqs[start]), float(freqs[-1])))
    return clusters


def one_cluster_premise(
    y, f0: float, Delta: float, T: float, eps: float, window=None, n_freq: int = 2001
) -> Dict:
    """
    Check whether y * window is an (eps, Delta)-one-cluster signal around f0.

    The spectral fraction compares the in-band energy with the total energy
    (Parseval); the time fraction compares the energy inside [0, T] with the
    energy of the whole quadrature span.
    """
    from .filters import eval_h

    if window is None:
        t = np.linspace(0.0, T, DEFAULT_GRID)
        y_t = _grid_values(y, t)
    else:
        t = np.linspace(-T / 2, 3 * T / 2, 2 * DEFAULT_GRID - 1)
        y_t = _grid_values(y, t) * eval_h(window, t)

    total = simpson(np.abs(y_t) ** 2, x=t)
    band = np.linspace(f0 - Delta, f0 + Delta, n_freq)
    kernel = np.exp(-2j * np.pi * np.multiply.outer(band, t))
    spectrum = np.abs(simpson(kernel * y_t, x=t, axis=1)) ** 2
    in_band = simpson(spectrum, x=band)

    inside = (t >= 0) & (t <= T)
    in_time = simpson(np.abs(y_t[inside]) ** 2, x=t[inside])

    spectral_fraction = float(in_band / total) if total > 0 else 0.0
    time_fraction = float(in_time / total) if total > 0 else 0.0
    return {
        "spectral_fraction": spectral_fraction,
        "time_fraction": time_fraction,
        "ok": spectral_fraction >= 1 - eps and time_fraction >= 1 - eps,
    }


def save_signal(path: str, sig: FourierSparseSignal, T: float, F: float) -> str:
    """Write the JSON signal format and return the text written."""
    text = json.dumps(sig.to_dict(T, F), indent=2)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text + "\n")
    return text


def load_signal(path: str) -> Tuple[FourierSparseSignal, float, float]:
    """Read a JSON signal file; returns (signal, T, F)."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as error:
        raise ConfigError(f"cannot read signal file '{path}': {error}") from error
    except json.JSONDecodeError as error:
        raise ConfigError(f"signal file '{path}' is not valid JSON: {error}") from error
    sig = FourierSparseSignal.from_dict(data)
    try:
        T, F = float(data["T"]), float(data["F"])
    except (KeyError, TypeError, ValueError) as error:
        raise ConfigError(f"signal file '{path}' lacks T/F: {error}") from error
    return sig, T, F


def samples_to_csv(t: np.ndarray, values: np.ndarray) -> str:
    """CSV dump with columns t,re,im."""
    lines = ["t,re,im"]
    for ti, vi in zip(np.asarray(t, dtype=float), np.asarray(values, dtype=complex)):
        lines.append(f"{float(ti)!r},{float(vi.real)!r},{float(vi.imag)!r}")
    return "\n".join(lines) + "\n"
