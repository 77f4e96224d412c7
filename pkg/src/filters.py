"""
Фильтры H и G.

H(t) - окно, близкое к индикатору [0, T], с компактным носителем спектра
ширины Delta_h. G - ядро с компактным носителем во времени, спектр
которого приближает индикатор одного из B частотных бинов.

Частоты фильтра G измеряются в циклах на переставленный отсчет: ширина
бина 1/B, полоса пропускания |xi| <= (1 - alpha) / (2B), полоса
подавления |xi| >= 1 / (2B).
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.interpolate import BSpline
from scipy.special import roots_legendre

from .errors import ConfigError

logger = logging.getLogger(__name__)

GAUSS_ORDER = 48


class SincPowerIntegral:
    """
    Integrals of sinc(scale * u) ** power over arbitrary windows.

    Gauss-Legendre panels run between consecutive zeros of the sinc
    (optionally split further); tails are summed from the far end so that
    windows away from the origin keep full relative precision. Mass beyond
    `reach` is treated as zero.
    """

    def __init__(self, scale: float, power: int, reach: float, split: int = 1,
                 order: int = GAUSS_ORDER):
        self.scale = scale
        self.power = power
        self.width = 1.0 / (scale * split)
        self.n_panels = int(math.ceil(reach / self.width))
        self.reach = self.n_panels * self.width
        self._nodes, self._weights = roots_legendre(order)

        left = np.arange(self.n_panels) * self.width
        panels = self._integrate(left, left + self.width)
        tail = np.cumsum(panels[::-1])[::-1]
        self._tail = np.append(tail, 0.0)
        self.half = float(self._tail[0])

    def _integrate(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        half = (b - a) / 2
        points = a[:, None] + (self._nodes[None, :] + 1) * half[:, None]
        values = np.sinc(self.scale * points) ** self.power
        return (values @ self._weights) * half

    def tail(self, x) -> np.ndarray:
        """int_x^reach for x >= 0."""
        x = np.minimum(np.asarray(x, dtype=float), self.reach)
        idx = np.minimum(np.floor(x / self.width).astype(int), self.n_panels)
        end = np.minimum((idx + 1) * self.width, self.reach)
        partial = self._integrate(x.ravel(), end.ravel()).reshape(x.shape)
        return partial + self._tail[np.minimum(idx + 1, self.n_panels)]

    def window(self, lo, hi) -> np.ndarray:
        """int_lo^hi with lo <= hi, elementwise."""
        lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        shape = lo.shape
        lo, hi = lo.ravel(), hi.ravel()
        result = np.empty(lo.shape)

        right = lo >= 0
        left = hi <= 0
        middle = ~(right | left)
        if np.any(right):
            result[right] = self.tail(lo[right]) - self.tail(hi[right])
        if np.any(left):
            result[left] = self.tail(-hi[left]) - self.tail(-lo[left])
        if np.any(middle):
            result[middle] = 2 * self.half - self.tail(-lo[middle]) - self.tail(hi[middle])
        return result.reshape(shape)


@lru_cache(maxsize=None)
def _bspline_element(order: int) -> BSpline:
    knots = np.arange(order + 1, dtype=float) - order / 2
    return BSpline.basis_element(knots, extrapolate=False)


def cardinal_bspline(x, order: int):
    """Centred cardinal B-spline of the given order (order-fold convolution of rect)."""
    if order < 1:
        raise ConfigError(f"B-spline order must be positive, got {order}")
    values = _bspline_element(order)(np.asarray(x, dtype=float))
    return np.nan_to_num(values, nan=0.0)


@dataclass(frozen=True)
class FilterH:
    """Time window H(t) = s0 * int_{u - s2/2}^{u + s2/2} sinc(s1 tau)^ell d tau, u = (t - T/2)/(s3 T)."""

    s1: float
    s3: float
    ell: int
    T: float
    s0: float
    kernel: SincPowerIntegral = field(repr=False, compare=False)

    @property
    def s2(self) -> float:
        return 1 - 2 / self.s1

    @property
    def Delta_h(self) -> float:
        return self.s1 * self.ell / (self.s3 * self.T)


def default_ell(k: int, delta: float) -> int:
    return 2 * math.ceil((k * math.log(k / delta) + 4) / 2)


def build_filter_h(k: int, delta: float, T: float, c1: float = 4.0, s1: float = None,
                   ell: int = None, s3: float = None, split: int = 1) -> FilterH:
    """
    Build the window filter H for sparsity k and tail parameter delta.

    Args:
        k: Sparsity
        delta: Tail parameter, 0 < delta < 1
        T: Observation interval in seconds
        c1: Coefficient of the default s1 = max(32, c1 * k^2)
        s1, ell, s3: Explicit overrides of the defaults
        split: Gauss-Legendre panels per sinc lobe

    Returns:
        FilterH with H(T/2) = 1
    """
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    if T <= 0:
        raise ConfigError(f"T must be positive, got {T}")
    s1 = float(s1 if s1 is not None else max(32.0, c1 * k * k))
    ell = int(ell if ell is not None else default_ell(k, delta))
    s3 = float(s3 if s3 is not None else 1 - 1 / s1)
    if s1 <= 2:
        raise ConfigError(f"s1 must exceed 2, got {s1}")
    if ell < 2 or ell % 2:
        raise ConfigError(f"ell must be an even integer >= 2, got {ell}")
    if not 0 < s3 < 1:
        raise ConfigError(f"s3 must lie in (0, 1), got {s3}")
    s2 = 1 - 2 / s1
    if s2 / 2 + 1 / s1 > 0.5 + 1e-12:
        raise ConfigError("filter H needs s2/2 + 1/s1 <= 1/2")

    kernel = SincPowerIntegral(s1, ell, reach=8.0, split=split)
    s0 = 1.0 / float(kernel.window(-s2 / 2, s2 / 2))
    h = FilterH(s1=s1, s3=s3, ell=ell, T=float(T), s0=s0, kernel=kernel)
    logger.debug(f"Built H: s1={s1}, ell={ell}, s3={s3:.4f}, Delta_h={h.Delta_h:.4g}")
    return h


def eval_h(h: FilterH, t):
    """H(t); scalars give a float back."""
    u = (np.asarray(t, dtype=float) - h.T / 2) / (h.s3 * h.T)
    values = h.s0 * h.kernel.window(u - h.s2 / 2, u + h.s2 / 2)
    if np.ndim(values) == 0:
        return float(values)
    return values


def eval_hat_h(h: FilterH, f):
    """
    Closed-form Fourier transform of H.

    Exactly zero for |f| >= Delta_h / 2.
    """
    f = np.asarray(f, dtype=float)
    scale = h.s3 * h.T
    xi = scale * f
    amplitude = h.s0 * (h.s2 / h.s1) * cardinal_bspline(xi / h.s1, h.ell) * np.sinc(h.s2 * xi)
    values = scale * np.exp(-1j * np.pi * f * h.T) * amplitude
    if values.ndim == 0:
        return complex(values)
    return values


@dataclass(frozen=True)
class FilterG:
    """Bin filter; time support [-2lB/alpha, 2lB/alpha] in permuted samples."""

    B: int
    alpha: float
    l: int
    D: int
    b0: float
    kernel: SincPowerIntegral = field(repr=False, compare=False)
    taps: np.ndarray = field(repr=False, compare=False)

    @property
    def s1g(self) -> float:
        return 4 * self.B / self.alpha

    @property
    def s2g(self) -> float:
        return (1 - self.alpha / 2) / self.B

    @property
    def support(self) -> float:
        return self.l * self.s1g / 2


def build_filter_g(B: int, delta: float, alpha: float = 0.2, c2: float = 2.0,
                   l: int = None, split: int = 1) -> FilterG:
    """Build G with l = ceil(c2 ln(B/delta)) and D = ceil(4l/alpha) rounded up to even."""
    if B < 2:
        raise ConfigError(f"B must be at least 2, got {B}")
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    l = int(l if l is not None else math.ceil(c2 * math.log(B / delta)))
    if l < 1:
        raise ConfigError(f"l must be positive, got {l}")
    D = int(math.ceil(4 * l / alpha))
    D += D % 2

    s1g = 4 * B / alpha
    s2g = (1 - alpha / 2) / B
    kernel = SincPowerIntegral(s1g, l, reach=3.0, split=split)
    b0 = 1.0 / float(kernel.window(-s2g / 2, s2g / 2))

    offsets = np.arange(B * D) - B * D / 2
    taps = b0 * (s2g / s1g) * cardinal_bspline(offsets / s1g, l) * np.sinc(s2g * offsets)
    taps.setflags(write=False)
    g = FilterG(B=B, alpha=float(alpha), l=l, D=D, b0=b0, kernel=kernel, taps=taps)
    logger.debug(f"Built G: B={B}, l={l}, D={D}, alpha={alpha}")
    return g


def eval_g(g: FilterG, t):
    """G(t) in closed form; exactly zero outside the B-spline support."""
    t = np.asarray(t, dtype=float)
    values = g.b0 * (g.s2g / g.s1g) * cardinal_bspline(t / g.s1g, g.l) * np.sinc(g.s2g * t)
    if values.ndim == 0:
        return float(values)
    return values


def eval_hat_g(g: FilterG, f):
    """Spectrum of G by panel quadrature of the sinc power over the rect window."""
    f = np.asarray(f, dtype=float)
    values = g.b0 * g.kernel.window(f - g.s2g / 2, f + g.s2g / 2)
    if np.ndim(values) == 0:
        return float(values)
    return values


def eval_hat_g_periodic(g: FilterG, sigma: float, b: float, j: int, B: int, f):
    """
    Periodised bin response sum_i G^(j/B - sigma (f - b) + i), |argument| <= 2.

    Period 1/sigma in f.
    """
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    xi = j / B - sigma * (np.asarray(f, dtype=float) - b)
    xi = xi - np.round(xi)
    total = np.zeros(xi.shape)
    for shift in range(-2, 3):
        arg = xi + shift
        inside = np.abs(arg) <= 2
        if np.any(inside):
            total[inside] += eval_hat_g(g, arg[inside])
    if total.ndim == 0:
        return float(total)
    return total


def max_abs_g(g: FilterG) -> float:
    return float(np.max(np.abs(g.taps)))


def tabulate_h(h: FilterH, n: int = 513) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(t, H(t)) on [-T/2, 3T/2] and (f, |H^(f)|) on [-Delta_h, Delta_h]."""
    t = np.linspace(-h.T / 2, 3 * h.T / 2, n)
    f = np.linspace(-h.Delta_h, h.Delta_h, n)
    return t, eval_h(h, t), f, np.abs(eval_hat_h(h, f))


def tabulate_g(g: FilterG, n: int = 513) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(t, G(t)) over the support and (xi, G^(xi)) over two bins."""
    t = np.linspace(-g.support, g.support, n)
    xi = np.linspace(-2.0 / g.B, 2.0 / g.B, n)
    return t, eval_g(g, t), xi, eval_hat_g(g, xi)
