"""
Робастная полиномиальная интерполяция по O(d) зашумленным отсчетам.

Разбиение [-1, 1] сгущается к концам отрезка (плотность ~ 1/sqrt(1 - x^2)),
в каждом интервале берется один случайный отсчет с весом |I_j|/2, после
чего решается взвешенная задача наименьших квадратов. Бустинг повторяет
процедуру R раз и берет покоординатную медиану.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy import linalg
from scipy.integrate import simpson

from .errors import ConfigError, SingularDesignError
from .parallel import run_repeats

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1 / 20
BOOST_CONSTANT = 4


@dataclass(frozen=True)
class IntervalPartition:
    """Ordered tiling of [-1, 1] with weights w_j = |I_j| / 2."""

    intervals: np.ndarray
    weights: np.ndarray
    m: int

    @property
    def n(self) -> int:
        return len(self.intervals)

    def draw_points(self, rng: np.random.Generator) -> np.ndarray:
        """One uniform point inside every interval."""
        lo, hi = self.intervals[:, 0], self.intervals[:, 1]
        return lo + (hi - lo) * rng.uniform(size=len(lo))


class Polynomial:
    """
    Polynomial in the mapped variable s = (2t - lo - hi) / (hi - lo).

    basis is "monomial" (coeffs of s^j) or "legendre" (coeffs of L_j(s)).
    The domain (-1, 1) makes s = t.
    """

    BASES = ("monomial", "legendre")

    def __init__(self, coeffs: Sequence[complex], domain: Tuple[float, float] = (-1.0, 1.0),
                 basis: str = "monomial"):
        if basis not in self.BASES:
            raise ConfigError(f"unknown polynomial basis '{basis}'")
        lo, hi = float(domain[0]), float(domain[1])
        if not hi > lo:
            raise ConfigError(f"polynomial domain must satisfy lo < hi, got {domain}")
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        if coeffs.size == 0:
            coeffs = np.zeros(1, dtype=complex)
        self.coeffs = coeffs
        self.domain = (lo, hi)
        self.basis = basis

    @property
    def degree(self) -> int:
        nonzero = np.flatnonzero(self.coeffs)
        return int(nonzero[-1]) if nonzero.size else 0

    def map(self, t):
        lo, hi = self.domain
        return (2 * np.asarray(t, dtype=float) - lo - hi) / (hi - lo)

    def __call__(self, t):
        return multipoint_evaluate(self, t)

    def to_monomial(self) -> "Polynomial":
        if self.basis == "monomial":
            return self
        return Polynomial(npleg.leg2poly(self.coeffs), self.domain, "monomial")

    def to_dict(self) -> dict:
        return {
            "basis": self.basis,
            "domain": list(self.domain),
            "re": self.coeffs.real.tolist(),
            "im": self.coeffs.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Polynomial":
        try:
            coeffs = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
            return cls(coeffs, tuple(data["domain"]), data.get("basis", "monomial"))
        except (KeyError, TypeError, ValueError) as error:
            raise ConfigError(f"malformed polynomial: {error}") from error


def random_polynomial(d: int, T: float, rng: np.random.Generator) -> Polynomial:
    """Complex Legendre polynomial of degree d on (0, T) with standard normal coefficients."""
    if d < 0:
        raise ConfigError(f"degree must be non-negative, got {d}")
    coeffs = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
    return Polynomial(coeffs, (0.0, T), "legendre")


def generate_intervals(d: int, eps: float = DEFAULT_EPS) -> IntervalPartition:
    """
    Build the edge-biased partition of [-1, 1].

    Args:
        d: Polynomial degree
        eps: Accuracy parameter, 0 < eps <= 1

    Returns:
        Symmetric IntervalPartition with n = 2l + 2 intervals
    """
    if d < 0:
        raise ConfigError(f"degree must be non-negative, got {d}")
    if not 0 < eps <= 1:
        raise ConfigError(f"eps must lie in (0, 1], got {eps}")
    m = math.ceil(10 * max(d, 1) / eps)

    points = [0.0]
    y = 0.0
    while y <= 1 - 9 / m ** 2:
        y = y + math.sqrt(1 - y * y) / m
        points.append(y)
    y_arr = np.array(points)

    right = np.column_stack([y_arr[:-1], y_arr[1:]])
    right = np.vstack([right, [y_arr[-1], 1.0]])
    left = -right[::-1, ::-1]
    intervals = np.vstack([left, right])
    weights = (intervals[:, 1] - intervals[:, 0]) / 2
    logger.debug(f"Partition for d={d}, eps={eps}: m={m}, n={len(intervals)}")
    return IntervalPartition(intervals=intervals, weights=weights, m=m)


def legendre_design(s: np.ndarray, d: int) -> np.ndarray:
    return npleg.legvander(np.asarray(s, dtype=float), d)


def weighted_least_squares(
    design_eval: Callable[[np.ndarray], np.ndarray],
    t: np.ndarray,
    values: np.ndarray,
    weights: np.ndarray,
    min_rank: Optional[int] = None,
) -> np.ndarray:
    """
    Minimise sum_i w_i |row(t_i) c - b_i|^2 with a QR/SVD based solver.

    Args:
        design_eval: Maps an array of times to the design matrix rows
        t: Sample times
        values: Observed values b_i
        weights: Positive weights w_i
        min_rank: Smallest acceptable numerical rank (default: all columns)

    Returns:
        Coefficient vector c
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise ConfigError("least-squares weights must be positive")
    design = np.asarray(design_eval(t), dtype=complex)
    n_rows, n_cols = design.shape
    if n_rows < n_cols:
        raise SingularDesignError(f"{n_rows} samples cannot determine {n_cols} coefficients")

    root_w = np.sqrt(weights)
    scaled = design * root_w[:, None]
    rhs = values * root_w
    coeffs, _, rank, _ = linalg.lstsq(scaled, rhs, lapack_driver="gelsd")
    required = n_cols if min_rank is None else min_rank
    if rank < required:
        raise SingularDesignError(f"design rank {rank} below required {required} ({n_cols} columns)")

    # normal-equation residual, reported only
    gradient = scaled.conj().T @ (scaled @ coeffs - rhs)
    scale = linalg.norm(scaled) * linalg.norm(rhs)
    if scale > 0 and linalg.norm(gradient) > 1e-6 * scale:
        logger.warning(f"Least-squares orthogonality residual {linalg.norm(gradient) / scale:.2e}")
    return coeffs


def robust_poly_learn(src, d: int, T: float, rng: np.random.Generator,
                      eps: float = DEFAULT_EPS) -> Polynomial:
    """
    Fit a degree-d polynomial to src on [0, T] from one sample per interval.

    Returns:
        Polynomial in the Legendre basis on the domain (0, T)
    """
    if T <= 0:
        raise ConfigError(f"T must be positive, got {T}")
    partition = generate_intervals(d, eps)
    s = partition.draw_points(rng)
    t = (s + 1) * T / 2
    values = src.sample(t)
    coeffs = weighted_least_squares(
        lambda times: legendre_design(2 * times / T - 1, d), t, values, partition.weights
    )
    return Polynomial(coeffs, (0.0, T), "legendre")


def combine_by_median(polys: List[Polynomial], d: int, T: float, rng: np.random.Generator,
                      eps: float = DEFAULT_EPS) -> Polynomial:
    """
    Медиана кандидатов в свежих точках разбиения и регрессия на нее.

    Медиана берется отдельно по вещественной и мнимой части.
    """
    partition = generate_intervals(d, eps)
    s = partition.draw_points(rng)
    t = (s + 1) * T / 2
    evaluations = np.array([poly(t) for poly in polys])
    medians = np.median(evaluations.real, axis=0) + 1j * np.median(evaluations.imag, axis=0)
    coeffs = weighted_least_squares(
        lambda times: legendre_design(2 * times / T - 1, d), t, medians, partition.weights
    )
    return Polynomial(coeffs, (0.0, T), "legendre")


def boost_repeats(p: float) -> int:
    if not 0 < p < 1:
        raise ConfigError(f"failure probability must lie in (0, 1), got {p}")
    if p < 2.0 ** -64:
        raise ConfigError("failure probabilities below 2^-64 are not supported")
    return math.ceil(BOOST_CONSTANT * math.log2(1 / p))


def robust_poly_learn_boosted(src, d: int, T: float, p: float, rng: np.random.Generator,
                              eps: float = DEFAULT_EPS) -> Polynomial:
    """
    Boosted robust fit: R = ceil(4 log2(1/p)) independent fits, median, refit.

    Args:
        src: Signal source on [0, T]
        d: Degree
        T: Interval length
        p: Target failure probability
        rng: Random generator

    Returns:
        Polynomial in the Legendre basis on (0, T)
    """
    repeats = boost_repeats(p)
    logger.debug(f"Boosted polynomial fit: d={d}, R={repeats}")
    polys = run_repeats(lambda stream: robust_poly_learn(src, d, T, stream, eps), rng, repeats)
    return combine_by_median(polys, d, T, rng, eps)


def poly_max_avg_ratio(P: Polynomial, interval: Optional[Tuple[float, float]] = None,
                       n_grid: int = 4097) -> float:
    """Grid max of |P|^2 over the quadrature mean of |P|^2."""
    lo, hi = interval if interval is not None else P.domain
    t = np.linspace(lo, hi, n_grid)
    power = np.abs(P(t)) ** 2
    mean = simpson(power, x=t) / (hi - lo)
    if mean == 0:
        return 0.0
    return float(np.max(power) / mean)


def multipoint_evaluate(P: Polynomial, points) -> np.ndarray:
    """
    Horner evaluation (Clenshaw for the Legendre basis) at every point.

    The naive O(n d) scheme; scalars give a complex scalar back.
    """
    s = P.map(points)
    if P.basis == "legendre":
        values = npleg.legval(s, P.coeffs)
    else:
        values = np.zeros_like(s, dtype=complex)
        for c in P.coeffs[::-1]:
            values = values * s + c
    if np.ndim(values) == 0:
        return complex(values)
    return np.asarray(values, dtype=complex)
