"""
Восстановление сигнала с одним спектральным кластером.

Несущая частота ищется многомасштабным голосованием по фазам:
отрезок кандидатов делится на t областей, каждая пара отсчетов
(alpha, alpha + beta) дает гребенку частот (phi + n) / beta, и области,
набравшие большинство голосов, сужают поиск. Затем сигнал
демодулируется и аппроксимируется полиномом.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, EnergyTooLowError, LocationFailedError
from .filters import FilterH
from .hashing import window_source
from .models import MixedBasisModel, estimate_residual
from .parallel import run_repeats_tolerant
from .poly_interp import robust_poly_learn_boosted
from .signal_core import SignalSource

logger = logging.getLogger(__name__)

REPEAT_CAP = 10 ** 6
R_EST_FLOOR = 16
R_REPEATS_FLOOR = 8


def _capped(value: float, floor: int, name: str) -> int:
    count = max(int(math.ceil(value)), floor)
    if count > REPEAT_CAP:
        logger.warning(f"{name}={count} capped at {REPEAT_CAP}")
        count = REPEAT_CAP
    return count


@dataclass(frozen=True)
class OneClusterParams:
    """Knobs of the one-cluster search; build() fills the documented defaults."""

    T: float
    F: float
    Delta: float
    k: int = 1
    delta: float = 0.01
    R_est: int = R_EST_FLOOR
    R_repeats: int = R_REPEATS_FLOOR
    R_loc: int = 20
    t_regions: int = 16
    D_max: int = 8
    c_vote: float = 0.5
    c_beta: float = 0.01
    s_vote: float = 0.1
    d_cap: int = 40
    poly_fail_prob: float = 0.125
    median_runs: int = 7
    refine: bool = True

    def __post_init__(self):
        if self.T <= 0 or self.F <= 0 or self.Delta <= 0:
            raise ConfigError("T, F and Delta must be positive")
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        for name in ("R_est", "R_repeats", "R_loc", "D_max", "median_runs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.t_regions < 5:
            raise ConfigError(f"t_regions must be at least 5 to shrink the search, got {self.t_regions}")
        if not 0 < self.c_vote < 1:
            raise ConfigError(f"c_vote must lie in (0, 1), got {self.c_vote}")
        if self.c_beta <= 0 or self.s_vote <= 0:
            raise ConfigError("c_beta and s_vote must be positive")
        if self.d_cap < 0:
            raise ConfigError(f"d_cap must be non-negative, got {self.d_cap}")

    @classmethod
    def build(cls, T: float, F: float, Delta: float, k: int = 1, **overrides) -> "OneClusterParams":
        """Defaults from (T, F, Delta, k); None overrides are ignored."""
        if T <= 0 or F <= 0 or Delta <= 0:
            raise ConfigError("T, F and Delta must be positive")
        t_regions = int(math.ceil(math.log2(max(F * T, 2.0)))) + 8
        defaults = dict(
            R_est=_capped((T * Delta) ** 2, R_EST_FLOOR, "R_est"),
            R_repeats=_capped((T * Delta) ** 3, R_REPEATS_FLOOR, "R_repeats"),
            t_regions=t_regions,
            median_runs=2 * k + 5,
        )
        chosen = {key: value for key, value in overrides.items() if value is not None}
        t_used = chosen.get("t_regions", t_regions)
        ratio = max(F / Delta, 1.0 + 1e-9)
        defaults["D_max"] = int(math.ceil(math.log(ratio) / math.log(t_used / 4))) + 1
        defaults.update(chosen)
        return cls(T=T, F=F, Delta=Delta, k=k, **defaults)

    @property
    def beta_max(self) -> float:
        """c_beta / (Delta sqrt(Delta T)), never more than T/2."""
        return min(self.c_beta / (self.Delta * math.sqrt(self.Delta * self.T)), self.T / 2)


def theory_degree(T: float, Delta: float, Delta_h: float, k: int, delta: float) -> int:
    """(T Delta_h + T Delta)^1.5 + k^3 log k + k log(1/delta), rounded up."""
    value = (T * Delta_h + T * Delta) ** 1.5 + k ** 3 * math.log(k) + k * math.log(1 / delta)
    return int(math.ceil(value))


@dataclass(frozen=True)
class PhasePair:
    """Legal sample pair z(alpha), z(alpha + beta)."""

    alpha: float
    beta: float
    first: complex
    second: complex


@dataclass
class VoteRound:
    """Outcome of one voting round for n bins."""

    centers: np.ndarray
    estimates: np.ndarray
    located: np.ndarray
    votes: np.ndarray


def search_schedule(p: OneClusterParams) -> List[Tuple[float, float]]:
    """
    (L, beta_hat) per round.

    L shrinks by t/4 from 2F; the round that reaches beta_max is clamped
    to it and is the last one.
    """
    t = p.t_regions
    L_min = t * p.s_vote / (2 * p.beta_max)
    schedule = []
    L = 2 * p.F
    for _ in range(p.D_max):
        L_round = min(2 * p.F, max(L, L_min))
        beta_hat = min(t * p.s_vote / (2 * L_round), p.beta_max)
        schedule.append((L_round, beta_hat))
        if L_round <= L_min or beta_hat >= p.beta_max:
            break
        L = L * 4 / t
    return schedule


def vote_round(draw: Callable, lo: np.ndarray, L: float, beta_hat: float,
               p: OneClusterParams, rng: np.random.Generator,
               alive: Optional[np.ndarray] = None) -> VoteRound:
    """
    One voting round over [lo_j, lo_j + L] for every bin j.

    Args:
        draw: draw(beta, rng) -> (first, second, active) arrays of length n_bins
        lo: Left ends of the candidate intervals
        L: Interval width
        beta_hat: Upper end of the beta range [beta_hat/2, beta_hat]
        p: Search parameters
        rng: Random generator
        alive: Bins still being searched

    Returns:
        VoteRound with winning centres, refined estimates and a located mask
    """
    n_bins = len(lo)
    alive = np.ones(n_bins, dtype=bool) if alive is None else alive
    t = p.t_regions
    width = L / t
    centers = lo[:, None] + (np.arange(t) + 0.5) * width
    votes = np.zeros((n_bins, t), dtype=int)
    combs = np.full((p.R_loc, n_bins, t), np.nan)

    for r in range(p.R_loc):
        beta = rng.uniform(beta_hat / 2, beta_hat)
        first, second, active = draw(beta, rng)
        active = active & alive
        if not np.any(active):
            continue
        phi = np.zeros(n_bins)
        phi[active] = np.angle(second[active] / first[active]) / (2 * np.pi)
        shift = np.round(centers * beta - phi[:, None])
        comb = (phi[:, None] + shift) / beta
        hit = (np.abs(comb - centers) <= 1.5 * width) & active[:, None]
        votes += hit
        combs[r][hit] = comb[hit]

    majority = votes > p.c_vote * p.R_loc
    located = alive & majority.any(axis=1)
    winners = np.zeros(n_bins, dtype=int)
    for j in np.flatnonzero(located):
        best = votes[j].max()
        top = np.flatnonzero(votes[j] == best)
        run_end = 0
        while run_end + 1 < len(top) and top[run_end + 1] == top[run_end] + 1:
            run_end += 1
        winners[j] = top[run_end // 2]

    rows = np.arange(n_bins)
    win_centers = centers[rows, winners]
    estimates = win_centers.copy()
    if p.refine:
        for j in np.flatnonzero(located):
            picked = combs[:, j, winners[j]]
            picked = picked[~np.isnan(picked)]
            if picked.size:
                estimates[j] = float(np.median(picked))
    return VoteRound(centers=win_centers, estimates=estimates, located=located, votes=votes)


def run_search(draw: Callable, n_bins: int, p: OneClusterParams,
               rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Full multi-scale search; returns (estimates, located) per bin."""
    lo = np.full(n_bins, -p.F)
    alive = np.ones(n_bins, dtype=bool)
    estimates = np.zeros(n_bins)
    schedule = search_schedule(p)
    for index, (L, beta_hat) in enumerate(schedule):
        outcome = vote_round(draw, lo, L, beta_hat, p, rng, alive)
        alive = outcome.located
        estimates = outcome.estimates
        logger.debug(f"Round {index}: L={L:.4g}, beta_hat={beta_hat:.4g}, located {int(alive.sum())}/{n_bins}")
        if not np.any(alive):
            break
        if index + 1 < len(schedule):
            L_next = schedule[index + 1][0]
            lo = np.clip(outcome.centers - L_next / 2, -p.F, p.F - L_next)
    return estimates, alive


def get_empirical_1_energy(z: SignalSource, p: OneClusterParams, rng: np.random.Generator) -> float:
    """RMS of |z| over R_est uniform points of [0, T]."""
    alpha = rng.uniform(0.0, p.T, size=p.R_est)
    return float(np.sqrt(np.mean(np.abs(z.sample(alpha)) ** 2)))


def get_legal_1_sample(z: SignalSource, p: OneClusterParams, beta: float, z_emp: float,
                       rng: np.random.Generator) -> PhasePair:
    """
    Draw a pair whose phase ratio reflects the carrier.

    Heavy points satisfy |z(alpha)| >= z_emp / 2; one of them is chosen with
    probability proportional to |z(alpha)|^2 + |z(alpha + beta)|^2.
    """
    if not 0 < beta < p.T:
        raise ConfigError(f"beta must lie in (0, T), got {beta}")
    if z_emp <= 0:
        raise EnergyTooLowError("empirical energy is zero")
    alpha = rng.uniform(0.0, p.T - beta, size=p.R_repeats)
    first = z.sample(alpha)
    second = z.sample(alpha + beta)
    weight = (np.abs(first) ** 2 + np.abs(second) ** 2) * (np.abs(first) >= 0.5 * z_emp)
    total = weight.sum()
    if total <= 0:
        raise EnergyTooLowError(f"no heavy samples among {p.R_repeats} draws")
    idx = rng.choice(p.R_repeats, p=weight / total)
    return PhasePair(alpha=float(alpha[idx]), beta=beta, first=complex(first[idx]),
                     second=complex(second[idx]))


def _single_bin_draw(z: SignalSource, p: OneClusterParams, z_emp: float) -> Callable:
    def draw(beta, rng):
        pair = get_legal_1_sample(z, p, beta, z_emp, rng)
        return np.array([pair.first]), np.array([pair.second]), np.array([True])

    return draw


def locate_1_inner(z: SignalSource, p: OneClusterParams, z_emp: float, lo: float, L: float,
                   beta_hat: float, rng: np.random.Generator) -> float:
    """One voting round on [lo, lo + L]; returns the winning region estimate."""
    outcome = vote_round(_single_bin_draw(z, p, z_emp), np.array([lo]), L, beta_hat, p, rng)
    if not outcome.located[0]:
        raise LocationFailedError(f"no region reached a majority on [{lo:.4g}, {lo + L:.4g}]")
    return float(outcome.estimates[0])


def locate_1_signal(z: SignalSource, p: OneClusterParams, z_emp: float,
                    rng: np.random.Generator) -> float:
    """Multi-scale location of the carrier of a one-cluster signal."""
    estimates, located = run_search(_single_bin_draw(z, p, z_emp), 1, p, rng)
    if not located[0]:
        raise LocationFailedError("voting lost the majority")
    return float(estimates[0])


def combine_frequency_runs(estimates) -> float:
    return float(np.median(np.asarray(estimates, dtype=float)))


def frequency_recovery_1cluster(z: SignalSource, p: OneClusterParams,
                                rng: np.random.Generator) -> float:
    """
    Median of p.median_runs independent locations on z = x * H.

    Raises LocationFailedError when more than half of the runs fail.
    """
    z_emp = get_empirical_1_energy(z, p, rng)
    if z_emp <= 0:
        raise EnergyTooLowError("windowed signal has no energy")
    found, failures = run_repeats_tolerant(
        lambda stream: locate_1_signal(z, p, z_emp, stream), rng, p.median_runs
    )
    if len(failures) * 2 > p.median_runs:
        raise LocationFailedError(f"{len(failures)} of {p.median_runs} location runs failed")
    freq = combine_frequency_runs(found)
    logger.info(f"Carrier located at {freq:.6g} Hz ({len(found)}/{p.median_runs} runs)")
    return freq


def demodulate(x: SignalSource, freq: float) -> SignalSource:
    return x.derive(lambda parent, t: parent.sample(t) * np.exp(-2j * np.pi * freq * t),
                    label=f"{x.label}*exp(-{freq:g})")


def cft_1cluster(x: SignalSource, h: FilterH, p: OneClusterParams,
                 rng: np.random.Generator, degree: Optional[int] = None
                 ) -> Tuple[MixedBasisModel, float]:
    """
    Recover a one-cluster signal as exp(2 pi i f0 t) P(t).

    Args:
        x: Noisy signal source on [0, T]
        h: Window filter
        p: Search parameters
        rng: Random generator
        degree: Explicit polynomial degree (default: min(theory degree, d_cap))

    Returns:
        (model, residual RMS estimate)
    """
    z = window_source(x, h)
    freq = frequency_recovery_1cluster(z, p, rng)
    if degree is None:
        degree = min(theory_degree(p.T, p.Delta, h.Delta_h, p.k, p.delta), p.d_cap)
    poly = robust_poly_learn_boosted(demodulate(x, freq), degree, p.T, p.poly_fail_prob, rng)
    model = MixedBasisModel([(freq, poly)], p.T)
    residual = estimate_residual(x, model, rng)
    logger.info(f"One-cluster fit: f0={freq:.6g}, degree={degree}, residual={residual:.3g}")
    return model, residual


def with_overrides(p: OneClusterParams, **changes) -> OneClusterParams:
    return replace(p, **{key: value for key, value in changes.items() if value is not None})
