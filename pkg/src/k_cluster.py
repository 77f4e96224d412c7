"""
Восстановление k-кластерного сигнала.

Окно x * H хешируется в B бинов (HashToBins); в каждом бине работает то
же голосование по фазам, что и для одного кластера. Списки частот
нескольких независимых этапов объединяются, после чего сигнал
аппроксимируется в смешанном базисе exp(2 pi i f t) * P(t) методом
наименьших квадратов.
"""

import logging
import math
import time
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
import numpy.polynomial.legendre as npleg

from .config import RecoveryConfig
from .errors import ConfigError, LocationFailedError
from .filters import FilterG, FilterH, build_filter_g, build_filter_h
from .hashing import HashConfig, draw_hash_config, hash_to_bins, window_source
from .models import FrequencyList, MixedBasisModel, RecoveryReport, estimate_residual, model_error_T
from .one_cluster import OneClusterParams, VoteRound, run_search, theory_degree, vote_round
from .parallel import run_repeats, run_repeats_tolerant
from .poly_interp import Polynomial, weighted_least_squares
from .signal_core import SignalSource

logger = logging.getLogger(__name__)

# bins whose energy is below this fraction of the strongest bin stay inactive
DEAD_BIN_FRACTION = 1e-9


@dataclass(frozen=True)
class KClusterParams:
    """Per-bin search parameters plus the hashing and regression sizes."""

    one: OneClusterParams
    Delta_hash: float
    stages: int
    list_cap: int
    boost_runs: int
    degree: Optional[int] = None
    c_m: float = 0.05
    m_cap: int = 200_000
    max_columns: int = 256

    @property
    def T(self) -> float:
        return self.one.T

    @property
    def k(self) -> int:
        return self.one.k


def params_from_config(cfg: RecoveryConfig, h: FilterH) -> KClusterParams:
    """Resolve every default of cfg against the built window filter."""
    one = OneClusterParams.build(
        cfg.T, cfg.F, cfg.cluster_width, k=cfg.k,
        delta=cfg.delta, R_est=cfg.R_est, R_repeats=cfg.R_repeats, R_loc=cfg.R_loc,
        t_regions=cfg.t_regions, D_max=cfg.D_max, c_vote=cfg.c_vote, c_beta=cfg.c_beta,
        s_vote=cfg.s_vote, d_cap=cfg.d_cap, poly_fail_prob=cfg.poly_fail_prob, refine=cfg.refine,
    )
    runs = 2 * cfg.k + 5
    return KClusterParams(
        one=one,
        Delta_hash=cfg.Delta_h if cfg.Delta_h is not None else h.Delta_h,
        stages=cfg.stages or runs,
        list_cap=cfg.list_cap or 4 * cfg.k,
        boost_runs=runs,
        degree=cfg.degree,
        c_m=cfg.c_m,
        m_cap=cfg.m_cap,
        max_columns=cfg.max_columns,
    )


@dataclass
class BinPairs:
    """Per-bin legal pairs u(tau), u(tau + beta); inactive bins carry zeros."""

    first: np.ndarray
    second: np.ndarray
    active: np.ndarray


def get_empirical_k_energy(windowed: SignalSource, g: FilterG, cfg: HashConfig,
                           p: OneClusterParams, rng: np.random.Generator) -> np.ndarray:
    """RMS of |u_j| over R_est HashToBins calls at uniform tau in [0, T]."""
    taus = rng.uniform(0.0, p.T, size=p.R_est)
    values = np.array([hash_to_bins(windowed, g, cfg.at(tau)) for tau in taus])
    return np.sqrt(np.mean(np.abs(values) ** 2, axis=0))


def get_legal_k_sample(windowed: SignalSource, g: FilterG, cfg: HashConfig, p: OneClusterParams,
                       beta: float, z_emp: np.ndarray, rng: np.random.Generator) -> BinPairs:
    """
    One legal pair per bin from R_repeats paired HashToBins calls.

    A bin is inactive when none of its draws is heavy (|u_j| >= z_emp_j / 2)
    or its energy is numerically zero.
    """
    taus = rng.uniform(0.0, p.T - beta, size=p.R_repeats)
    first = np.array([hash_to_bins(windowed, g, cfg.at(tau)) for tau in taus])
    second = np.array([hash_to_bins(windowed, g, cfg.at(tau + beta)) for tau in taus])

    alive = z_emp > DEAD_BIN_FRACTION * max(float(np.max(z_emp)), 0.0)
    heavy = np.abs(first) >= 0.5 * z_emp[None, :]
    weight = (np.abs(first) ** 2 + np.abs(second) ** 2) * heavy
    totals = weight.sum(axis=0)
    active = alive & (totals > 0)

    n_bins = len(z_emp)
    pick_first = np.zeros(n_bins, dtype=complex)
    pick_second = np.zeros(n_bins, dtype=complex)
    for j in np.flatnonzero(active):
        idx = rng.choice(p.R_repeats, p=weight[:, j] / totals[j])
        pick_first[j] = first[idx, j]
        pick_second[j] = second[idx, j]
    return BinPairs(first=pick_first, second=pick_second, active=active)


def _bin_draw(windowed: SignalSource, g: FilterG, cfg: HashConfig, p: OneClusterParams,
              z_emp: np.ndarray):
    def draw(beta, rng):
        pairs = get_legal_k_sample(windowed, g, cfg, p, beta, z_emp, rng)
        return pairs.first, pairs.second, pairs.active

    return draw


def locate_k_inner(windowed: SignalSource, g: FilterG, cfg: HashConfig, p: OneClusterParams,
                   z_emp: np.ndarray, lo: np.ndarray, L: float, beta_hat: float,
                   rng: np.random.Generator) -> VoteRound:
    """One voting round for all B bins; one beta per vote is shared across bins."""
    return vote_round(_bin_draw(windowed, g, cfg, p, z_emp), np.asarray(lo, dtype=float),
                      L, beta_hat, p, rng)


def locate_k_signal(windowed: SignalSource, g: FilterG, cfg: HashConfig, p: OneClusterParams,
                    z_emp: np.ndarray, rng: np.random.Generator):
    """Multi-scale search in every bin; returns (estimates, located)."""
    return run_search(_bin_draw(windowed, g, cfg, p, z_emp), cfg.B, p, rng)


def one_stage(x: SignalSource, h: FilterH, g: FilterG, cfg: HashConfig, p: KClusterParams,
              rng: np.random.Generator) -> FrequencyList:
    """
    Candidate frequencies from one hash configuration.

    Args:
        x: Noisy signal source
        h: Window filter
        g: Bin filter
        cfg: Freshly drawn permutation
        p: Search parameters
        rng: Random generator

    Returns:
        FrequencyList with one entry per located bin (possibly empty)
    """
    windowed = window_source(x, h)
    z_emp = get_empirical_k_energy(windowed, g, cfg, p.one, rng)
    if not np.any(z_emp > 0):
        logger.debug("Stage found no energy in any bin")
        return FrequencyList((), cap=cfg.B)
    estimates, located = locate_k_signal(windowed, g, cfg, p.one, z_emp, rng)
    found = estimates[located]
    logger.debug(f"Stage sigma={cfg.sigma:.4g}, b={cfg.b:.4g}: {len(found)} candidates")
    return FrequencyList(tuple(found.tolist()), cap=cfg.B)


def multiple_stages(x: SignalSource, h: FilterH, g: FilterG, p: KClusterParams,
                    rng: np.random.Generator) -> List[FrequencyList]:
    """p.stages independent stages, each with its own (sigma, b)."""

    def stage(stream):
        cfg = draw_hash_config(g, p.Delta_hash, stream)
        return one_stage(x, h, g, cfg, p, stream)

    return run_repeats(stage, rng, p.stages)


def merged_stages(lists: Sequence[Sequence[float]], cap: Optional[int] = None) -> FrequencyList:
    """
    Union of R lists, sorted, keeping every ceil(R/2)-th entry from the first.

    When more than cap entries survive, the ones with the tightest
    neighbourhood in the union are kept.
    """
    R = len(lists)
    if R < 1:
        raise ConfigError("merged_stages needs at least one list")
    union = np.sort(np.concatenate([np.asarray(list(lst), dtype=float) for lst in lists]))
    stride = math.ceil(R / 2)
    picked = np.arange(0, len(union), stride)
    limit = cap if cap is not None else max(len(picked), 1)
    if len(picked) > limit:
        last = len(union) - 1
        spans = union[np.minimum(picked + stride, last)] - union[np.maximum(picked - stride, 0)]
        keep = np.sort(picked[np.argsort(spans, kind="stable")[:limit]])
        logger.warning(f"Merged list of {len(picked)} candidates trimmed to {limit}")
        picked = keep
    return FrequencyList(tuple(union[picked].tolist()), cap=limit)


def frequency_recovery_k_cluster(x: SignalSource, h: FilterH, g: FilterG, p: KClusterParams,
                                 rng: np.random.Generator) -> FrequencyList:
    lists = multiple_stages(x, h, g, p, rng)
    merged = merged_stages([lst.freqs for lst in lists], cap=p.list_cap)
    logger.info(f"Frequency recovery: {len(merged)} candidates from {len(lists)} stages")
    return merged


def dedupe(freqs: Sequence[float], min_sep: float) -> List[float]:
    """Merge runs of sorted frequencies closer than min_sep into their mean."""
    ordered = sorted(float(f) for f in freqs)
    if not ordered:
        return []
    groups = [[ordered[0]]]
    for f in ordered[1:]:
        if f - groups[-1][-1] < min_sep:
            groups[-1].append(f)
        else:
            groups.append([f])
    merged = [float(np.mean(group)) for group in groups]
    if len(merged) < len(ordered):
        logger.debug(f"Merged {len(ordered) - len(merged)} near-duplicate carriers")
    return merged


def mixed_design(freqs: Sequence[float], d: int, T: float):
    """Design builder for exp(2 pi i f t) * L_j(2t/T - 1), frequency-major columns."""
    f = np.asarray(freqs, dtype=float)

    def build(t):
        t = np.asarray(t, dtype=float)
        poly = npleg.legvander(2 * t / T - 1, d)
        carriers = np.exp(2j * np.pi * np.outer(t, f))
        return (carriers[:, :, None] * poly[:, None, :]).reshape(len(t), -1)

    return build


def regression_size(n_params: int, p: KClusterParams) -> int:
    """m = min(c_m p^2 ln p, m_cap), never below max(4p, 32)."""
    size = math.ceil(p.c_m * n_params ** 2 * math.log(max(n_params, 2)))
    return max(min(size, p.m_cap), 4 * n_params, 32)


def fit_degree(n_freqs: int, p: KClusterParams, Delta_h: float) -> int:
    if p.degree is not None:
        return p.degree
    theory = theory_degree(p.T, p.one.Delta, Delta_h, p.k, p.one.delta)
    d = min(theory, p.one.d_cap, p.max_columns // max(n_freqs, 1) - 1)
    if d < theory:
        logger.debug(f"Degree {theory} capped at {d}")
    return max(d, 0)


def _fit_on_points(freqs: List[float], d: int, T: float, t: np.ndarray,
                   values: np.ndarray) -> MixedBasisModel:
    coeffs = weighted_least_squares(mixed_design(freqs, d, T), t, values, np.ones(len(t)),
                                    min_rank=d + len(freqs))  # each extra carrier adds a direction
    blocks = coeffs.reshape(len(freqs), d + 1)
    return MixedBasisModel(
        [(f, Polynomial(block, (0.0, T), "legendre")) for f, block in zip(freqs, blocks)], T
    )


def _prepare(freqs: Sequence[float], p: KClusterParams, Delta_h: float):
    if len(freqs) == 0:
        raise LocationFailedError("no candidate frequencies to fit")
    # the merge distance follows the degree and the degree follows the carrier count
    d = fit_degree(len(freqs), p, Delta_h)
    carriers = dedupe(freqs, 1 / (max(d, 1) * p.T))
    for _ in range(len(freqs)):
        settled = fit_degree(len(carriers), p, Delta_h)
        if settled == d:
            break
        d = settled
        carriers = dedupe(freqs, 1 / (max(d, 1) * p.T))
    return carriers, fit_degree(len(carriers), p, Delta_h)


def signal_recovery_k_cluster(x: SignalSource, freqs: Sequence[float], p: KClusterParams,
                              rng: np.random.Generator, Delta_h: Optional[float] = None
                              ) -> MixedBasisModel:
    """
    Least-squares fit of x onto the mixed basis built from freqs.

    Args:
        x: Signal source on [0, T]
        freqs: Candidate carriers (deduplicated here)
        p: Regression sizes
        rng: Random generator
        Delta_h: Window bandwidth entering the degree formula (default: hashing scale)

    Returns:
        MixedBasisModel with one Legendre polynomial per carrier
    """
    carriers, d = _prepare(freqs, p, Delta_h or p.Delta_hash)
    m = regression_size(len(carriers) * (d + 1), p)
    t = rng.uniform(0.0, p.T, size=m)
    logger.debug(f"Mixed regression: {len(carriers)} carriers, degree {d}, {m} samples")
    return _fit_on_points(carriers, d, p.T, t, x.sample(t))


def combine_models_by_median(models: Sequence[MixedBasisModel], p: KClusterParams,
                             rng: np.random.Generator) -> MixedBasisModel:
    """Coordinatewise median of the candidate models at fresh points, then refit."""
    reference = models[0]
    carriers = reference.freqs
    d = reference.degree
    m = regression_size(len(carriers) * (d + 1), p)
    t = rng.uniform(0.0, p.T, size=m)
    evaluations = np.array([model(t) for model in models])
    medians = np.median(evaluations.real, axis=0) + 1j * np.median(evaluations.imag, axis=0)
    return _fit_on_points(carriers, d, p.T, t, medians)


def signal_recovery_k_cluster_boosted(x: SignalSource, freqs: Sequence[float], p: KClusterParams,
                                      rng: np.random.Generator, Delta_h: Optional[float] = None
                                      ) -> MixedBasisModel:
    """boost_runs independent fits combined by median."""
    carriers, d = _prepare(freqs, p, Delta_h or p.Delta_hash)
    fixed = replace(p, degree=d)
    models, failures = run_repeats_tolerant(
        lambda stream: signal_recovery_k_cluster(x, carriers, fixed, stream), rng, p.boost_runs
    )
    if not models:
        raise failures[0]
    if failures:
        logger.warning(f"{len(failures)} of {p.boost_runs} regression runs failed")
    return combine_models_by_median(models, fixed, rng)


def cft_k_cluster(x: SignalSource, cfg: RecoveryConfig, rng: np.random.Generator,
                  truth=None) -> RecoveryReport:
    """
    Full pipeline: filters, frequency recovery, boosted mixed regression.

    Args:
        x: Noisy signal source on [0, cfg.T]
        cfg: Problem description and knobs
        rng: Random generator
        truth: Optional clean signal; when given the report carries err_T

    Returns:
        RecoveryReport whose n_samples is the counter delta of x
    """
    started = time.perf_counter()
    before = x.samples_taken
    h = build_filter_h(cfg.k, cfg.delta, cfg.T, s1=cfg.h_s1, ell=cfg.h_ell)
    g = build_filter_g(cfg.B, cfg.delta, alpha=cfg.g_alpha, c2=cfg.g_c2)
    p = params_from_config(cfg, h)
    logger.info(f"Recovering k={cfg.k} on T={cfg.T}, F={cfg.F}: Delta={p.one.Delta:.4g}, "
                f"Delta_hash={p.Delta_hash:.4g}, B={g.B}, D={g.D}")

    freqs = frequency_recovery_k_cluster(x, h, g, p, rng)
    if len(freqs) == 0:
        raise LocationFailedError("no bin located a frequency in any stage")
    model = signal_recovery_k_cluster_boosted(x, freqs.freqs, p, rng)
    residual = estimate_residual(x, model, rng)
    n_samples = x.samples_taken - before
    err = model_error_T(model, truth, cfg.T) if truth is not None else None
    logger.info(f"Recovered {len(model.terms)} carriers with {n_samples} samples, residual {residual:.3g}")
    return RecoveryReport(
        model=model,
        n_samples=n_samples,
        err_T=err,
        noise_level=residual,
        seed=cfg.seed,
        wall_time=time.perf_counter() - started,
        freqs=list(freqs.freqs),
        config=cfg.to_dict(),
        command="recover-k",
    )
