"""
Бенчмарк: серии Монте-Карло для трех конвейеров (poly, one, k).

Каждое испытание получает свой seed из общего генератора, строит тестовый
сигнал, добавляет белый шум заданного SNR и записывает строку
(seed, k, SNR, err_ratio, n_samples, time_ms).
"""

import logging
import math
import time
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import profile_config
from .errors import ConfigError, RecoveryFailure
from .filters import build_filter_h
from .k_cluster import cft_k_cluster
from .models import model_error_T
from .one_cluster import OneClusterParams, cft_1cluster
from .poly_interp import random_polynomial, robust_poly_learn, robust_poly_learn_boosted
from .signal_core import (
    FourierSparseSignal,
    NoiseSpec,
    SignalGenSpec,
    SignalSource,
    gen_signal,
    norm_T,
    with_noise,
)

logger = logging.getLogger(__name__)

SUITES = ("poly", "one", "k")


def noise_for(clean_norm: float, snr_db: float) -> NoiseSpec:
    if math.isinf(snr_db):
        return NoiseSpec()
    return NoiseSpec(kind="gaussian-white", level=clean_norm * 10 ** (-snr_db / 20))


def _ratio(err: float, noise: NoiseSpec, clean_norm: float) -> float:
    scale = noise.level if noise.level > 0 else clean_norm
    return err / scale


def poly_trial(seed: int, d: int = 10, snr_db: float = 10.0, T: float = 1.0,
               p: Optional[float] = None) -> Dict:
    """Random complex Legendre polynomial of degree d plus white noise."""
    rng = np.random.default_rng(seed)
    truth = random_polynomial(d, T, rng)
    clean_norm = norm_T(truth, T)
    noise = noise_for(clean_norm, snr_db)
    x = with_noise(SignalSource(truth, label="poly"), noise, T, rng)
    if p is None:
        fit = robust_poly_learn(x, d, T, rng)
    else:
        fit = robust_poly_learn_boosted(x, d, T, p, rng)
    err = norm_T(lambda t: fit(t) - truth(t), T)
    return {"k": 0, "err_ratio": _ratio(err, noise, clean_norm), "n_samples": x.samples_taken}


def cluster_fixture(rng: np.random.Generator, T: float, F: float, Delta: float,
                    tones: int = 2) -> FourierSparseSignal:
    """tones frequencies inside a width-Delta window at a random centre."""
    center = rng.uniform(-F + Delta, F - Delta)
    spec = SignalGenSpec(k=tones, F=F, cluster_layout=((center, Delta, tones),))
    return gen_signal(spec, rng)


def spaced_fixture(rng: np.random.Generator, k: int, T: float, F: float) -> FourierSparseSignal:
    """k tones in [-0.9F, 0.9F] with gaps of at least 10/T."""
    return gen_signal(SignalGenSpec(k=k, F=F * 0.9, min_gap=10.0 / T), rng)


def gapless_fixture(rng: np.random.Generator, k: int, T: float, F: float) -> FourierSparseSignal:
    """
    Two tones inside one width-1/T cluster plus k - 2 isolated tones.

    The other tones sit at least 10/T from the pair centre, so only the
    pair itself breaks the usual separation.
    """
    if k < 2:
        raise ConfigError(f"a gapless pair needs k >= 2, got {k}")
    centers = spaced_fixture(rng, k - 1, T, F).freqs
    layout = ((float(centers[0]), 1.0 / T, 2),) + tuple((float(c), 0.0, 1) for c in centers[1:])
    return gen_signal(SignalGenSpec(k=k, F=F, cluster_layout=layout), rng)


def one_trial(seed: int, snr_db: float = 20.0, T: float = 1.0, F: float = 100.0,
              Delta: float = 2.0) -> Dict:
    rng = np.random.default_rng(seed)
    truth = cluster_fixture(rng, T, F, Delta / T)
    clean_norm = norm_T(truth, T)
    noise = noise_for(clean_norm, snr_db)
    x = with_noise(SignalSource.from_signal(truth), noise, T, rng)
    h = build_filter_h(1, 0.01, T)
    params = OneClusterParams.build(T, F, Delta / T, k=1)
    model, _ = cft_1cluster(x, h, params, rng)
    err = model_error_T(model, truth, T)
    return {"k": truth.k, "err_ratio": _ratio(err, noise, clean_norm), "n_samples": x.samples_taken}


def k_trial(seed: int, k: int = 2, snr_db: float = 20.0, T: float = 1.0, F: float = 100.0,
            profile: str = "fast", gapless: bool = False, **overrides) -> Dict:
    """
    Random k-sparse truth recovered with the named config profile.

    With gapless=True the first two tones share one cluster of width
    Delta = 1/T and the rest keep the usual 10/T spacing.
    """
    rng = np.random.default_rng(seed)
    truth = gapless_fixture(rng, k, T, F) if gapless else spaced_fixture(rng, k, T, F)
    clean_norm = norm_T(truth, T)
    noise = noise_for(clean_norm, snr_db)
    x = with_noise(SignalSource.from_signal(truth), noise, T, rng)
    cfg = profile_config(profile, k, T, F, seed=seed, **overrides)
    report = cft_k_cluster(x, cfg, rng, truth=truth)
    return {"k": k, "err_ratio": _ratio(report.err_T, noise, clean_norm), "n_samples": report.n_samples}


def run_suite(suite: str, trials: int, seed: int = 0, snr_db: Optional[float] = None,
              k: int = 2, d: int = 10, profile: str = "fast", gapless: bool = False) -> List[Dict]:
    """
    Run trials of one suite.

    Args:
        suite: "poly", "one" or "k"
        trials: Number of trials
        seed: Seed of the generator that hands out per-trial seeds
        snr_db: Signal-to-noise ratio in dB (inf for noiseless)
        k: Sparsity for the k suite
        d: Degree for the poly suite
        profile: Config profile of the k suite ("fast" or "desk")
        gapless: Put the first two tones of each k trial into one cluster

    Returns:
        One row per trial; failed recoveries get err_ratio = inf
    """
    if suite not in SUITES:
        raise ConfigError(f"unknown suite '{suite}'")
    if snr_db is None:
        snr_db = 10.0 if suite == "poly" else 20.0
    seeds = np.random.default_rng(seed).integers(0, 2 ** 31 - 1, size=trials)
    rows = []
    for trial_seed in seeds.tolist():
        started = time.perf_counter()
        try:
            if suite == "poly":
                result = poly_trial(trial_seed, d=d, snr_db=snr_db)
            elif suite == "one":
                result = one_trial(trial_seed, snr_db=snr_db)
            else:
                result = k_trial(trial_seed, k=k, snr_db=snr_db, profile=profile, gapless=gapless)
        except RecoveryFailure as failure:
            logger.warning(f"Trial {trial_seed} failed: {failure}")
            result = {"k": k if suite == "k" else 0, "err_ratio": math.inf, "n_samples": 0}
        result["seed"] = trial_seed
        result["SNR"] = snr_db
        result["time_ms"] = round((time.perf_counter() - started) * 1000, 3)
        rows.append(result)
        logger.debug(f"{suite} trial {trial_seed}: err_ratio={result['err_ratio']:.3g}")
    return rows


def summarize(rows: Sequence[Dict]) -> Dict:
    ratios = np.array([row["err_ratio"] for row in rows], dtype=float)
    return {
        "trials": len(rows),
        "median_err_ratio": float(np.median(ratios)) if len(ratios) else math.nan,
        "p95_err_ratio": float(np.percentile(ratios, 95)) if len(ratios) else math.nan,
        "mean_samples": float(np.mean([row["n_samples"] for row in rows])) if rows else math.nan,
    }


def sample_slope(ft_values: Sequence[float] = (1e3, 1e6, 1e9), k: int = 2, seed: int = 0,
                 T: float = 1.0, profile: str = "fast", gapless: bool = False, **overrides) -> List[Dict]:
    """
    Sample counts of the k pipeline at fixed k for growing F*T.

    Returns rows (FT, n_samples, growth) where growth is relative to the
    first row.
    """
    rows = []
    for ft in ft_values:
        F = ft / (2 * T)
        rng = np.random.default_rng(seed)
        truth = gapless_fixture(rng, k, T, F) if gapless else spaced_fixture(rng, k, T, F)
        x = SignalSource.from_signal(truth)
        try:
            report = cft_k_cluster(x, profile_config(profile, k, T, F, seed=seed, **overrides), rng)
            n = report.n_samples
        except RecoveryFailure as failure:
            logger.warning(f"Slope run at FT={ft:g} failed: {failure}")
            n = x.samples_taken
        rows.append({"FT": ft, "n_samples": n})
    base = rows[0]["n_samples"] or 1
    for row in rows:
        row["growth"] = row["n_samples"] / base
    return rows
