"""
Unit tests for k-cluster frequency merging and mixed-basis regression.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from src.bench import k_trial
from src.config import RecoveryConfig, desk_config, fast_config
from src.errors import ConfigError, LocationFailedError, SingularDesignError
from src.filters import build_filter_g, build_filter_h
from src.hashing import draw_hash_config, window_source
from src.k_cluster import (
    KClusterParams,
    cft_k_cluster,
    combine_models_by_median,
    dedupe,
    fit_degree,
    frequency_recovery_k_cluster,
    get_empirical_k_energy,
    get_legal_k_sample,
    locate_k_inner,
    merged_stages,
    mixed_design,
    one_stage,
    params_from_config,
    regression_size,
    signal_recovery_k_cluster,
    signal_recovery_k_cluster_boosted,
)
from src.models import MixedBasisModel, model_error_T
from src.one_cluster import OneClusterParams, search_schedule
from src.poly_interp import Polynomial
from src.signal_core import FourierSparseSignal, SignalSource, max_to_mean_ratio, norm_T


def make_params(**overrides):
    settings = dict(
        one=OneClusterParams.build(1.0, 100.0, 1.0, k=2),
        Delta_hash=8.0,
        stages=3,
        list_cap=8,
        boost_runs=3,
    )
    settings.update(overrides)
    return KClusterParams(**settings)


class TestMerging:
    """Test cases for candidate list handling."""

    def test_merged_stages_keeps_every_other_entry(self):
        lists = [[1.0, 5.0], [1.01, 5.02], [0.99, 4.98]]
        merged = merged_stages(lists)

        assert merged.freqs == (0.99, 1.01, 5.0)

    def test_merged_stages_respects_cap(self):
        lists = [[1.0, 5.0], [1.01, 5.02], [0.99, 4.98]]

        assert len(merged_stages(lists, cap=2)) == 2

    def test_merged_stages_needs_lists(self):
        with pytest.raises(ConfigError):
            merged_stages([])

    def test_dedupe(self):
        assert dedupe([3.0, 1.0, 1.05], 0.1) == pytest.approx([1.025, 3.0])
        assert dedupe([], 0.1) == []


class TestSizes:
    """Test cases for regression sizes and degrees."""

    def test_regression_size(self):
        p = make_params()

        assert regression_size(10, p) == 40
        assert regression_size(200, p) == int(np.ceil(0.05 * 200 ** 2 * np.log(200)))
        assert regression_size(200, make_params(m_cap=1000)) == 1000

    def test_fit_degree(self):
        p = make_params()

        assert fit_degree(1, p, 8.0) == 40
        assert fit_degree(10, p, 8.0) == 24
        assert fit_degree(10, make_params(degree=3), 8.0) == 3

    def test_mixed_design_layout(self):
        t = np.linspace(0, 1, 5)
        design = mixed_design([2.0, -1.0], 3, 1.0)(t)

        assert design.shape == (5, 8)
        assert np.allclose(design[:, 0], np.exp(2j * np.pi * 2.0 * t))
        assert np.allclose(design[:, 4], np.exp(-2j * np.pi * t))

    def test_params_from_config(self):
        cfg = desk_config(2, 1.0, 100.0)
        p = params_from_config(cfg, build_filter_h(2, cfg.delta, cfg.T))

        assert p.one.Delta == 1.0
        assert p.Delta_hash == 8.0
        assert p.stages == 9
        assert p.list_cap == 8
        assert p.boost_runs == 9


class TestBinnedLocation:
    """Test cases for per-bin energy, legal pairs and one stage."""

    def setup_method(self):
        self.f0 = 37.0
        self.h = build_filter_h(1, 0.01, 1.0)
        self.g = build_filter_g(16, 0.01)
        self.cfg = replace(draw_hash_config(self.g, 1000.0, np.random.default_rng(11)), b=self.f0)
        self.p = make_params(one=OneClusterParams.build(1.0, 100.0, 2.0))

    def _windowed(self, amp=1.0):
        return window_source(SignalSource.from_signal(FourierSparseSignal([(self.f0, amp)])), self.h)

    def test_energy_concentrates_in_tone_bin(self):
        z_emp = get_empirical_k_energy(self._windowed(), self.g, self.cfg, self.p.one, np.random.default_rng(0))

        assert z_emp.shape == (16,)
        assert z_emp[0] > 0.5
        assert z_emp[0] > 100 * np.max(z_emp[2:15])

    def test_energy_of_zero_signal(self):
        z_emp = get_empirical_k_energy(self._windowed(0.0), self.g, self.cfg, self.p.one, np.random.default_rng(0))

        assert np.all(z_emp == 0)

    def test_legal_pair_phase(self):
        beta = 0.004
        windowed = self._windowed()
        z_emp = get_empirical_k_energy(windowed, self.g, self.cfg, self.p.one, np.random.default_rng(1))
        pairs = get_legal_k_sample(windowed, self.g, self.cfg, self.p.one, beta, z_emp, np.random.default_rng(2))
        rotated = pairs.second[0] / pairs.first[0] * np.exp(-2j * np.pi * self.f0 * beta)

        assert pairs.active[0]
        assert np.angle(rotated) == pytest.approx(0.0, abs=1e-4)

    def test_zero_signal_has_no_active_bin(self):
        pairs = get_legal_k_sample(self._windowed(0.0), self.g, self.cfg, self.p.one, 0.004,
                                   np.zeros(16), np.random.default_rng(0))

        assert not pairs.active.any()
        assert np.all(pairs.first == 0)

    def test_zero_signal_gives_empty_stage(self):
        x = SignalSource.from_signal(FourierSparseSignal([(self.f0, 0.0)]))

        assert len(one_stage(x, self.h, self.g, self.cfg, self.p, np.random.default_rng(0))) == 0
        assert len(frequency_recovery_k_cluster(x, self.h, self.g, self.p, np.random.default_rng(0))) == 0

    @pytest.mark.slow
    def test_inner_round_locates_tone_bin(self):
        one = OneClusterParams.build(1.0, 100.0, 2.0, R_loc=5)
        windowed = self._windowed()
        z_emp = get_empirical_k_energy(windowed, self.g, self.cfg, one, np.random.default_rng(4))
        L, beta_hat = search_schedule(one)[0]
        outcome = locate_k_inner(windowed, self.g, self.cfg, one, z_emp, np.full(16, -one.F), L, beta_hat,
                                 np.random.default_rng(5))

        assert outcome.located[0]
        assert outcome.estimates[0] == pytest.approx(self.f0, abs=1e-3)

    @pytest.mark.slow
    def test_stage_locates_tone(self):
        x = SignalSource.from_signal(FourierSparseSignal([(self.f0, 1.0)]))
        found = one_stage(x, self.h, self.g, self.cfg, self.p, np.random.default_rng(3))
        one = self.p.one

        assert found.distance_to(self.f0) <= 8 * one.Delta * np.sqrt(one.Delta * one.T)


class TestSignalRecovery:
    """Test cases for the mixed-basis least squares."""

    def setup_method(self):
        self.truth = FourierSparseSignal([(10.0, 1.0), (47.3, -0.5 + 0.2j)])
        self.p = make_params(degree=2)

    def test_known_carriers_are_fit_exactly(self):
        x = SignalSource.from_signal(self.truth)
        model = signal_recovery_k_cluster(x, [10.0, 47.3], self.p, np.random.default_rng(0))

        assert model.freqs == [10.0, 47.3]
        assert model_error_T(model, self.truth, 1.0) < 1e-8

    def test_boosted_fit(self):
        x = SignalSource.from_signal(self.truth)
        model = signal_recovery_k_cluster_boosted(x, [47.3, 10.0], self.p, np.random.default_rng(1))

        assert model_error_T(model, self.truth, 1.0) < 1e-8

    def test_near_duplicates_are_merged(self):
        x = SignalSource.from_signal(self.truth)
        model = signal_recovery_k_cluster(x, [10.0, 10.0 + 1e-9, 47.3], self.p, np.random.default_rng(2))

        assert len(model.terms) == 2

    def test_empty_candidate_list(self):
        x = SignalSource.from_signal(self.truth)
        with pytest.raises(LocationFailedError):
            signal_recovery_k_cluster(x, [], self.p, np.random.default_rng(0))

    def test_duplicate_carriers_make_the_design_singular(self):
        twin = MixedBasisModel([(5.0, Polynomial([1.0, 0.5, 0.0], (0.0, 1.0), "legendre")),
                                (5.0, Polynomial([0.0, 1.0, 0.2], (0.0, 1.0), "legendre"))], 1.0)

        with pytest.raises(SingularDesignError):
            combine_models_by_median([twin], self.p, np.random.default_rng(0))

    def test_close_distinct_carriers_are_fit(self):
        pair = MixedBasisModel([(5.0, Polynomial([1.0, 0.5, 0.0], (0.0, 1.0), "legendre")),
                                (5.5, Polynomial([0.0, 1.0, 0.2], (0.0, 1.0), "legendre"))], 1.0)
        refit = combine_models_by_median([pair], self.p, np.random.default_rng(0))

        assert refit.freqs == [5.0, 5.5]
        assert model_error_T(refit, pair, 1.0) < 1e-8

    def test_merge_distance_follows_the_final_degree(self):
        # ten raw candidates cap the degree at 24; three survive a 1/24 merge and lift it to 40
        raw = [10.0, 10.03] + [20.0] * 4 + [30.0] * 4
        x = SignalSource.from_signal(self.truth)
        model = signal_recovery_k_cluster(x, raw, make_params(), np.random.default_rng(0))

        assert model.freqs == pytest.approx([10.0, 10.03, 20.0, 30.0])
        assert model.degree == 40

    def test_minority_of_corrupted_runs_is_outvoted(self):
        calls = iter(range(100))
        bad = {0, 3}

        def sampler(t):
            clean = self.truth(t)
            return clean + 50.0 if next(calls) in bad else clean

        x = SignalSource(sampler)
        model = signal_recovery_k_cluster_boosted(x, [10.0, 47.3], make_params(degree=2, boost_runs=5),
                                                  np.random.default_rng(4))

        assert model_error_T(model, self.truth, 1.0) < 1e-6


class TestKClusterPipeline:
    """End-to-end recovery."""

    @pytest.mark.slow
    def test_single_tone_pipeline(self):
        truth = FourierSparseSignal([(31.4, 1 + 0.5j)])
        x = SignalSource.from_signal(truth)
        cfg = RecoveryConfig(k=1, T=1.0, F=100.0, seed=0)
        report = cft_k_cluster(x, cfg, np.random.default_rng(0), truth=truth)

        assert min(abs(f - 31.4) for f in report.freqs) < 1.0
        assert report.err_T <= 1e-3 * norm_T(truth, 1.0)
        assert report.n_samples == x.samples_taken
        assert report.command == "recover-k"
        assert report.config["k"] == 1


class TestMixedBasisProperties:
    """Test cases for sup/mean bounds and sampled energies of mixed-basis functions."""

    def _random_model(self, rng, n, d):
        freqs = np.sort(rng.uniform(-50.0, 50.0, size=n))
        terms = [(f, Polynomial(rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1), (0.0, 1.0),
                                "legendre")) for f in freqs]
        return MixedBasisModel(terms, 1.0)

    def test_peak_to_mean_is_bounded_by_dimension(self):
        for seed in range(30):
            rng = np.random.default_rng(seed)
            n, d = int(rng.integers(1, 5)), int(rng.integers(0, 8))
            dim = n * (d + 1)
            model = self._random_model(rng, n, d)

            assert max_to_mean_ratio(model, 1.0) <= 10 * dim ** 4 * (math.log(dim) + 2) ** 3

    def test_sampled_energy_concentrates(self):
        p = make_params()
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            model = self._random_model(rng, 4, 10)
            m = regression_size(4 * 11, p)
            t = rng.uniform(0.0, 1.0, size=m)
            sampled = np.sqrt(np.mean(np.abs(model(t)) ** 2))

            assert 0.7 <= sampled / norm_T(model, 1.0) <= 1.3


class TestProfiles:
    """Test cases for the fast profile and harder signal layouts."""

    def test_fast_profile_is_quick(self):
        started = time.perf_counter()
        result = k_trial(0, k=1, snr_db=math.inf, profile="fast")
        elapsed = time.perf_counter() - started

        assert result["n_samples"] < 200_000
        assert result["err_ratio"] < 0.5
        assert elapsed < 120.0

    def test_fast_profile_on_a_known_tone(self):
        truth = FourierSparseSignal([(31.4, 1.0)])
        x = SignalSource.from_signal(truth)
        report = cft_k_cluster(x, fast_config(1, 1.0, 100.0, seed=0), np.random.default_rng(0), truth=truth)

        assert report.config["stages"] == 3
        assert min(abs(f - 31.4) for f in report.freqs) <= 2.0
        assert report.n_samples < 200_000

    @pytest.mark.slow
    def test_gapless_pair_is_recovered(self):
        result = k_trial(2, k=2, snr_db=math.inf, profile="desk", gapless=True)

        assert result["err_ratio"] < 0.1

    @pytest.mark.slow
    def test_three_spaced_tones_are_covered(self):
        truth = FourierSparseSignal([(-60.3, 1.0), (4.7, 0.8j), (52.1, -0.6 + 0.3j)])
        x = SignalSource.from_signal(truth)
        report = cft_k_cluster(x, desk_config(3, 1.0, 100.0, seed=1), np.random.default_rng(1), truth=truth)

        for f in truth.freqs:
            assert min(abs(f - g) for g in report.freqs) <= 2.0
        assert report.err_T < 0.1 * norm_T(truth, 1.0)
