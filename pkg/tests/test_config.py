"""
Unit tests for recovery and command-line configuration.
"""

import json
import os
import tempfile

import pytest

from src.config import (
    CliConfig,
    RecoveryConfig,
    desk_config,
    fast_config,
    load_config,
    next_power_of_two,
    profile_config,
)
from src.errors import ConfigError
from src.signal_core import load_signal


class TestRecoveryConfig:
    """Test cases for RecoveryConfig."""

    def test_next_power_of_two(self):
        assert next_power_of_two(2) == 2
        assert next_power_of_two(3) == 4
        assert next_power_of_two(16) == 16
        assert next_power_of_two(17) == 32

    def test_bin_count_rounded_up(self):
        assert RecoveryConfig(k=1, T=1.0, F=10.0, B=12).B == 16

    def test_cluster_width(self):
        assert RecoveryConfig(k=2, T=2.0, F=10.0).cluster_width == pytest.approx(1.0)
        assert RecoveryConfig(k=2, T=2.0, F=10.0, Delta=3.0).cluster_width == 3.0

    def test_dict_round_trip(self):
        cfg = RecoveryConfig(k=3, T=1.0, F=100.0, seed=4, degree=6)

        assert RecoveryConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_errors(self):
        with pytest.raises(ConfigError):
            RecoveryConfig.from_dict({"k": 1, "T": 1.0, "F": 1.0, "colour": "red"})
        with pytest.raises(ConfigError):
            RecoveryConfig.from_dict({"T": 1.0, "F": 1.0})

    def test_validation(self):
        with pytest.raises(ConfigError):
            RecoveryConfig(k=0, T=1.0, F=1.0)
        with pytest.raises(ConfigError):
            RecoveryConfig(k=1, T=1.0, F=1.0, delta=2.0)
        with pytest.raises(ConfigError):
            RecoveryConfig(k=1, T=1.0, F=1.0, Delta=-1.0)
        with pytest.raises(ConfigError):
            RecoveryConfig(k=1, T=1.0, F=1.0, t_regions=3)

    def test_with_overrides(self):
        cfg = RecoveryConfig(k=1, T=1.0, F=10.0).with_overrides(R_loc=30, degree=None)

        assert cfg.R_loc == 30
        assert cfg.degree is None

    def test_desk_config(self):
        cfg = desk_config(2, 2.0, 100.0, B=32)

        assert cfg.Delta == 0.5
        assert cfg.Delta_h == 4.0
        assert cfg.B == 32

    def test_fast_config_lowers_repeats(self):
        cfg = fast_config(1, 1.0, 100.0)

        assert cfg.Delta == 1.0
        assert cfg.Delta_h == 8.0
        assert (cfg.stages, cfg.R_est, cfg.R_repeats, cfg.R_loc) == (3, 8, 4, 9)
        assert fast_config(1, 1.0, 100.0, R_loc=15).R_loc == 15

    def test_profile_config(self):
        assert profile_config("desk", 2, 1.0, 100.0) == desk_config(2, 1.0, 100.0)
        assert profile_config("fast", 2, 1.0, 100.0, seed=4).seed == 4
        with pytest.raises(ConfigError):
            profile_config("turbo", 2, 1.0, 100.0)


class TestLoadConfig:
    """Test cases for config files."""

    def _write(self, content):
        with tempfile.NamedTemporaryFile(mode="w", delete=False, suffix=".json") as f:
            f.write(content)
            return f.name

    def test_file_then_overrides(self):
        temp_path = self._write(json.dumps({"k": 2, "T": 1.0, "F": 100.0, "B": 8}))

        try:
            cfg = load_config(temp_path, k=3, degree=None)

            assert cfg.k == 3
            assert cfg.B == 8
            assert cfg.F == 100.0
        finally:
            os.unlink(temp_path)

    def test_overrides_without_file(self):
        cfg = load_config(None, k=1, T=1.0, F=5.0)

        assert (cfg.k, cfg.T, cfg.F) == (1, 1.0, 5.0)

    def test_bad_files(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/config.json", k=1, T=1.0, F=1.0)

        for content in ("{not json", "[1, 2]", json.dumps({"kk": 1})):
            temp_path = self._write(content)
            try:
                with pytest.raises(ConfigError):
                    load_config(temp_path, k=1, T=1.0, F=1.0)
            finally:
                os.unlink(temp_path)


class TestCliConfig:
    """Test cases for CliConfig."""

    def test_to_dict(self):
        cli = CliConfig(subcommand="gen", outputs={"output": "sig.json"}, seed=7, options={"k": 3})

        data = cli.to_dict()

        assert data["subcommand"] == "gen"
        assert data["seed"] == 7
        assert "recovery" not in data

    def test_with_recovery(self):
        cli = CliConfig(subcommand="recover-k").with_recovery(RecoveryConfig(k=1, T=1.0, F=1.0))

        assert cli.to_dict()["recovery"]["k"] == 1


class TestBundledFiles:
    """Test cases for the example files shipped in data/."""

    DATA = os.path.join(os.path.dirname(__file__), "..", "data")

    def test_desk_config_file(self):
        cfg = load_config(os.path.join(self.DATA, "configs", "desk_k.json"), k=3, T=1.0, F=100.0)

        assert cfg.Delta == 1.0
        assert cfg.Delta_h == 8.0
        assert cfg.d_cap == 24

    def test_fast_config_file_matches_profile(self):
        cfg = load_config(os.path.join(self.DATA, "configs", "fast_k.json"), k=1, T=1.0, F=100.0)

        assert cfg == fast_config(1, 1.0, 100.0)

    def test_example_signals(self):
        sig, T, F = load_signal(os.path.join(self.DATA, "signals", "clusters_k3.json"))

        assert sig.k == 3
        assert (T, F) == (1.0, 100.0)
        assert load_signal(os.path.join(self.DATA, "signals", "tone_k1.json"))[0].k == 1
