"""Tests for configuration file module."""

import os
import pytest
from pathlib import Path
from unittest.mock import patch

from relaxfree.config import ExperimentConfig
from relaxfree.config_file import (
    ConfigFileError,
    config_dict_to_config,
    load_config_file,
    load_env_config,
    merge_configs,
    parse_k,
    save_config_file,
)

CONFIGS_DIR = Path(__file__).parent.parent / "configs"


class TestLoadConfigFile:
    """Tests for load_config_file function."""

    def test_load_nonexistent_file(self):
        """Test that a missing file raises ConfigFileError."""
        with pytest.raises(ConfigFileError, match="not found"):
            load_config_file(Path("/nonexistent/config.toml"))

    def test_load_valid_config(self, temp_dir):
        """Test loading valid TOML config."""
        config_path = temp_dir / "config.toml"
        config_path.write_text('''
experiment = "dissipative"
scheme = "RK44"
mode = "rf"
dt = 0.7
t_end = 0.7
verbose = true
''')

        result = load_config_file(config_path)

        assert result["experiment"] == "dissipative"
        assert result["mode"] == "rf"
        assert result["dt"] == 0.7
        assert result["verbose"] is True

    def test_load_invalid_toml(self, temp_dir):
        """Test that malformed TOML raises ConfigFileError."""
        config_path = temp_dir / "config.toml"
        config_path.write_text("invalid toml [[[")

        with pytest.raises(ConfigFileError, match="Failed to parse"):
            load_config_file(config_path)

    def test_load_nested_tables(self, temp_dir):
        """Test that experiment files must be flat."""
        config_path = temp_dir / "config.toml"
        config_path.write_text('[run]\nexperiment = "oscillator"\n')

        with pytest.raises(ConfigFileError, match="flat"):
            load_config_file(config_path)

    @pytest.mark.parametrize("path", sorted(CONFIGS_DIR.glob("*.toml")), ids=lambda p: p.stem)
    def test_shipped_configs_are_valid(self, path):
        """Test that every shipped experiment file builds a configuration."""
        config = ExperimentConfig(**config_dict_to_config(load_config_file(path)))
        assert config.experiment


class TestSaveConfigFile:
    """Tests for save_config_file function."""

    def test_save_basic_config(self, temp_dir):
        """Test saving basic configuration."""
        config = {
            "experiment": "oscillator",
            "dt": 0.1,
            "seed": 3,
            "verbose": False,
        }

        path = save_config_file(config, temp_dir / "config.toml")

        assert path.exists()
        content = path.read_text()
        assert content.startswith("# relaxfree experiment configuration")
        assert 'experiment = "oscillator"' in content
        assert "dt = 0.1" in content
        assert "seed = 3" in content
        assert "verbose = false" in content

    def test_save_and_load_roundtrip(self, temp_dir):
        """Test that a resolved configuration survives save and load."""
        original = ExperimentConfig(
            experiment="burgers", scheme="SSPRK33", mode="idt", cfl=0.15, t_end=0.2, output_path=temp_dir
        )

        path = save_config_file(original.to_dict(), temp_dir / "config.toml")
        loaded = ExperimentConfig(**config_dict_to_config(load_config_file(path)))

        assert loaded == original

    def test_save_k_vector(self, temp_dir):
        """Test saving a k-vector as a float array."""
        path = save_config_file({"k": (1, 2, -2, -1)}, temp_dir / "config.toml")
        content = path.read_text()
        assert "k = [1.0, 2.0, -2.0, -1.0]" in content

    def test_save_skips_none_values(self, temp_dir):
        """Test that None values are not saved."""
        config = {
            "experiment": "oscillator",
            "mu": None,
        }

        path = save_config_file(config, temp_dir / "config.toml")
        content = path.read_text()
        assert "mu" not in content

    def test_save_creates_parent(self, temp_dir):
        """Test that missing parent directories are created."""
        path = save_config_file({"seed": 1}, temp_dir / "nested" / "dir" / "config.toml")
        assert path.exists()


class TestParseK:
    """Tests for parse_k function."""

    def test_valid(self):
        """Test a comma-separated vector."""
        assert parse_k("1,2,-2,-1") == (1.0, 2.0, -2.0, -1.0)

    def test_spaces(self):
        """Test that spaces are ignored."""
        assert parse_k(" 2, -1 , -1 ") == (2.0, -1.0, -1.0)

    def test_empty(self):
        """Test that an empty string is rejected."""
        with pytest.raises(ValueError, match="Empty"):
            parse_k(" , ")

    def test_non_numeric(self):
        """Test that non-numeric entries are rejected."""
        with pytest.raises(ValueError):
            parse_k("1,a")


class TestLoadEnvConfig:
    """Tests for load_env_config function."""

    def test_load_string_env_vars(self):
        """Test loading string environment variables."""
        with patch.dict(os.environ, {
            "RELAXFREE_EXPERIMENT": "burgers",
            "RELAXFREE_SCHEME": "SSPRK33",
            "RELAXFREE_OUTPUT_PATH": "./env_output",
        }):
            result = load_env_config()

        assert result["experiment"] == "burgers"
        assert result["scheme"] == "SSPRK33"
        assert result["output_path"] == "./env_output"

    def test_load_numeric_env_vars(self):
        """Test loading numeric environment variables."""
        with patch.dict(os.environ, {
            "RELAXFREE_CFL": "0.15",
            "RELAXFREE_T_END": "0.2",
            "RELAXFREE_SEED": "2",
        }):
            result = load_env_config()

        assert result["cfl"] == 0.15
        assert result["t_end"] == 0.2
        assert result["seed"] == 2

    def test_load_boolean_env_vars(self):
        """Test loading boolean environment variables."""
        with patch.dict(os.environ, {"RELAXFREE_VERBOSE": "true"}):
            result = load_env_config()
            assert result["verbose"] is True

        with patch.dict(os.environ, {"RELAXFREE_VERBOSE": "false"}):
            result = load_env_config()
            assert result["verbose"] is False

        with patch.dict(os.environ, {"RELAXFREE_VERBOSE": "1"}):
            result = load_env_config()
            assert result["verbose"] is True

    def test_load_k_env_var(self):
        """Test loading a k-vector."""
        with patch.dict(os.environ, {"RELAXFREE_K": "1,2,-2,-1"}):
            result = load_env_config()

        assert result["k"] == (1.0, 2.0, -2.0, -1.0)

    def test_invalid_numeric_env_var(self):
        """Test invalid numeric values are handled."""
        with patch.dict(os.environ, {"RELAXFREE_DT": "not_a_number"}):
            result = load_env_config()

        assert "dt" not in result

    def test_empty_env(self):
        """Test loading with no environment variables set."""
        with patch.dict(os.environ, {}, clear=True):
            result = load_env_config()
        assert result == {}


class TestMergeConfigs:
    """Tests for merge_configs function."""

    def test_merge_empty_configs(self):
        """Test merging empty configs."""
        result = merge_configs({}, {})
        assert result == {}

    def test_merge_multiple_configs(self):
        """Test that later configs override earlier ones."""
        config1 = {"dt": 0.5, "mode": "r"}
        config2 = {"dt": 0.7, "scheme": "RK44"}
        config3 = {"mode": "rf"}

        result = merge_configs(config1, config2, config3)

        assert result["dt"] == 0.7  # From config2
        assert result["mode"] == "rf"  # From config3
        assert result["scheme"] == "RK44"  # From config2

    def test_merge_skips_none_values(self):
        """Test that None values don't override."""
        result = merge_configs({"dt": 0.5}, {"dt": None})
        assert result["dt"] == 0.5


class TestConfigDictToConfig:
    """Tests for config_dict_to_config function."""

    def test_converts_string_path(self):
        """Test that string paths are converted to Path objects."""
        result = config_dict_to_config({"output_path": "./test/output"})

        assert isinstance(result["output_path"], Path)
        assert result["output_path"] == Path("./test/output")

    def test_converts_k_list(self):
        """Test that k lists and strings become float tuples."""
        assert config_dict_to_config({"k": [1, 2, -2, -1]})["k"] == (1.0, 2.0, -2.0, -1.0)
        assert config_dict_to_config({"k": "2,-1,-1"})["k"] == (2.0, -1.0, -1.0)

    def test_integer_step_becomes_float(self):
        """Test that TOML integers are accepted for float fields."""
        result = config_dict_to_config({"t_end": 100, "dt": 1})
        assert isinstance(result["t_end"], float)
        assert isinstance(result["dt"], float)

    def test_unknown_key(self):
        """Test that unknown keys are rejected."""
        with pytest.raises(ValueError, match="Unknown configuration keys"):
            config_dict_to_config({"interval": 5.0})

    def test_preserves_other_values(self):
        """Test that other values are preserved unchanged."""
        result = config_dict_to_config({"mode": "idt", "seed": 4, "verbose": True})

        assert result["mode"] == "idt"
        assert result["seed"] == 4
        assert result["verbose"] is True
