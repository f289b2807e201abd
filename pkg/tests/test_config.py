"""Tests for configuration module."""

import pytest
from pathlib import Path
from relaxfree.config import ExperimentConfig


class TestExperimentConfig:
    """Tests for the ExperimentConfig class."""

    def test_default_values(self):
        """Test that default values are set correctly."""
        config = ExperimentConfig()

        assert config.experiment == "oscillator"
        assert config.scheme == "RK44"
        assert config.mode == "rf"
        assert config.k is None
        assert config.dt == 0.1
        assert config.mu is None
        assert config.cfl is None
        assert config.t_end == 100.0
        assert config.m == 128
        assert config.output_path == Path("./results")
        assert config.verbose is False

    def test_custom_values(self, temp_dir):
        """Test configuration with custom values."""
        config = ExperimentConfig(
            experiment="advection-noise",
            scheme="SSPRK33",
            mode="r",
            mu=0.6,
            t_end=2.0,
            seed=7,
            m=64,
            output_path=temp_dir / "out",
            record_every=10,
            verbose=True,
        )

        assert config.scheme == "SSPRK33"
        assert config.mu == 0.6
        assert config.t_end == 2.0
        assert config.seed == 7
        assert config.m == 64
        assert config.output_path == temp_dir / "out"
        assert config.record_every == 10

    def test_string_path_conversion(self):
        """Test that string paths are converted to Path objects."""
        config = ExperimentConfig(output_path="./output/test")
        assert isinstance(config.output_path, Path)

    def test_scheme_name_normalized(self):
        """Test that scheme spellings are normalized."""
        assert ExperimentConfig(scheme="rk(4,4)").scheme == "RK44"

    @pytest.mark.parametrize(
        "experiment, field, value, t_end",
        [
            ("advection-noise", "mu", 0.9, 1.0),
            ("advection-smooth", "mu", 0.9, 1.0),
            ("dissipative", "dt", 0.5, 0.5),
            ("oscillator", "dt", 0.1, 100.0),
            ("burgers", "cfl", 0.3, 2.0),
        ],
    )
    def test_step_defaults(self, experiment, field, value, t_end):
        """Test the default step convention and final time per experiment."""
        config = ExperimentConfig(experiment=experiment)
        assert config.step_convention == field
        assert getattr(config, field) == value
        assert config.step_value == value
        assert config.t_end == t_end

    def test_convergence_defaults(self):
        """Test that convergence follows its problem's step convention."""
        oscillator = ExperimentConfig(experiment="convergence", problem="oscillator")
        assert oscillator.dt == 0.2
        assert oscillator.t_end == 10.0

        burgers = ExperimentConfig(experiment="convergence", problem="burgers")
        assert burgers.cfl == 0.3
        assert burgers.dt is None
        assert burgers.t_end == 0.2

    def test_stability_regions_takes_no_step(self):
        """Test that stability-regions rejects a step size."""
        config = ExperimentConfig(experiment="stability-regions")
        assert config.step_convention is None
        assert config.step_value is None

        with pytest.raises(ValueError, match="takes no step size"):
            ExperimentConfig(experiment="stability-regions", dt=0.1)

    def test_wrong_step_convention(self):
        """Test that Burgers rejects a raw dt."""
        with pytest.raises(ValueError, match="uses cfl, not dt"):
            ExperimentConfig(experiment="burgers", dt=0.01)

    def test_two_steps(self):
        """Test that only one step field may be set."""
        with pytest.raises(ValueError, match="exactly one"):
            ExperimentConfig(experiment="oscillator", dt=0.1, mu=0.5)

    def test_non_positive_step(self):
        """Test that the step must be positive."""
        with pytest.raises(ValueError, match="dt must be positive"):
            ExperimentConfig(dt=-0.1)

    def test_unknown_experiment(self):
        """Test that unknown experiments are rejected."""
        with pytest.raises(ValueError, match="Unknown experiment"):
            ExperimentConfig(experiment="heat")

    def test_unknown_mode(self):
        """Test that unknown modes are rejected."""
        with pytest.raises(ValueError, match="Unknown mode"):
            ExperimentConfig(mode="implicit")

    def test_unknown_scheme(self):
        """Test that unknown schemes become ValueError."""
        with pytest.raises(ValueError, match="Unknown scheme"):
            ExperimentConfig(scheme="RK99")

    def test_k_validation(self):
        """Test k length and sum checks."""
        assert ExperimentConfig(k=[1, 2, -2, -1]).k == (1.0, 2.0, -2.0, -1.0)

        with pytest.raises(ValueError, match="2 entries"):
            ExperimentConfig(k=(1, -1))

        with pytest.raises(ValueError, match="sum to zero"):
            ExperimentConfig(k=(1, 1, 0, 0))

    def test_unknown_problem(self):
        """Test that only oscillator and Burgers support convergence."""
        with pytest.raises(ValueError, match="Convergence problem"):
            ExperimentConfig(experiment="convergence", problem="dissipative")

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"t_end": -1.0}, "t_end must be positive"),
            ({"m": 63}, "even"),
            ({"m": 2}, "even"),
            ({"levels": 1}, "at least 2 levels"),
            ({"record_every": 0}, "record_every"),
            ({"seed": -1}, "non-negative"),
        ],
    )
    def test_range_validation(self, kwargs, match):
        """Test validation of numeric settings."""
        with pytest.raises(ValueError, match=match):
            ExperimentConfig(**kwargs)

    def test_run_name(self):
        """Test the file-name stem."""
        assert ExperimentConfig(experiment="dissipative", mode="r", dt=0.5).run_name() == "dissipative_r-RK44_dt0.5"
        assert ExperimentConfig(experiment="burgers", scheme="SSPRK33", mode="classical").run_name() == (
            "burgers_classical-SSPRK33_cfl0.3"
        )
        assert ExperimentConfig(experiment="stability-regions").run_name() == "stability-regions_rf-RK44"

    def test_to_dict(self, temp_dir):
        """Test the flat dictionary form."""
        config = ExperimentConfig(k=(1, 2, -2, -1), output_path=temp_dir)
        result = config.to_dict()
        assert result["k"] == [1.0, 2.0, -2.0, -1.0]
        assert result["output_path"] == str(temp_dir)
        assert result["dt"] == 0.1
        assert result["mu"] is None
