"""Tests for utility functions."""

import logging

import pytest

from relaxfree.utils import ensure_directory, format_duration, setup_logging


class TestSetupLogging:
    """Tests for setup_logging function."""

    def test_levels(self):
        """Test INFO by default and DEBUG when verbose."""
        assert setup_logging().level == logging.INFO
        assert setup_logging(verbose=True).level == logging.DEBUG

    def test_handlers_replaced(self):
        """Test that repeated setup does not stack handlers."""
        setup_logging()
        logger = setup_logging()
        assert len(logger.handlers) == 1

    def test_log_file(self, temp_dir):
        """Test that messages reach the log file."""
        log_file = temp_dir / "logs" / "run.log"
        logger = setup_logging(log_file=log_file)
        logger.info("run started")
        for handler in logger.handlers:
            handler.flush()

        assert "run started" in log_file.read_text(encoding="utf-8")
        for handler in logger.handlers:
            handler.close()
        logger.handlers.clear()


class TestEnsureDirectory:
    """Tests for ensure_directory function."""

    def test_creates_nested(self, temp_dir):
        """Test that parents are created."""
        path = ensure_directory(temp_dir / "a" / "b")
        assert path.is_dir()

    def test_existing(self, temp_dir):
        """Test that an existing directory is accepted."""
        assert ensure_directory(temp_dir) == temp_dir

    def test_file_in_the_way(self, temp_dir):
        """Test that a file at the path is rejected."""
        target = temp_dir / "results"
        target.write_text("x")
        with pytest.raises(NotADirectoryError):
            ensure_directory(target)


class TestFormatDuration:
    """Tests for format_duration function."""

    @pytest.mark.parametrize(
        "seconds, expected",
        [
            (0.42, "420ms"),
            (1.0, "1s"),
            (330.0, "5m 30s"),
            (3600.0, "1h"),
            (5025.0, "1h 23m 45s"),
        ],
    )
    def test_format(self, seconds, expected):
        """Test formatting across units."""
        assert format_duration(seconds) == expected
