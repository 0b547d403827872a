"""Tests for the logging helpers."""

import logging
from pathlib import Path

from sidlab.utils.logging import configure_logging, get_logger, run_label


class TestConfigureLogging:
    """Test cases for configure_logging."""

    def test_levels(self) -> None:
        """Test WARNING by default, INFO when verbose and DEBUG when debugging."""
        assert configure_logging().level == logging.WARNING
        assert configure_logging(verbose=True).level == logging.INFO
        assert configure_logging(verbose=True, debug=True).level == logging.DEBUG
        assert configure_logging("error").level == logging.ERROR

    def test_no_propagation(self) -> None:
        """Test that records stay in the package logger."""
        logger = configure_logging()

        assert logger.name == "sidlab"
        assert not logger.propagate
        assert len(logger.handlers) == 1

    def test_run_label_in_log_file(self, tmp_path: Path) -> None:
        """Test that records inside a run carry its label and others do not."""
        path = tmp_path / "logs" / "sidlab.log"
        configure_logging(log_file=path, verbose=True)
        logger = get_logger("exits.campaign")

        with run_label("campaign-s7"):
            logger.info("sigma 1 of 4")
        logger.info("done")

        first, second = path.read_text(encoding="utf-8").splitlines()
        assert first.endswith("[campaign-s7] sigma 1 of 4")
        assert second.endswith("| done")


class TestGetLogger:
    """Test cases for get_logger."""

    def test_namespacing(self) -> None:
        """Test the sidlab prefix is added once."""
        assert get_logger("cli").name == "sidlab.cli"
        assert get_logger("sidlab.lab").name == "sidlab.lab"
        assert get_logger("sidlab").name == "sidlab"
