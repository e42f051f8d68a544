"""Test logging configuration."""

import pytest
import structlog

from logging_config import configure_logging


@pytest.fixture(autouse=True)
def reset_structlog():
    """Reset structlog before each test."""
    structlog.reset_defaults()
    yield
    structlog.reset_defaults()


def test_configure_logging_default(capsys):
    """INFO is emitted, DEBUG is filtered."""
    configure_logging(verbose=False, quiet=False)

    logger = structlog.get_logger()
    logger.info("Solver started")
    logger.debug("Iteration")

    err = capsys.readouterr().err
    assert "Solver started" in err
    assert "Iteration" not in err


def test_configure_logging_verbose(capsys):
    """Verbose enables per-iteration DEBUG records."""
    configure_logging(verbose=True, quiet=False)

    structlog.get_logger().debug("Iteration", objective=1.5)

    assert "Iteration" in capsys.readouterr().err


def test_configure_logging_quiet(capsys):
    """Quiet keeps warnings only."""
    configure_logging(verbose=False, quiet=True)

    logger = structlog.get_logger()
    logger.info("Solver started")
    logger.warning("Zero tube in C update")

    err = capsys.readouterr().err
    assert "Solver started" not in err
    assert "Zero tube in C update" in err


def test_logs_go_to_stderr_not_stdout(capsys):
    """Stdout stays free for command output such as the AUC line."""
    configure_logging()

    structlog.get_logger().info("Cube read", shape=(2, 2, 2))

    captured = capsys.readouterr()
    assert captured.out == ""
    assert "Cube read" in captured.err


def test_quiet_wins_over_verbose(capsys):
    """When both flags reach the logger, quiet filtering applies."""
    configure_logging(verbose=True, quiet=True)

    structlog.get_logger().debug("Iteration")

    assert "Iteration" not in capsys.readouterr().err
