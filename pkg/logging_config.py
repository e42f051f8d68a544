"""Structured logging configuration for the ltd command line."""

import sys

import structlog


def configure_logging(
    verbose: bool = False,
    quiet: bool = False,
) -> None:
    """Configure structlog to write to stderr, keeping stdout for command output.

    Args:
        verbose: Enable DEBUG level logging (per-iteration solver records)
        quiet: Suppress INFO level, show only WARNING/ERROR
    """
    if quiet:
        level = "WARNING"
    elif verbose:
        level = "DEBUG"
    else:
        level = "INFO"

    structlog.configure(
        processors=[
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S", utc=False),
            structlog.processors.format_exc_info,
            structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        # Tests reconfigure between runs
        cache_logger_on_first_use=False,
    )
