"""Exception hierarchy with process exit codes for the LTD command line."""


class LtdError(Exception):
    """Base class for all errors raised by the detector."""

    exit_code: int = 1


class ConfigError(LtdError, ValueError):
    """Run configuration is malformed or violates parameter constraints."""

    exit_code = 3


class CubeIOError(LtdError, OSError):
    """A cube, mask or score file could not be read or written."""

    exit_code = 4


class BadMagicError(CubeIOError):
    """Cube file does not start with the HSC1 magic."""

    exit_code = 5


class TruncatedCubeError(CubeIOError):
    """Cube header or payload is shorter than its dimensions require."""

    exit_code = 6


class NonFiniteValueError(CubeIOError):
    """Cube payload contains NaN or infinite values."""

    exit_code = 7


class InvalidInputError(LtdError, ValueError):
    """Input data cannot be processed (single-class mask, all-zero cube, ...)."""

    exit_code = 8


class DimensionMismatchError(InvalidInputError):
    """Operand shapes do not conform."""


class DegenerateInputError(InvalidInputError):
    """Input contains a zero tube where a direction is required."""


class NumericFailureError(LtdError, RuntimeError):
    """SVD non-convergence, singular covariance or non-finite objective."""

    exit_code = 9


EXIT_CODES: dict[str, int] = {
    "unexpected": 1,
    "usage": 2,
    "config": ConfigError.exit_code,
    "io": CubeIOError.exit_code,
    "bad_magic": BadMagicError.exit_code,
    "truncated": TruncatedCubeError.exit_code,
    "non_finite": NonFiniteValueError.exit_code,
    "invalid_input": InvalidInputError.exit_code,
    "numeric": NumericFailureError.exit_code,
}
