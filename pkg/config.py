"""Pydantic-based configuration: process settings and solver parameters."""

from pathlib import Path
from typing import Any, Literal

import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from errors import ConfigError
from models import CapLpParams, GuidedFilterParams

PROFILE_LAMBDA6_DIVISOR = {"abu": 10.0, "mvtec": 100.0}

RUN_CONFIG_KEYS = frozenset(
    {f"lambda{i}" for i in range(1, 7)}
    | {"rho"}
    | {f"rho{i}" for i in range(1, 7)}
    | {
        "b",
        "p",
        "nu",
        "max_iter",
        "rel_tol",
        "seed",
        "rank_reduction",
        "validation",
        "fusion_mode",
        "gf_radius",
        "gf_eps",
        "dataset_profile",
        "normalize_input",
        "normalize_peak",
        "caplp_literal",
    }
)

BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True, "false": False, "0": False, "no": False, "off": False}


class LtdSettings(BaseSettings):
    """Process-level settings for the ltd command line."""

    model_config = SettingsConfigDict(
        env_prefix="LTD_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    threads: int | None = Field(
        default=None,
        ge=1,
        description="Cap on BLAS/LAPACK worker threads (LTD_THREADS)",
    )

    report_template_path: Path = Field(
        default=Path(__file__).parent / "EVAL_REPORT_TEMPLATE.txt",
        description="Path to the evaluation report template",
    )

    # Logging
    verbose: bool = Field(default=False, description="Enable debug logging")
    quiet: bool = Field(default=False, description="Suppress info messages")

    @model_validator(mode="after")
    def validate_logging_flags(self) -> "LtdSettings":
        if self.verbose and self.quiet:
            raise ValueError("Cannot set both --verbose and --quiet flags simultaneously")
        return self

    @field_validator("report_template_path", mode="before")
    @classmethod
    def resolve_template_path(cls, v: str | Path) -> Path:
        """Expand and resolve the template path; the template ships with the tool."""
        if isinstance(v, str):
            v = Path(v)

        resolved = v.expanduser().resolve()
        if not resolved.exists():
            raise ValueError(
                f"Report template not found: {v}\n"
                f"Resolved to: {resolved}\n"
                f"Template is packaged with ltd - reinstall or check installation."
            )
        return resolved


class LtdParams(BaseModel):
    """Regularization, proximal, factor-size, stopping and fusion parameters."""

    model_config = ConfigDict(extra="forbid", validate_assignment=False)

    lambda1: float = Field(default=1e-2, gt=0, description="Weight of ||B||^2 / 2")
    lambda2: float = Field(default=5.0, gt=0, description="Spectral anomaly (E1) sparsity weight")
    lambda3: float = Field(default=1.0, gt=0, description="Spectral fidelity weight, one of 1e-2, 1e-1, 5e-1, 1")
    lambda4: float = Field(default=5e-1, ge=0, description="Group sparsity weight on Z; 0 disables the penalty")
    lambda5: float = Field(default=1e-1, gt=0, description="Spatial anomaly (E2) sparsity weight")
    lambda6: float | None = Field(default=None, gt=0, description="Spatial fidelity weight; derived from the profile")

    rho1: float = Field(default=1e-2, gt=0)
    rho2: float = Field(default=1e-2, gt=0)
    rho3: float = Field(default=1e-2, gt=0)
    rho4: float = Field(default=1e-2, gt=0)
    rho5: float = Field(default=1e-2, gt=0)
    rho6: float = Field(default=1e-2, gt=0)

    b: int = Field(default=3, ge=1, description="Spectral factor width")
    p: float = Field(default=0.5, gt=0, lt=1, description="CapLp exponent")
    nu: float = Field(default=1.0, gt=0, description="CapLp cap location")

    max_iter: int = Field(default=100, ge=0)
    rel_tol: float = Field(default=1e-3, gt=0, description="Relative step-norm stopping tolerance")
    seed: int = Field(default=0, ge=0)

    rank_reduction: bool = True
    validation: bool = Field(default=True, description="Restore wrongly removed slices during rank reduction")
    fusion_mode: Literal["single", "nested"] = "single"
    gf_radius: int = Field(default=2, ge=1)
    gf_eps: float = Field(default=1e-2, gt=0)
    dataset_profile: Literal["abu", "mvtec", "custom"] = "abu"
    normalize_input: bool = True
    normalize_peak: float = Field(default=1e4, gt=0, description="Upper end of the min-max range, reflectance x 1e4")
    caplp_literal: bool = False

    @model_validator(mode="after")
    def derive_lambda6(self) -> "LtdParams":
        divisor = PROFILE_LAMBDA6_DIVISOR.get(self.dataset_profile)
        if divisor is None:
            if self.lambda6 is None:
                self.lambda6 = self.lambda3 / PROFILE_LAMBDA6_DIVISOR["abu"]
            return self
        if self.lambda6 is not None and self.lambda6 != self.lambda3 / divisor:
            raise ValueError(
                f"lambda6 is derived as lambda3/{divisor:g} by profile '{self.dataset_profile}'; "
                f"use dataset_profile=custom to set it explicitly"
            )
        self.lambda6 = self.lambda3 / divisor
        return self

    @property
    def min_rho(self) -> float:
        return min(self.rho1, self.rho2, self.rho3, self.rho4, self.rho5, self.rho6)

    def caplp(self, lambda_hat: float) -> CapLpParams:
        return CapLpParams(lambda_hat=lambda_hat, p=self.p, nu=self.nu)

    def guided_filter(self) -> GuidedFilterParams:
        return GuidedFilterParams(radius=self.gf_radius, eps=self.gf_eps)


def _parse_value(key: str, raw: str, line_no: int) -> Any:
    if key in {"rank_reduction", "validation", "normalize_input", "caplp_literal"}:
        word = raw.lower()
        if word not in BOOL_WORDS:
            raise ConfigError(f"line {line_no}: {key} expects true/false, got '{raw}'")
        return BOOL_WORDS[word]
    return raw


def parse_run_config(text: str) -> LtdParams:
    """Parse key=value lines into validated parameters.

    Raises:
        ConfigError: On malformed lines, unknown or duplicate keys, or invalid values
    """
    values: dict[str, Any] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected key=value, got '{stripped}'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        key = key.lower()
        if key not in RUN_CONFIG_KEYS:
            raise ConfigError(f"line {line_no}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key '{key}'")
        if not raw:
            raise ConfigError(f"line {line_no}: missing value for '{key}'")
        values[key] = _parse_value(key, raw, line_no)

    rho = values.pop("rho", None)
    if rho is not None:
        for i in range(1, 7):
            values.setdefault(f"rho{i}", rho)

    try:
        return LtdParams(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}") from None


def load_run_config(path: Path) -> LtdParams:
    """Read and parse a RunConfig file.

    Raises:
        ConfigError: If the file cannot be read or does not parse
    """
    logger = structlog.get_logger(__name__)
    logger.debug("Loading run configuration", path=str(path))
    try:
        text = Path(path).read_text()
    except OSError as e:
        logger.error("Failed to read run configuration", path=str(path), error=str(e))
        raise ConfigError(f"Cannot read run configuration {path}: {e.strerror or e}") from e
    params = parse_run_config(text)
    logger.info("Run configuration loaded", path=str(path), profile=params.dataset_profile, b=params.b)
    return params
