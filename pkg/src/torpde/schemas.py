"""Request/response models shared by the CLI and the HTTP service.

ExperimentConfig is the single source of truth for scenario parameters; it
can be built from JSON (service) or from the flat ``key = value`` text format
(CLI). Unknown keys are rejected in both paths.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

SCENARIO_NAMES = (
    "exact_mode",
    "manufactured",
    "energy_study",
    "symbol_order",
    "calculus_check",
    "symmetrizer_check",
)

OPERATOR_KINDS = ("frac_laplacian", "variable", "oscillating", "bessel")


class ExperimentConfig(BaseModel):
    """Validated scenario configuration (flat, no nesting)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    scenario: Literal[SCENARIO_NAMES]
    dim: int = 1
    points: int = 128
    cutoff: int = 63
    operator: Literal[OPERATOR_KINDS] = "frac_laplacian"
    nu: float = 2.0
    rho: float = 0.4
    coeff_amp: float = 0.5
    coeff_freq: int = 1
    xi0: tuple[int, ...] = (1,)
    sobolev_s: float = 0.0
    horizon: float = 1.0
    dt: float = 1e-3
    integrator: Literal["rk4", "exp_midpoint"] = "rk4"
    record_stride: int = 10
    seed: int = 0
    negative_control: bool = False
    out_dir: str | None = None
    plot: bool = False

    @field_validator("xi0", mode="before")
    @classmethod
    def _parse_xi0(cls, v):
        if isinstance(v, str):
            return tuple(int(part.strip()) for part in v.split(",") if part.strip())
        if isinstance(v, int):
            return (v,)
        return tuple(v)

    @model_validator(mode="after")
    def _cross_checks(self):
        if not 1 <= self.dim <= 3:
            raise ValueError("dim must be 1, 2 or 3")
        if self.points < 2 or self.points % 2 != 0:
            raise ValueError("points must be a positive even integer")
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        if 2 * self.cutoff + 1 > self.points:
            raise ValueError(
                f"aliasing constraint violated: 2*cutoff+1 = {2 * self.cutoff + 1} "
                f"exceeds points = {self.points}"
            )
        if len(self.xi0) not in (1, self.dim):
            raise ValueError(f"xi0 needs {self.dim} components")
        if any(abs(x) > self.cutoff for x in self.xi0):
            raise ValueError("xi0 lies outside the frequency lattice")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must lie in (0, 1]")
        if not -1.0 < self.coeff_amp < 1.0:
            raise ValueError("coeff_amp must keep 1 + q positive")
        if self.horizon <= 0 or self.dt <= 0 or self.dt > self.horizon:
            raise ValueError("need 0 < dt <= horizon")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        return self

    @property
    def xi0_full(self) -> tuple[int, ...]:
        if len(self.xi0) == self.dim:
            return self.xi0
        return self.xi0 + (0,) * (self.dim - 1)

    @classmethod
    def from_flat_text(cls, text: str) -> "ExperimentConfig":
        """Parse the flat ``key = value`` config format ('#' starts a comment)."""
        data: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ValueError(f"line {lineno}: empty key")
            if key in data:
                raise ValueError(f"line {lineno}: duplicate key {key!r}")
            data[key] = value
        return cls(**data)


class MetricValue(BaseModel):
    name: str
    value: float


class Verdict(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class ScenarioInfo(BaseModel):
    name: str
    description: str
    validates: str
    csv_columns: list[str]


class RunReport(BaseModel):
    """Outcome of one scenario run; artifacts map filename to file content."""

    scenario: str
    config: ExperimentConfig
    metrics: list[MetricValue]
    verdicts: list[Verdict]
    passed: bool
    artifacts: dict[str, str]
    wall_clock_seconds: float
