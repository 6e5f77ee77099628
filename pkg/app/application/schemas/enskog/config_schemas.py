# app/application/schemas/enskog/config_schemas.py

import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _split_floats(value: Any) -> Any:
    if isinstance(value, str):
        return [float(part) for part in value.replace(";", ",").split(",") if part.strip()]
    return value


class SimulationConfigSchema(BaseModel):
    """
    Flat key=value run configuration. Dotted keys (q.family, beta.radius, ...) are the
    field aliases; unknown keys are rejected.
    """
    model_config = ConfigDict(populate_by_name=True, extra="forbid", frozen=True)

    mode: Literal["mean_field", "frozen"] = "mean_field"
    n_particles: int = Field(default=10_000, ge=1)
    horizon: float = Field(default=2.0, gt=0.0, allow_inf_nan=False)

    q_family: Literal["uniform", "maxwellian_power", "custom_table"] = Field(default="uniform", alias="q.family")
    q_theta_min: float = Field(default=0.0, ge=0.0, le=math.pi, alias="q.theta_min")
    q_mass: float = Field(default=1.0, ge=0.0, alias="q.mass")
    q_coefficient: float = Field(default=1.0, gt=0.0, alias="q.coefficient")
    q_exponent: float = Field(default=1.5, gt=0.0, alias="q.exponent")
    q_table: Optional[str] = Field(default=None, alias="q.table", description="'edge,edge,...|density,...'")

    sigma_family: Literal["constant_one", "constant", "smooth_saturating"] = Field(default="constant_one", alias="sigma.family")
    sigma_params: Optional[List[float]] = Field(default=None, alias="sigma.params")
    sigma_lipschitz: Optional[float] = Field(default=None, ge=0.0, alias="sigma.lipschitz")

    beta_shape: Literal["bump", "cosine_taper"] = Field(default="bump", alias="beta.shape")
    beta_radius: float = Field(default=0.5, gt=0.0, alias="beta.radius", description="inf means beta == 1")

    partner_update: Literal["one_sided", "symmetric"] = "one_sided"
    truncation_j: Optional[int] = Field(default=None, ge=1)
    output_times: Optional[List[float]] = None
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    out_dir: Optional[str] = None

    init_velocity: Literal["maxwellian", "two_point"] = Field(default="maxwellian", alias="init.velocity")
    init_position: Literal["uniform_box", "gaussian"] = Field(default="uniform_box", alias="init.position")
    init_position_scale: float = Field(default=1.0, gt=0.0, alias="init.position_scale")
    init_velocity_offset: float = Field(default=0.0, alias="init.velocity_offset")

    event_budget: Optional[float] = Field(default=None, gt=0.0)

    picard_max_iters: int = Field(default=10, ge=1, alias="picard.max_iters")
    picard_tol: float = Field(default=0.05, gt=0.0, alias="picard.tol")
    picard_noise_floor: Optional[float] = Field(default=None, ge=0.0, alias="picard.noise_floor")
    picard_crn: bool = Field(default=False, alias="picard.crn")
    picard_paths: Optional[int] = Field(default=None, ge=2, alias="picard.paths")
    picard_write_laws: bool = Field(default=False, alias="picard.write_laws")
    picard_dictionary_size: Optional[int] = Field(default=None, ge=1, le=216, alias="picard.dictionary_size")

    @model_validator(mode="before")
    @classmethod
    def _drop_blank_values(cls, data: Any) -> Any:
        if isinstance(data, dict):
            return {k: v.strip() if isinstance(v, str) else v for k, v in data.items() if v is not None and v != ""}
        return data

    @field_validator("output_times", "sigma_params", mode="before")
    @classmethod
    def _parse_float_list(cls, value: Any) -> Any:
        return _split_floats(value)

    @field_validator("q_table")
    @classmethod
    def _check_table(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            edges, density = parse_table(value)
            if len(edges) != len(density) + 1:
                raise ValueError("q.table needs one more edge than densities")
        return value

    @model_validator(mode="after")
    def _check_times(self) -> "SimulationConfigSchema":
        if self.output_times is not None:
            if self.output_times != sorted(self.output_times):
                raise ValueError("output_times must be sorted")
            bad = [t for t in self.output_times if t < 0.0 or t > self.horizon]
            if bad:
                raise ValueError(f"output_times {bad} outside [0, {self.horizon}]")
        if self.q_family == "custom_table" and self.q_table is None:
            raise ValueError("q.family=custom_table requires q.table")
        return self

    def resolved_output_times(self) -> Tuple[float, ...]:
        if self.output_times is not None:
            return tuple(self.output_times)
        return (0.0, 0.5 * self.horizon, self.horizon)

    def to_flat(self) -> Dict[str, Any]:
        """Config echo with dotted keys; feeding it back reproduces this schema."""
        return self.model_dump(by_alias=True, exclude_none=True)


def parse_table(value: str) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    edges, _, density = value.partition("|")
    return tuple(_split_floats(edges)), tuple(_split_floats(density))


class RunManifest(BaseModel):
    """Everything needed to replay a run bit-for-bit."""
    model_config = ConfigDict(extra="forbid")

    command: Literal["simulate", "picard"] = "simulate"
    config: Dict[str, Any]
    seeds: Dict[str, Any]
    versions: Dict[str, str]
    event_counts: Dict[str, int] = Field(default_factory=dict)
    inputs: Dict[str, str] = Field(default_factory=dict)
    summary: Dict[str, Any] = Field(default_factory=dict)
    output_files: List[str] = Field(default_factory=list)
    timing_file: str = "timing.json"


class EventRow(BaseModel):
    time: float
    particle: int
    accepted: bool
    jump_size: float


class PicardRow(BaseModel):
    n: int
    t: float
    moment2: float
    se: float
    distance: Optional[float] = None
    distance_se: Optional[float] = None


class DiagnosticsSummaryRow(BaseModel):
    name: str
    time: Optional[float] = None
    statistic: float
    standard_error: float
    threshold: float
    passed: bool
    method: str
    replicates: int
