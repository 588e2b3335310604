"""Request/response schemas for the HTTP service.

Field names mirror the CLI flags and the CSV columns so that a thin client
can translate between the two without renaming anything.
"""
from __future__ import annotations

from pydantic import BaseModel, Field

SCHEMA_VERSION = "1"


class HealthResponse(BaseModel):
    status: str
    version: str
    schema_version: str = SCHEMA_VERSION


class EstimateRequest(BaseModel):
    samples: list[float] = Field(min_length=2)
    fs: float = Field(default=1.0, gt=0)
    n_seg: int = Field(default=256, ge=2)
    overlap: float = Field(default=0.5, ge=0.0, lt=1.0)
    window: str = "hann"
    quantile: float = Field(default=0.5, ge=0.0, le=1.0)
    bias_method: str = "harmonic"
    mean: bool = False
    use_edof: bool = True
    edof_mode: str = "squared"
    detrend: bool = False
    sided: str = Field(default="two", pattern="^(one|two)$")


class EstimateResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    frequency: list[float]
    psd: list[float]
    fs: float
    method: str
    k: int
    edof: float
    q: float | None
    bias_method: str | None
    bias_factor: float | None
    effective_k: float | None
    sided: str


class TheoryBiasRequest(BaseModel):
    k_list: list[int] = Field(min_length=1)
    q_list: list[float] = Field(min_length=1)


class TheoryBiasRow(BaseModel):
    k: int
    q: float
    none: float
    allen: float | None
    harmonic: float
    digamma: float | None
    limit: float | None


class TheoryBiasResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    rows: list[TheoryBiasRow]


class TheoryVarianceRequest(BaseModel):
    k_list: list[int] = Field(min_length=1)
    q_list: list[float] = Field(min_length=1)


class TheoryVarianceRow(BaseModel):
    k: int
    q: float
    var_theory: float | None
    var_limit: float | None


class TheoryVarianceResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    rows: list[TheoryVarianceRow]


class TheoryEdofRequest(BaseModel):
    window: str = "hann"
    overlap: float = Field(default=0.5, ge=0.0, lt=1.0)
    k: int = Field(ge=1)
    n_seg: int = Field(default=256, ge=2)
    mode: str = "squared"


class TheoryEdofResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    window: str
    overlap: float
    k: int
    n_seg: int
    mode: str
    edof: float
    ratio: float


class TheoryOptimumRequest(BaseModel):
    k: int = Field(ge=2)
    q_step: float = Field(default=0.01, gt=0.0, lt=0.5)


class TheoryOptimumRow(BaseModel):
    q: float
    var: float


class TheoryOptimumResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    k: int
    q_opt: float
    rows: list[TheoryOptimumRow]


class SimulateRequest(BaseModel):
    kind: str = Field(pattern="^(bias|variance)$")
    k_list: list[int] = Field(min_length=1)
    q_list: list[float] = Field(min_length=1)
    trials: int = Field(default=10_000, ge=1)
    seed: int = Field(default=0, ge=0)
    n_seg: int = Field(default=256, ge=2)
    overlap: float = Field(default=0.5, ge=0.0, lt=1.0)
    window: str = "hann"
    bias_methods: list[str] = Field(default=["harmonic"], min_length=1)
    use_edof: bool = True
    edof_mode: str = "squared"
    sigma: float = Field(default=1.0, gt=0)
    fs: float = Field(default=1.0, gt=0)
    threads: int | None = Field(default=None, ge=0)


class SimulateRow(BaseModel):
    k: int
    edof_half: float
    q: float
    method: str
    bias_db: float
    var_sim: float
    # NaN is not valid JSON, so undefined theory columns travel as null.
    var_theory: float | None
    var_limit: float | None
    trials: int


class SimulateResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    metadata: dict[str, str]
    rows: list[SimulateRow]
