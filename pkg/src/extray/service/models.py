"""Pydantic request/response models for the HTTP service and CLI client."""

from __future__ import annotations

from pydantic import BaseModel, Field


class RayRequest(BaseModel):
    poly: str
    angle: str
    pot_lo: float = 1e-9
    pot_hi: float | None = None
    steps_per_halving: int = 24


class RayResponse(BaseModel):
    config: dict
    records: list[dict]
    functional_residual: float


class FixedRaysRequest(BaseModel):
    poly: str
    m: int | None = None  # default: stabilization period from the census
    max_period: int = 6
    pot_lo: float = 1e-9


class FixedRaysResponse(BaseModel):
    config: dict
    m: int
    rays: list[dict]
    co_landing_groups: list[list[str]]


class PartitionRequest(BaseModel):
    poly: str
    m: int | None = None
    depth: int = 0
    max_period: int = 6
    pot_lo: float = 1e-9
    samples: int = 400


class PartitionResponse(BaseModel):
    config: dict
    report: dict
    passed: bool


class CyclesRequest(BaseModel):
    poly: str
    max_period: int = 6
    center: str | None = None
    radius: float | None = None
    cell_of: str | None = None
    m: int | None = None
    pot_lo: float = 1e-9


class CyclesResponse(BaseModel):
    config: dict
    report: dict


class RenormRequest(BaseModel):
    poly: str
    seed: str
    n_iter: int = 1
    resolution: float = 0.02
    budget: int = 10_000
    r0: float | None = None


class RenormResponse(BaseModel):
    config: dict
    r0: float
    degree: int
    connectivity: str
    critical_orbits: list[dict]
    inner_mask: dict
    outer_mask: dict


class ProbeRequest(BaseModel):
    poly: str
    target: str
    fixed: str
    max_period: int = 4
    angles: list[str] | None = None
    pot_lo: float = 1e-7
    epsilon: float = 1e-2
    potential_threshold: float = 1.0


class ProbeResponse(BaseModel):
    config: dict
    report: dict


class TableRequest(BaseModel):
    poly: str
    max_period: int = 3


class TableResponse(BaseModel):
    config: dict
    table: dict


class RenderRequest(BaseModel):
    poly: str
    width: int = 256
    height: int = 256
    center: str = "0"
    half_width: float = 2.0
    budget: int = 256
    rays: list[str] = Field(default_factory=list)
    equipotentials: list[float] = Field(default_factory=list)
    markers: list[str] = Field(default_factory=list)


class PipelineRequest(BaseModel):
    poly: str
    max_period: int = 6
    depth: int = 1
    samples: int = 400
    pot_lo: float = 1e-9
    resolution: float = 0.01
    epsilon: float = 1e-2
    probe_max_period: int = 4
    ray_cycle_max_period: int = 4
    budget: int = 10_000


class PipelineResponse(BaseModel):
    config: dict
    stages: dict
    verdicts: dict
    passed: bool
