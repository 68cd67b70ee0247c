"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class DatasetPayload(BaseModel):
    name: str
    csv: str
    zone_counts: dict[int, int]


class SimulateRequest(BaseModel):
    seed: int = 0
    environment: str | None = None  # env-spec text; default: built-in benchmark
    min_per_zone: int = Field(default=200, ge=1)


class SimulateResponse(BaseModel):
    floor_plan: str
    training: DatasetPayload
    trajectories: list[DatasetPayload]


class TrainRequest(BaseModel):
    training_csv: str
    floor_plan: str | None = None  # floor-plan config text; default: benchmark plan
    seed: int = 0
    alpha: float = Field(default=1.0, ge=0.0)
    holdout_fraction: float = Field(default=0.3, gt=0.0, le=0.5)
    use_cv: bool = False
    k_outer: int = Field(default=10, ge=2)
    k_inner: int = Field(default=10, ge=2)


class TrainResponse(BaseModel):
    bundle: dict
    summary: dict


class NamedCsv(BaseModel):
    name: str
    csv: str


class ZoneMetricsPayload(BaseModel):
    zone: int
    precision: float
    sensitivity: float
    f1: float
    degenerate: bool


class PredictorPayload(BaseModel):
    name: str
    accuracy: float
    zone_metrics: list[ZoneMetricsPayload]
    mean_latency_ms: float


class ReportPayload(BaseModel):
    trajectory: str
    predictors: list[PredictorPayload]


class EvaluateRequest(BaseModel):
    bundle: dict
    trajectories: list[NamedCsv]


class EvaluateResponse(BaseModel):
    reports: list[ReportPayload]
    long_csv: str


class TrackRequest(BaseModel):
    bundle: dict
    trajectory_csv: str


class TrackRowPayload(BaseModel):
    timestamp_ms: int
    true_zone: int | None
    zones: dict[str, int]


class TrackResponse(BaseModel):
    rows: list[TrackRowPayload]
    summary: dict[str, float] | None


class SessionStartRequest(BaseModel):
    bundle: dict


class SessionStartResponse(BaseModel):
    session_id: str
    zone_labels: list[str]


class ObserveRequest(BaseModel):
    timestamp_ms: int
    wifi_scan: dict[int, float]
    mf_window: list[tuple[float, float, float]]


class ObserveResponse(BaseModel):
    step: int
    zones: dict[str, int]


class SessionInfo(BaseModel):
    session_id: str
    steps: int
    last_zones: dict[str, int] | None
