"""Request/response schemas for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SessionCreate(BaseModel):
    feature_dim: int = Field(ge=1)
    prob_threshold: float = Field(default=0.2, ge=0.0, le=1.0)
    variance_floor: float = Field(default=1e-4, gt=0.0)


class SessionInfo(BaseModel):
    session_id: str
    feature_dim: int
    prob_threshold: float
    variance_floor: float
    classes: int
    labels: list[str]
    components: int
    stored_vectors: int
    memory_bytes: int
    ingested_vectors: int
    classifier_labels: list[str]


class SessionList(BaseModel):
    count: int
    sessions: list[SessionInfo]


class IngestRequest(BaseModel):
    label: str = Field(min_length=1)
    vectors: list[list[float]] = Field(min_length=1)


class IngestResponse(BaseModel):
    outcomes: list[str]
    classes: int
    components: int


class PosteriorRequest(BaseModel):
    vector: list[float] = Field(min_length=1)


class PosteriorResponse(BaseModel):
    labels: list[str]
    posterior: list[float]
    entropy: float


class PoolObjectIn(BaseModel):
    object_id: str = Field(min_length=1)
    views: list[list[float]] = Field(min_length=1)


class SelectRequest(BaseModel):
    pool: list[PoolObjectIn] = Field(min_length=1)
    k: int = Field(default=1, ge=1)
    delta: float = Field(default=0.7, ge=0.0, le=1.0)
    mode: str = "combined"
    selection_seed: int = 0
    predictions_from: str = "memory"


class ObjectScoreOut(BaseModel):
    object_id: str
    mean_entropy: float
    inconsistency: float
    combined: float
    per_view_predictions: list[str]


class SelectResponse(BaseModel):
    selected_ids: list[str]
    scores: list[ObjectScoreOut]


class TrainRequest(BaseModel):
    vectors: list[list[float]] = Field(min_length=1)
    labels: list[str] = Field(min_length=1)
    epochs: int = Field(default=25, ge=0)
    learning_rate: float = Field(default=0.01, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    batch_size: int = Field(default=64, ge=1)
    shuffle_seed: int = 0
    rehearse: bool = True
    pseudo_seed: int = 0


class TrainResponse(BaseModel):
    trained_rows: int
    pseudo_rows: int
    classifier_labels: list[str]


class PredictRequest(BaseModel):
    vectors: list[list[float]] = Field(min_length=1)


class PredictResponse(BaseModel):
    labels: list[str]
    probabilities: list[list[float]]


class CheckpointSaveRequest(BaseModel):
    path: str = Field(min_length=1)
    force: bool = False


class CheckpointSaveResponse(BaseModel):
    path: str
    blob: str


class CheckpointLoadRequest(BaseModel):
    path: str = Field(min_length=1)


class RunCreate(BaseModel):
    dataset: str = Field(min_length=1, description="dataset manifest path")
    metrics_out: str | None = None
    force: bool = False
    pool_size: int = Field(default=5, ge=1)
    label_budget: int = Field(default=1, ge=1)
    prob_threshold: float = Field(default=0.2, ge=0.0, le=1.0)
    variance_floor: float = Field(default=1e-4, gt=0.0)
    delta: float = Field(default=0.7, ge=0.0, le=1.0)
    acquisition: str = "combined"
    epochs: int = Field(default=25, ge=0)
    learning_rate: float = Field(default=0.01, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    batch_size: int = Field(default=64, ge=1)
    max_increments: int = Field(default=100, ge=0)
    eval_every: int = Field(default=1, ge=1)
    master_seed: int = 0
    deterministic: bool = False
    workers: int | None = Field(default=None, ge=1)


class RunInfo(BaseModel):
    run_id: str
    status: str
    dataset: str
    metrics_out: str | None
    increments_done: int
    learned_classes: int
    component_count: int
    last_test_accuracy: float | None
    avg_incremental_accuracy: float | None
    error: str | None = None


class RunList(BaseModel):
    count: int
    runs: list[RunInfo]
