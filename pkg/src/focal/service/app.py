"""HTTP service exposing learning sessions and benchmark runs.

A session is one live learner (memory bank + classifier head) mutated through
ingest/train calls; writes are serialized per session with a lock, reads are
cheap and safe between writes. A run is a complete protocol execution over a
dataset on disk, driven on a background thread and polled through the job
endpoints; cancellation stops it at the next increment boundary with a
consistent partial result.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..acquisition import AcquisitionConfig, PoolObject, select
from ..classifier import ClassifierHead, TrainConfig, expand, predict_batch, train
from ..datasets import load_dataset
from ..errors import DataError
from ..memory import MemoryBank
from ..protocol import MetricsWriter, ProtocolConfig, run, write_run_manifest
from ..state import load_checkpoint, save_checkpoint
from . import models


class Session:
    def __init__(self, session_id: str, bank: MemoryBank, head: ClassifierHead):
        self.session_id = session_id
        self.bank = bank
        self.head = head
        self.lock = threading.Lock()

    def info(self) -> models.SessionInfo:
        footprint = self.bank.footprint()
        return models.SessionInfo(
            session_id=self.session_id,
            feature_dim=self.bank.feature_dim,
            prob_threshold=self.bank.prob_threshold,
            variance_floor=self.bank.variance_floor,
            classes=len(self.bank),
            labels=self.bank.labels,
            components=footprint.component_count,
            stored_vectors=footprint.stored_vectors,
            memory_bytes=footprint.bytes,
            ingested_vectors=self.bank.total_ingested,
            classifier_labels=list(self.head.label_order),
        )


class RunJob:
    def __init__(self, run_id: str, dataset: str, metrics_out: str | None):
        self.run_id = run_id
        self.dataset = dataset
        self.metrics_out = metrics_out
        self.status = "running"
        self.error: str | None = None
        self.stop = threading.Event()
        self.lock = threading.Lock()
        self.increments_done = 0
        self.learned_classes = 0
        self.component_count = 0
        self.last_test_accuracy: float | None = None
        self.avg_incremental_accuracy: float | None = None

    def note(self, record) -> None:
        with self.lock:
            self.increments_done = record.increment
            self.learned_classes = record.learned_classes
            self.component_count = record.component_count
            if record.test_accuracy is not None:
                self.last_test_accuracy = record.test_accuracy
            if record.avg_incremental_accuracy is not None:
                self.avg_incremental_accuracy = record.avg_incremental_accuracy

    def info(self) -> models.RunInfo:
        with self.lock:
            return models.RunInfo(
                run_id=self.run_id,
                status=self.status,
                dataset=self.dataset,
                metrics_out=self.metrics_out,
                increments_done=self.increments_done,
                learned_classes=self.learned_classes,
                component_count=self.component_count,
                last_test_accuracy=self.last_test_accuracy,
                avg_incremental_accuracy=self.avg_incremental_accuracy,
                error=self.error,
            )


def _vectors(payload: list[list[float]], dim: int, what: str) -> np.ndarray:
    rows = np.asarray(payload, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != dim:
        raise HTTPException(422, f"{what} must be rows of length {dim}")
    if not np.isfinite(rows).all():
        raise HTTPException(422, f"{what} contain non-finite values")
    return rows


def create_app() -> FastAPI:
    app = FastAPI(title="focal", version=__version__)
    sessions: dict[str, Session] = {}
    jobs: dict[str, RunJob] = {}
    registry = threading.Lock()

    def get_session(session_id: str) -> Session:
        with registry:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, f"no session {session_id}")
        return session

    def get_job(run_id: str) -> RunJob:
        with registry:
            job = jobs.get(run_id)
        if job is None:
            raise HTTPException(404, f"no run {run_id}")
        return job

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    # ------------------------------------------------------------ sessions

    @app.post("/sessions", response_model=models.SessionInfo, status_code=201)
    def create_session(req: models.SessionCreate):
        session = Session(
            uuid.uuid4().hex,
            MemoryBank(
                feature_dim=req.feature_dim,
                prob_threshold=req.prob_threshold,
                variance_floor=req.variance_floor,
            ),
            ClassifierHead.empty(req.feature_dim),
        )
        with registry:
            sessions[session.session_id] = session
        return session.info()

    @app.get("/sessions", response_model=models.SessionList)
    def list_sessions():
        with registry:
            infos = [s.info() for s in sessions.values()]
        return models.SessionList(count=len(infos), sessions=infos)

    @app.get("/sessions/{session_id}", response_model=models.SessionInfo)
    def session_info(session_id: str):
        return get_session(session_id).info()

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        with registry:
            if sessions.pop(session_id, None) is None:
                raise HTTPException(404, f"no session {session_id}")

    @app.post("/sessions/{session_id}/ingest", response_model=models.IngestResponse)
    def ingest(session_id: str, req: models.IngestRequest):
        session = get_session(session_id)
        rows = _vectors(req.vectors, session.bank.feature_dim, "vectors")
        with session.lock:
            outcomes = [session.bank.ingest(row, req.label) for row in rows]
            footprint = session.bank.footprint()
            classes = len(session.bank)
        return models.IngestResponse(
            outcomes=[o.kind.value for o in outcomes],
            classes=classes,
            components=footprint.component_count,
        )

    @app.post("/sessions/{session_id}/posterior", response_model=models.PosteriorResponse)
    def posterior(session_id: str, req: models.PosteriorRequest):
        from ..acquisition import entropy

        session = get_session(session_id)
        row = _vectors([req.vector], session.bank.feature_dim, "vector")[0]
        with session.lock:
            if len(session.bank) == 0:
                raise HTTPException(409, "no categories learned yet")
            p = session.bank.class_posterior(row)
            labels = session.bank.labels
        return models.PosteriorResponse(
            labels=labels, posterior=[float(v) for v in p], entropy=entropy(p),
        )

    @app.post("/sessions/{session_id}/select", response_model=models.SelectResponse)
    def select_objects(session_id: str, req: models.SelectRequest):
        session = get_session(session_id)
        pool = [
            PoolObject(
                o.object_id,
                _vectors(o.views, session.bank.feature_dim, f"views of {o.object_id}"),
            )
            for o in req.pool
        ]
        try:
            cfg = AcquisitionConfig(
                delta=req.delta, mode=req.mode, k=req.k,
                selection_seed=req.selection_seed,
                predictions_from=req.predictions_from,
            )
            with session.lock:
                ids, table = select(session.bank, pool, cfg, session.head)
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        return models.SelectResponse(
            selected_ids=ids,
            scores=[
                models.ObjectScoreOut(
                    object_id=s.object_id,
                    mean_entropy=s.mean_entropy,
                    inconsistency=s.inconsistency,
                    combined=s.combined,
                    per_view_predictions=list(s.per_view_predictions),
                )
                for s in table
            ],
        )

    @app.post("/sessions/{session_id}/train", response_model=models.TrainResponse)
    def train_head(session_id: str, req: models.TrainRequest):
        session = get_session(session_id)
        rows = _vectors(req.vectors, session.bank.feature_dim, "vectors")
        if len(req.labels) != rows.shape[0]:
            raise HTTPException(422, "vectors and labels disagree in length")
        cfg = TrainConfig(
            epochs=req.epochs, learning_rate=req.learning_rate,
            momentum=req.momentum, batch_size=req.batch_size,
            shuffle_seed=req.shuffle_seed,
        )
        with session.lock:
            if req.rehearse and len(session.bank) > 0:
                pseudo_x, pseudo_labels = session.bank.sample_pseudo(req.pseudo_seed)
            else:
                pseudo_x = np.empty((0, session.bank.feature_dim))
                pseudo_labels = []
            head = session.head
            new_labels = [
                l for l in dict.fromkeys(list(req.labels) + pseudo_labels)
                if l not in head.label_order
            ]
            if new_labels:
                head = expand(head, new_labels)
            head = train(
                head,
                np.vstack([rows, pseudo_x]),
                list(req.labels) + pseudo_labels,
                cfg,
            )
            session.head = head
        return models.TrainResponse(
            trained_rows=rows.shape[0] + pseudo_x.shape[0],
            pseudo_rows=pseudo_x.shape[0],
            classifier_labels=list(head.label_order),
        )

    @app.post("/sessions/{session_id}/predict", response_model=models.PredictResponse)
    def predict_vectors(session_id: str, req: models.PredictRequest):
        from ..classifier import _softmax

        session = get_session(session_id)
        rows = _vectors(req.vectors, session.bank.feature_dim, "vectors")
        with session.lock:
            head = session.head
        if head.num_labels == 0:
            raise HTTPException(409, "classifier has no labels yet")
        labels = predict_batch(head, rows)
        probs = _softmax(rows @ head.weights.T + head.biases)
        return models.PredictResponse(
            labels=labels, probabilities=[[float(v) for v in p] for p in probs],
        )

    @app.post("/sessions/{session_id}/save", response_model=models.CheckpointSaveResponse)
    def save_session(session_id: str, req: models.CheckpointSaveRequest):
        session = get_session(session_id)
        path = Path(req.path)
        if path.exists() and not req.force:
            raise HTTPException(409, f"{path} already exists")
        with session.lock:
            json_path, blob_path = save_checkpoint(path, session.bank, session.head)
        return models.CheckpointSaveResponse(path=str(json_path), blob=str(blob_path))

    @app.post("/sessions/load", response_model=models.SessionInfo, status_code=201)
    def load_session(req: models.CheckpointLoadRequest):
        try:
            bank, head = load_checkpoint(req.path)
        except DataError as exc:
            raise HTTPException(400, str(exc)) from None
        session = Session(
            uuid.uuid4().hex, bank, head or ClassifierHead.empty(bank.feature_dim)
        )
        with registry:
            sessions[session.session_id] = session
        return session.info()

    # ------------------------------------------------------------ runs

    def run_worker(job: RunJob, cfg: ProtocolConfig, dataset, metrics_path):
        metrics = None
        try:
            if metrics_path is not None:
                metrics = MetricsWriter(metrics_path)
                write_run_manifest(metrics_path, cfg, dataset.name)
            run(dataset, cfg, metrics=metrics,
                on_increment=job.note, should_stop=job.stop.is_set)
            with job.lock:
                job.status = "cancelled" if job.stop.is_set() else "done"
        except Exception as exc:  # surfaced through the job status
            with job.lock:
                job.status = "error"
                job.error = str(exc)
        finally:
            if metrics is not None:
                metrics.close()

    @app.post("/runs", response_model=models.RunInfo, status_code=202)
    def create_run(req: models.RunCreate):
        try:
            cfg = ProtocolConfig(
                pool_size=req.pool_size,
                label_budget=req.label_budget,
                prob_threshold=req.prob_threshold,
                variance_floor=req.variance_floor,
                delta=req.delta,
                acquisition=req.acquisition,
                train=TrainConfig(
                    epochs=req.epochs, learning_rate=req.learning_rate,
                    momentum=req.momentum, batch_size=req.batch_size,
                ),
                max_increments=req.max_increments,
                eval_every=req.eval_every,
                master_seed=req.master_seed,
                oracle="simulated",
                deterministic=req.deterministic,
                workers=req.workers,
            )
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        try:
            dataset = load_dataset(req.dataset)
        except DataError as exc:
            raise HTTPException(400, str(exc)) from None
        except OSError as exc:
            raise HTTPException(400, str(exc)) from None
        if req.metrics_out and Path(req.metrics_out).exists() and not req.force:
            raise HTTPException(409, f"{req.metrics_out} already exists")

        job = RunJob(uuid.uuid4().hex, req.dataset, req.metrics_out)
        with registry:
            jobs[job.run_id] = job
        thread = threading.Thread(
            target=run_worker, args=(job, cfg, dataset, req.metrics_out),
            daemon=True,
        )
        thread.start()
        return job.info()

    @app.get("/runs", response_model=models.RunList)
    def list_runs():
        with registry:
            infos = [job.info() for job in jobs.values()]
        return models.RunList(count=len(infos), runs=infos)

    @app.get("/runs/{run_id}", response_model=models.RunInfo)
    def run_info(run_id: str):
        return get_job(run_id).info()

    @app.post("/runs/{run_id}/cancel", response_model=models.RunInfo)
    def cancel_run(run_id: str):
        job = get_job(run_id)
        job.stop.set()
        return job.info()

    @app.delete("/runs/{run_id}", status_code=204)
    def delete_run(run_id: str):
        job = get_job(run_id)
        if job.info().status == "running":
            raise HTTPException(409, "run still in progress; cancel it first")
        with registry:
            jobs.pop(run_id, None)

    return app
