"""HTTP+JSON service over the training engine.

Routes mirror the platform's query/mutation names: training starts an
asynchronous job (`/mutation/trainClassifier`), predictions are served
from stored model artifacts (`/query/classifyInstances`), session events
stream as server-sent events with replay (`/subscription/events/{jobId}`),
and live feedback is queued through `/mutation/feedback`.

The service keeps no state beyond the job registry: with a journal
directory configured, every record and event is on disk, and a restarted
service rebuilds job states by replaying the journals it finds.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .enums import Metric
from .errors import (
    ConfigError,
    EvaluationError,
    InvariantViolation,
    ParseError,
    SchemaMismatch,
    UnknownComponent,
    UnknownSession,
)
from .evaluator import ModelArtifact, predict
from .kgstore import KnowledgeStore, MachineLearningModel, TrainingInput
from .orchestrator import (
    FeedbackCommand,
    PhaseEvent,
    Session,
    SessionConfig,
    load_journal,
)
from .rl import RLConfig
from .util import stable_seed

__all__ = ["JobHandle", "TrainingService", "create_app"]

JOB_STATES = ("pending", "phase1", "phase2", "phase3", "completed", "stopped", "failed")
_TERMINAL = ("completed", "stopped", "failed")

# trainClassifier body keys that configure the session rather than the
# training input itself.
_SESSION_KEYS = ("seed", "workerCount", "sweepMode", "maxOuterIterations",
                 "rewardScale", "alpha", "beta", "idempotencyKey")


@dataclass
class JobHandle:
    """Client-visible state of one training job."""

    job_id: str
    session_id: str
    state: str = "pending"

    def __post_init__(self):
        if self.state not in JOB_STATES:
            raise InvariantViolation("state", f"unknown job state {self.state!r}")

    def to_json_dict(self) -> dict:
        return {"jobId": self.job_id, "sessionId": self.session_id, "state": self.state}


@dataclass
class _Job:
    handle: JobHandle
    events: list[PhaseEvent] = field(default_factory=list)
    session: Session | None = None
    thread: threading.Thread | None = None
    condition: threading.Condition = field(default_factory=threading.Condition)

    @property
    def finished(self) -> bool:
        return self.handle.state in _TERMINAL


def _state_after(event: PhaseEvent) -> str | None:
    if event.kind == "sessionCompleted":
        return "stopped" if event.payload.get("stoppedEarly") else "completed"
    if event.kind == "error":
        return "failed"
    if event.phase in (1, 2, 3):
        return f"phase{event.phase}"
    return None


class TrainingService:
    """Job registry plus the shared knowledge store. Thread-safe: requests
    run concurrently, sessions run on their own threads."""

    def __init__(self, journal_dir: str | Path | None = None,
                 worker_count: int | None = None,
                 store: KnowledgeStore | None = None):
        self.journal_dir = Path(journal_dir) if journal_dir is not None else None
        if store is not None:
            self.store = store
        elif self.journal_dir is not None:
            self.journal_dir.mkdir(parents=True, exist_ok=True)
            self.store = KnowledgeStore(self.journal_dir / "store.ndjson")
        else:
            self.store = KnowledgeStore()
        self.worker_count = worker_count
        self._jobs: dict[str, _Job] = {}
        self._lock = threading.Lock()
        self._idempotent: dict[str, dict] = {}
        if self.journal_dir is not None:
            self._restore_jobs()

    # ------------------------------------------------------------- restore

    def _registry_path(self) -> Path:
        return self.journal_dir / "jobs.ndjson"

    def _restore_jobs(self) -> None:
        registry = self._registry_path()
        if not registry.exists():
            return
        with open(registry, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                job_id, session_id = entry["jobId"], entry["sessionId"]
                events: list[PhaseEvent] = []
                journal = self.journal_dir / job_id / "journal.ndjson"
                if journal.exists():
                    events = load_journal(journal)
                state = "failed"    # a job that never journaled an end died with the process
                for event in events:
                    state = _state_after(event) or state
                if events and events[-1].kind not in ("sessionCompleted", "error"):
                    state = "failed"
                job = _Job(handle=JobHandle(job_id, session_id, state), events=events)
                self._jobs[job_id] = job

    def _register(self, job_id: str, session_id: str) -> None:
        if self.journal_dir is None:
            return
        with open(self._registry_path(), "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"jobId": job_id, "sessionId": session_id}) + "\n")

    # --------------------------------------------------------------- train

    def train(self, body: dict) -> dict:
        key = body.get("idempotencyKey")
        if key is not None:
            with self._lock:
                if key in self._idempotent:
                    return self._idempotent[key]
        handle = self._start_job(body)
        response = handle.to_json_dict()
        if key is not None:
            with self._lock:
                self._idempotent[key] = response
        return response

    def _start_job(self, body: dict) -> JobHandle:
        request = {k: v for k, v in body.items() if k not in _SESSION_KEYS}
        training_input = TrainingInput.from_json_dict(request)
        seed = int(body.get("seed", 0))
        rl = RLConfig()
        if "rewardScale" in body or "alpha" in body or "beta" in body:
            rl = RLConfig(alpha=float(body.get("alpha", 0.5)),
                          beta=float(body.get("beta", 0.5)),
                          reward_scale=float(body.get("rewardScale", 1.0)))

        canonical = json.dumps(training_input.to_json_dict(), sort_keys=True)
        session_id = f"session-{stable_seed(canonical, seed):016x}"
        with self._lock:
            taken = {j.handle.session_id for j in self._jobs.values()}
            suffix = 2
            base = session_id
            while session_id in taken:
                session_id = f"{base}-{suffix}"
                suffix += 1
            job_id = f"job-{uuid.uuid4().hex[:12]}"
            job = _Job(handle=JobHandle(job_id, session_id))
            self._jobs[job_id] = job
        self._register(job_id, session_id)

        out_dir = self.journal_dir / job_id if self.journal_dir is not None else None
        worker_count = body.get("workerCount", self.worker_count)
        config = SessionConfig(
            training_input=training_input,
            rl=rl,
            max_outer_iterations=int(body.get("maxOuterIterations", 25)),
            worker_count=worker_count,
            seed=seed,
            sweep_mode=body.get("sweepMode", "random"),
            out_dir=out_dir,
        )
        thread = threading.Thread(target=self._run_job, args=(job, config),
                                  name=f"session-{job_id}", daemon=True)
        job.thread = thread
        thread.start()
        return job.handle

    def _run_job(self, job: _Job, config: SessionConfig) -> None:
        try:
            session = Session(config, store=self.store, session_id=job.handle.session_id)
        except Exception as exc:
            event = PhaseEvent(session_id=job.handle.session_id, phase=0, kind="error",
                               payload={"message": str(exc)}, seq=1,
                               timestamp=datetime.now(timezone.utc).isoformat())
            self._journal_direct(job, event)
            self._on_event(job, event)
            return
        job.session = session
        session.subscribe(lambda event: self._on_event(job, event))
        try:
            session.run()
        except Exception:
            # session already journaled and emitted the error event
            pass

    def _journal_direct(self, job: _Job, event: PhaseEvent) -> None:
        """Journal an event for a job whose session never came up."""
        if self.journal_dir is None:
            return
        out = self.journal_dir / job.handle.job_id
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "journal.ndjson", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event.to_json_dict(), sort_keys=True) + "\n")

    def _on_event(self, job: _Job, event: PhaseEvent) -> None:
        with job.condition:
            job.events.append(event)
            state = _state_after(event)
            if state is not None:
                job.handle.state = state
            job.condition.notify_all()

    # --------------------------------------------------------------- access

    def job(self, job_id: str) -> _Job:
        with self._lock:
            if job_id not in self._jobs:
                raise UnknownSession(f"unknown job {job_id!r}")
            return self._jobs[job_id]

    def await_job(self, job_id: str, timeout: float) -> JobHandle:
        job = self.job(job_id)
        deadline = timeout
        with job.condition:
            while not job.finished and deadline > 0:
                step = min(deadline, 0.25)
                job.condition.wait(step)
                deadline -= step
        return job.handle

    def feedback(self, body: dict) -> dict:
        key = body.get("idempotencyKey")
        if key is not None:
            with self._lock:
                if key in self._idempotent:
                    return self._idempotent[key]
        job = self.job(body.get("jobId", ""))
        if job.session is None or job.finished:
            raise UnknownSession(f"job {job.handle.job_id!r} is not live")
        command = FeedbackCommand.from_json_dict(body)
        ack = job.session.submit_feedback(command)
        if key is not None:
            with self._lock:
                self._idempotent[key] = ack
        return ack

    def classify(self, model_id: str, rows: list[dict]) -> list[dict]:
        try:
            record = self.store.fetch(model_id)
        except KeyError:
            raise UnknownSession(f"unknown model {model_id!r}")
        if not isinstance(record, MachineLearningModel):
            raise UnknownSession(f"{model_id!r} is not a model record")
        if not record.saved or not record.artifact_path:
            raise ConfigError(f"model {model_id!r} has no saved artifact")
        artifact = ModelArtifact.load(record.artifact_path)
        return [label.to_json_dict() for label in predict(artifact, rows)]

    def events_after(self, job_id: str, index: int, timeout: float = 0.25
                     ) -> tuple[list[PhaseEvent], bool]:
        """Events from list position `index` on; blocks briefly when none
        are ready. Returns (new events, job finished)."""
        job = self.job(job_id)
        with job.condition:
            if len(job.events) <= index and not job.finished:
                job.condition.wait(timeout)
            return list(job.events[index:]), job.finished


def _error_response(status: int, message: str, fields: list[str] | None = None) -> JSONResponse:
    body: dict = {"errors": [{"message": message}]}
    if fields:
        body["errors"] = [{"field": f, "message": message} for f in fields]
    return JSONResponse(status_code=status, content=body)


def create_app(service: TrainingService | None = None) -> FastAPI:
    """Build the HTTP app over a service instance. A fresh default
    service journals under $PIPESEARCH_HOME (a temporary directory when
    unset) so model artifacts resolve and classifyInstances works out of
    the box; pass TrainingService() explicitly for a purely in-memory
    one."""
    if service is None:
        home = os.environ.get("PIPESEARCH_HOME")
        service = TrainingService(
            journal_dir=home or tempfile.mkdtemp(prefix="pipesearch-"))
    app = FastAPI(title="pipesearch", version="1.0")
    app.state.service = service

    @app.exception_handler(InvariantViolation)
    async def invariant_handler(request: Request, exc: InvariantViolation):
        return _error_response(422, str(exc), [exc.field])

    @app.exception_handler(ConfigError)
    async def config_handler(request: Request, exc: ConfigError):
        return _error_response(422, str(exc))

    @app.exception_handler(ParseError)
    async def parse_handler(request: Request, exc: ParseError):
        return _error_response(422, str(exc))

    @app.exception_handler(SchemaMismatch)
    async def schema_handler(request: Request, exc: SchemaMismatch):
        return _error_response(422, str(exc))

    @app.exception_handler(UnknownComponent)
    async def component_handler(request: Request, exc: UnknownComponent):
        return _error_response(422, str(exc))

    @app.exception_handler(UnknownSession)
    async def session_handler(request: Request, exc: UnknownSession):
        return _error_response(404, str(exc))

    @app.exception_handler(EvaluationError)
    async def evaluation_handler(request: Request, exc: EvaluationError):
        return _error_response(500, str(exc))

    @app.post("/mutation/trainClassifier")
    async def train_classifier(request: Request):
        body = await request.json()
        try:
            response = service.train(body)
        except KeyError as exc:
            return _error_response(422, f"missing required field {exc.args[0]!r}",
                                   [str(exc.args[0])])
        except ValueError as exc:
            return _error_response(422, str(exc))
        return JSONResponse(status_code=202, content=response)

    @app.get("/query/job/{job_id}")
    async def job_state(job_id: str):
        return service.job(job_id).handle.to_json_dict()

    @app.get("/query/awaitJob/{job_id}")
    async def await_job(job_id: str, timeoutSeconds: float = 30.0):
        return service.await_job(job_id, timeoutSeconds).to_json_dict()

    @app.get("/query/model/{model_id}")
    async def model_record(model_id: str):
        try:
            record = service.store.fetch(model_id)
        except KeyError:
            raise UnknownSession(f"unknown model {model_id!r}")
        if not isinstance(record, MachineLearningModel):
            raise UnknownSession(f"{model_id!r} is not a model record")
        return record.to_json_dict()

    @app.get("/query/bestModel/{session_id}")
    async def best_model(session_id: str, criterion: str = "accuracy"):
        try:
            metric = Metric(criterion)
        except ValueError as exc:
            return _error_response(422, str(exc), ["criterion"])
        return service.store.query_best_model(session_id, metric).to_json_dict()

    @app.post("/query/classifyInstances")
    async def classify_instances(request: Request):
        body = await request.json()
        model_id = body.get("modelId")
        rows = body.get("data")
        if not isinstance(model_id, str) or not isinstance(rows, list):
            return _error_response(422, "modelId (string) and data (array of rows) are required",
                                   ["modelId", "data"])
        return {"labels": service.classify(model_id, rows)}

    @app.post("/mutation/feedback")
    async def post_feedback(request: Request):
        body = await request.json()
        try:
            return service.feedback(body)
        except KeyError as exc:
            return _error_response(422, f"missing required field {exc.args[0]!r}",
                                   [str(exc.args[0])])
        except ValueError as exc:
            return _error_response(422, str(exc))

    @app.get("/subscription/events/{job_id}")
    async def subscribe_events(job_id: str):
        service.job(job_id)    # 404 before the stream starts

        def stream():
            index = 0
            while True:
                events, finished = service.events_after(job_id, index)
                for event in events:
                    index += 1
                    yield f"data: {json.dumps(event.to_json_dict(), sort_keys=True)}\n\n"
                    if event.kind in ("sessionCompleted", "error"):
                        return
                if finished and not events:
                    return

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
