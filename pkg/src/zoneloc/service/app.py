"""HTTP service wrapping the pipelines.

Batch endpoints (simulate/train/evaluate/track) are stateless and carry CSV
and bundle payloads inline.  Tracker sessions are the long-running state: one
session per pedestrian, safe to drive from concurrent clients.
"""

from __future__ import annotations

import io
import threading
import uuid

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bundle import EnsembleBundle, bundle_from_dict, bundle_to_dict
from ..classifiers import kind_name, predict
from ..dataio import (
    ParseError,
    fingerprint_csv_text,
    floor_plan_text,
    read_fingerprint_csv_text,
    read_floor_plan_text,
)
from ..evaluate import write_long_csv
from ..hmm import TrackerState, tracker_init, tracker_step
from ..model import build_fingerprint
from ..pipeline import (
    TrainOptions,
    evaluate_bundle,
    simulate_suite,
    track_stream,
    track_summary,
    train_bundle,
)
from ..synth import canonical_environment, read_environment_spec_text
from ..voting import majority_vote
from . import schemas


class TrackerSession:
    """One pedestrian's online tracking state."""

    def __init__(self, bundle: EnsembleBundle):
        self.bundle = bundle
        self.state: TrackerState = tracker_init(bundle.hmm)
        self.names = [kind_name(c.params) for c in bundle.classifiers]
        self.last_zones: dict[str, int] | None = None
        self.lock = threading.Lock()

    def observe(self, req: schemas.ObserveRequest) -> schemas.ObserveResponse:
        fingerprint = build_fingerprint(
            req.wifi_scan,
            self.bundle.anchor_count,
            req.mf_window,
            req.timestamp_ms,
        )
        with self.lock:
            obs = tuple(predict(c, fingerprint) for c in self.bundle.classifiers)
            self.state, hmm_zone = tracker_step(self.state, self.bundle.hmm, obs)
            zones = {"hmm_d": hmm_zone, "voting": majority_vote(obs)}
            zones.update({nm: o for nm, o in zip(self.names, obs)})
            self.last_zones = zones
            return schemas.ObserveResponse(step=self.state.steps, zones=zones)


def create_app() -> FastAPI:
    app = FastAPI(title="zoneloc", version=__version__)
    sessions: dict[str, TrackerSession] = {}
    registry_lock = threading.Lock()

    def bad_request(exc: Exception) -> HTTPException:
        return HTTPException(status_code=400, detail=str(exc))

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        try:
            env = read_environment_spec_text(req.environment) if req.environment else None
            training, trajectories = simulate_suite(req.seed, env, min_per_zone=req.min_per_zone)
        except (ValueError, ParseError) as exc:
            raise bad_request(exc)
        def payload(name, ds):
            return schemas.DatasetPayload(
                name=name, csv=fingerprint_csv_text(ds), zone_counts=ds.class_counts())
        return schemas.SimulateResponse(
            floor_plan=floor_plan_text(training.plan),
            training=payload("train", training),
            trajectories=[payload(f"traj{i + 1}", t) for i, t in enumerate(trajectories)],
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
        try:
            plan = (read_floor_plan_text(req.floor_plan) if req.floor_plan
                    else canonical_environment().plan)
            dataset = read_fingerprint_csv_text(req.training_csv, plan)
            options = TrainOptions(
                seed=req.seed,
                alpha=req.alpha,
                holdout_fraction=req.holdout_fraction,
                use_cv=req.use_cv,
                k_outer=req.k_outer,
                k_inner=req.k_inner,
            )
            bundle = train_bundle(dataset, options)
        except (ValueError, ParseError) as exc:
            raise bad_request(exc)
        return schemas.TrainResponse(bundle=bundle_to_dict(bundle), summary=bundle.summary or {})

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        try:
            bundle = bundle_from_dict(req.bundle)
            named = [(t.name, read_fingerprint_csv_text(t.csv, bundle.plan))
                     for t in req.trajectories]
            reports = evaluate_bundle(bundle, named)
        except (ValueError, ParseError) as exc:
            raise bad_request(exc)
        payloads = []
        for report in reports:
            predictors = [
                schemas.PredictorPayload(
                    name=r.name,
                    accuracy=r.accuracy,
                    zone_metrics=[
                        schemas.ZoneMetricsPayload(
                            zone=z, precision=zm.precision, sensitivity=zm.sensitivity,
                            f1=zm.f1, degenerate=zm.degenerate)
                        for z, zm in enumerate(r.zone_metrics)
                    ],
                    mean_latency_ms=r.latency.mean_ms,
                )
                for r in report.results
            ]
            payloads.append(schemas.ReportPayload(trajectory=report.trajectory,
                                                  predictors=predictors))
        buf = io.StringIO()
        write_long_csv(buf, reports)
        return schemas.EvaluateResponse(reports=payloads, long_csv=buf.getvalue())

    @app.post("/track", response_model=schemas.TrackResponse)
    def track(req: schemas.TrackRequest) -> schemas.TrackResponse:
        try:
            bundle = bundle_from_dict(req.bundle)
            trajectory = read_fingerprint_csv_text(req.trajectory_csv, bundle.plan)
            rows = list(track_stream(bundle, trajectory))
        except (ValueError, ParseError) as exc:
            raise bad_request(exc)
        return schemas.TrackResponse(
            rows=[schemas.TrackRowPayload(timestamp_ms=r.timestamp_ms,
                                          true_zone=r.true_zone, zones=r.zones)
                  for r in rows],
            summary=track_summary(rows),
        )

    @app.post("/sessions", response_model=schemas.SessionStartResponse)
    def start_session(req: schemas.SessionStartRequest) -> schemas.SessionStartResponse:
        try:
            bundle = bundle_from_dict(req.bundle)
        except ValueError as exc:
            raise bad_request(exc)
        session = TrackerSession(bundle)
        session_id = uuid.uuid4().hex
        with registry_lock:
            sessions[session_id] = session
        return schemas.SessionStartResponse(
            session_id=session_id,
            zone_labels=[z.label for z in bundle.plan.zones],
        )

    def _get_session(session_id: str) -> TrackerSession:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return session

    @app.post("/sessions/{session_id}/observe", response_model=schemas.ObserveResponse)
    def observe(session_id: str, req: schemas.ObserveRequest) -> schemas.ObserveResponse:
        session = _get_session(session_id)
        try:
            return session.observe(req)
        except ValueError as exc:
            raise bad_request(exc)

    @app.get("/sessions/{session_id}", response_model=schemas.SessionInfo)
    def session_info(session_id: str) -> schemas.SessionInfo:
        session = _get_session(session_id)
        return schemas.SessionInfo(
            session_id=session_id,
            steps=session.state.steps,
            last_zones=session.last_zones,
        )

    @app.delete("/sessions/{session_id}")
    def end_session(session_id: str) -> dict:
        with registry_lock:
            if session_id not in sessions:
                raise HTTPException(status_code=404, detail=f"no session {session_id}")
            del sessions[session_id]
        return {"deleted": session_id}

    return app


app = create_app()
