"""Metrics, latency measurement, and the five-predictor comparison harness."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, TextIO

import numpy as np

from .classifiers import ConfusionMatrix
from .hmm import ObservationTuple
from .model import Fingerprint, LabeledDataset

HMM_PREDICTOR = "hmm_d"
VOTING_PREDICTOR = "voting"


def accuracy(predicted: Sequence[int], truth: Sequence[int]) -> float:
    """Fraction of positions where the sequences agree."""
    if len(predicted) != len(truth):
        raise ValueError(f"length mismatch: {len(predicted)} predictions vs {len(truth)} truths")
    if not predicted:
        raise ValueError("empty sequences")
    matches = sum(1 for p, t in zip(predicted, truth) if p == t)
    return matches / len(predicted)


@dataclass(frozen=True)
class ZoneMetrics:
    precision: float
    sensitivity: float
    f1: float
    degenerate: bool  # a 0/0 cell was reported as 0


def per_zone_metrics(cm: ConfusionMatrix) -> list[ZoneMetrics]:
    """Precision, sensitivity and their harmonic mean, per zone.

    0/0 cells (zone absent from the data) are reported as 0 and flagged.
    """
    counts = cm.counts
    if counts.sum() < 1:
        raise ValueError("confusion matrix has no counts")
    out = []
    for z in range(cm.n):
        tp = float(counts[z, z])
        col = float(counts[:, z].sum())
        row = float(counts[z, :].sum())
        degenerate = False
        if col == 0:
            precision, degenerate = 0.0, True
        else:
            precision = tp / col
        if row == 0:
            sensitivity, degenerate = 0.0, True
        else:
            sensitivity = tp / row
        if precision + sensitivity == 0:
            f1, degenerate = 0.0, True
        else:
            f1 = 2.0 * sensitivity * precision / (sensitivity + precision)
        out.append(ZoneMetrics(precision, sensitivity, f1, degenerate))
    return out


@dataclass(frozen=True)
class LatencyStats:
    mean_ms: float
    p50_ms: float
    p90_ms: float
    p99_ms: float
    count: int


def _latency_stats(timings_ms: Sequence[float]) -> LatencyStats:
    arr = np.asarray(timings_ms)
    return LatencyStats(
        mean_ms=float(arr.mean()),
        p50_ms=float(np.percentile(arr, 50)),
        p90_ms=float(np.percentile(arr, 90)),
        p99_ms=float(np.percentile(arr, 99)),
        count=len(arr),
    )


def measure_latency(predictor: Callable, inputs: Sequence, warmup: int = 10) -> LatencyStats:
    """Wall-clock per-prediction timing with the first ``warmup`` calls discarded."""
    if len(inputs) < 100:
        raise ValueError(f"need at least 100 inputs for stable statistics, got {len(inputs)}")
    timings = []
    for i, item in enumerate(inputs):
        start = time.perf_counter()
        predictor(item)
        elapsed = (time.perf_counter() - start) * 1000.0
        if i >= warmup:
            timings.append(elapsed)
    return _latency_stats(timings)


@dataclass(frozen=True)
class PredictorSet:
    """The five predictors wired for one benchmark run.

    Individual classifiers map fingerprints to zones; the two ensembles
    consume the tuple of individual predictions (computed once per
    fingerprint and shared).  ``tracker_factory`` must return a fresh
    stateful step function per trajectory.
    """

    individual_names: tuple[str, ...]
    individual_fns: tuple[Callable[[Fingerprint], int], ...]
    vote_fn: Callable[[ObservationTuple], int]
    tracker_factory: Callable[[], Callable[[ObservationTuple], int]]
    training_timestamps: frozenset[int] | None = None

    def __post_init__(self) -> None:
        if len(self.individual_names) != len(self.individual_fns):
            raise ValueError("one name per individual predictor required")
        if not self.individual_fns:
            raise ValueError("at least one individual predictor required")


@dataclass(frozen=True)
class PredictorResult:
    name: str
    predictions: tuple[int, ...]
    accuracy: float
    confusion: ConfusionMatrix
    zone_metrics: tuple[ZoneMetrics, ...]
    latency: LatencyStats


@dataclass(frozen=True)
class EvalReport:
    trajectory: str
    n_zones: int
    results: tuple[PredictorResult, ...]

    def result(self, name: str) -> PredictorResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


def run_benchmark(trajectory: LabeledDataset, predictors: PredictorSet,
                  name: str = "trajectory") -> EvalReport:
    """Replay one labeled trajectory through all five predictors.

    The three individual predictions per fingerprint are computed once; the
    voting and HMM ensembles consume that shared tuple.  Latency rows time
    only each predictor's own work.
    """
    if not trajectory.samples:
        raise ValueError("trajectory is empty")
    truth = [s.label for s in trajectory.samples]
    if any(t is None for t in truth):
        raise ValueError("benchmark trajectory must be fully labeled")
    if predictors.training_timestamps is not None:
        overlap = predictors.training_timestamps.intersection(trajectory.timestamps())
        if overlap:
            raise ValueError(
                f"training/evaluation overlap: {len(overlap)} shared timestamps (e.g. {min(overlap)})"
            )
    m = len(predictors.individual_fns)
    per_pred: dict[str, list[int]] = {nm: [] for nm in predictors.individual_names}
    per_pred[VOTING_PREDICTOR] = []
    per_pred[HMM_PREDICTOR] = []
    timings: dict[str, list[float]] = {nm: [] for nm in per_pred}
    tracker = predictors.tracker_factory()
    for fp in trajectory.samples:
        obs = []
        for nm, fn in zip(predictors.individual_names, predictors.individual_fns):
            start = time.perf_counter()
            zone = fn(fp)
            timings[nm].append((time.perf_counter() - start) * 1000.0)
            per_pred[nm].append(zone)
            obs.append(zone)
        obs_tuple = tuple(obs)
        start = time.perf_counter()
        vote = predictors.vote_fn(obs_tuple)
        timings[VOTING_PREDICTOR].append((time.perf_counter() - start) * 1000.0)
        per_pred[VOTING_PREDICTOR].append(vote)
        start = time.perf_counter()
        hmm_zone = tracker(obs_tuple)
        timings[HMM_PREDICTOR].append((time.perf_counter() - start) * 1000.0)
        per_pred[HMM_PREDICTOR].append(hmm_zone)
    n = trajectory.n_zones
    truth_arr = np.asarray(truth)
    warmup = 10 if len(trajectory.samples) > 30 else 0
    results = []
    order = list(predictors.individual_names) + [VOTING_PREDICTOR, HMM_PREDICTOR]
    for nm in order:
        preds = per_pred[nm]
        cm = ConfusionMatrix.from_predictions(truth_arr, np.asarray(preds), n)
        results.append(PredictorResult(
            name=nm,
            predictions=tuple(preds),
            accuracy=accuracy(preds, truth),
            confusion=cm,
            zone_metrics=tuple(per_zone_metrics(cm)),
            latency=_latency_stats(timings[nm][warmup:]),
        ))
    return EvalReport(trajectory=name, n_zones=n, results=tuple(results))


# ---------------------------------------------------------------------------
# Report output
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_report_tables(dest: str | Path | TextIO, report: EvalReport) -> None:
    """One CSV-compatible metrics table per predictor (latency excluded)."""
    own = isinstance(dest, (str, Path))
    fh: TextIO = open(dest, "w", newline="") if own else dest  # type: ignore[arg-type]
    try:
        w = csv.writer(fh, lineterminator="\n")
        for r in report.results:
            w.writerow(["predictor", r.name])
            w.writerow(["trajectory", report.trajectory])
            w.writerow(["accuracy", _fmt(r.accuracy)])
            w.writerow(["zone", "precision", "sensitivity", "f1", "degenerate"])
            for z, zm in enumerate(r.zone_metrics):
                w.writerow([z, _fmt(zm.precision), _fmt(zm.sensitivity), _fmt(zm.f1),
                            int(zm.degenerate)])
            w.writerow([])
    finally:
        if own:
            fh.close()


def report_tables_text(report: EvalReport) -> str:
    buf = io.StringIO()
    write_report_tables(buf, report)
    return buf.getvalue()


def write_long_csv(dest: str | Path | TextIO, reports: Sequence[EvalReport]) -> None:
    """Plot-ready long format: predictor, trajectory, zone, metric, value."""
    own = isinstance(dest, (str, Path))
    fh: TextIO = open(dest, "w", newline="") if own else dest  # type: ignore[arg-type]
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["predictor", "trajectory", "zone", "metric", "value"])
        for rep in reports:
            for r in rep.results:
                w.writerow([r.name, rep.trajectory, "all", "accuracy", _fmt(r.accuracy)])
                for z, zm in enumerate(r.zone_metrics):
                    w.writerow([r.name, rep.trajectory, z, "precision", _fmt(zm.precision)])
                    w.writerow([r.name, rep.trajectory, z, "sensitivity", _fmt(zm.sensitivity)])
                    w.writerow([r.name, rep.trajectory, z, "f1", _fmt(zm.f1)])
    finally:
        if own:
            fh.close()


def write_latency_csv(dest: str | Path | TextIO, reports: Sequence[EvalReport]) -> None:
    """Latency goes to its own file: timings are hardware-dependent and are
    excluded from the byte-identical determinism contract."""
    own = isinstance(dest, (str, Path))
    fh: TextIO = open(dest, "w", newline="") if own else dest  # type: ignore[arg-type]
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["predictor", "trajectory", "mean_ms", "p50_ms", "p90_ms", "p99_ms", "count"])
        for rep in reports:
            for r in rep.results:
                lat = r.latency
                w.writerow([r.name, rep.trajectory, _fmt(lat.mean_ms), _fmt(lat.p50_ms),
                            _fmt(lat.p90_ms), _fmt(lat.p99_ms), lat.count])
    finally:
        if own:
            fh.close()
