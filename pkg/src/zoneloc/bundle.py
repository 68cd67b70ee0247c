"""Model bundle persistence: classifiers, HMM, and floor plan in one JSON file.

JSON numbers are written via repr, which round-trips float64 exactly, so a
reloaded bundle reproduces bit-identical predictions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifiers import (
    ConfusionMatrix,
    TrainedClassifier,
    learner_from_dict,
    params_from_dict,
    params_to_dict,
)
from .hmm import HmmModel, TransitionMatrix
from .model import FloorPlan, make_floor_plan

FORMAT_NAME = "zoneloc-bundle"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class EnsembleBundle:
    """Everything needed to run the five predictors on new fingerprints."""

    anchor_count: int
    plan: FloorPlan
    classifiers: tuple[TrainedClassifier, ...]  # priority order
    hmm: HmmModel
    alpha: float
    training_timestamps: tuple[int, ...]
    summary: dict | None = None


def plan_to_dict(plan: FloorPlan) -> dict:
    return {
        "labels": [z.label for z in plan.zones],
        "edges": sorted([list(e) for e in plan.edges]),
        "stay": list(plan.stay),
        "start_zone": plan.start_zone,
        "explicit_transitions": (
            None if plan.explicit_transitions is None
            else [list(r) for r in plan.explicit_transitions]
        ),
    }


def plan_from_dict(d: dict) -> FloorPlan:
    return make_floor_plan(
        d["labels"],
        [tuple(e) for e in d["edges"]],
        stay=d["stay"],
        start_zone=d.get("start_zone"),
        explicit_transitions=d.get("explicit_transitions"),
    )


def classifier_to_dict(clf: TrainedClassifier) -> dict:
    return {
        "params": params_to_dict(clf.params),
        "norm_mean": clf.norm_mean.tolist(),
        "norm_std": clf.norm_std.tolist(),
        "model": clf.model.to_dict(),
        "confusion": clf.holdout_confusion.counts.tolist(),
        "n_zones": clf.n_zones,
        "feature_count": clf.feature_count,
    }


def classifier_from_dict(d: dict) -> TrainedClassifier:
    params = params_from_dict(d["params"])
    return TrainedClassifier(
        params=params,
        model=learner_from_dict(params, d["model"]),
        norm_mean=np.asarray(d["norm_mean"]),
        norm_std=np.asarray(d["norm_std"]),
        holdout_confusion=ConfusionMatrix(np.asarray(d["confusion"])),
        n_zones=d["n_zones"],
        feature_count=d["feature_count"],
    )


def bundle_to_dict(bundle: EnsembleBundle) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "anchor_count": bundle.anchor_count,
        "alpha": bundle.alpha,
        "plan": plan_to_dict(bundle.plan),
        "classifiers": [classifier_to_dict(c) for c in bundle.classifiers],
        "hmm": {
            "pi": bundle.hmm.pi.tolist(),
            "transitions": bundle.hmm.a.a.tolist(),
            "emitters": [e.tolist() for e in bundle.hmm.emitters],
        },
        "training_timestamps": list(bundle.training_timestamps),
        "summary": bundle.summary,
    }


def bundle_from_dict(d: dict) -> EnsembleBundle:
    if d.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} file (format = {d.get('format')!r})")
    if d.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported bundle version {d.get('version')!r}")
    hmm = HmmModel(
        pi=np.asarray(d["hmm"]["pi"]),
        a=TransitionMatrix(np.asarray(d["hmm"]["transitions"])),
        emitters=tuple(np.asarray(e) for e in d["hmm"]["emitters"]),
    )
    return EnsembleBundle(
        anchor_count=d["anchor_count"],
        plan=plan_from_dict(d["plan"]),
        classifiers=tuple(classifier_from_dict(c) for c in d["classifiers"]),
        hmm=hmm,
        alpha=d["alpha"],
        training_timestamps=tuple(int(t) for t in d["training_timestamps"]),
        summary=d.get("summary"),
    )


def save_bundle(path: str | Path, bundle: EnsembleBundle) -> None:
    with open(path, "w") as fh:
        json.dump(bundle_to_dict(bundle), fh, indent=1)
        fh.write("\n")


def load_bundle(path: str | Path) -> EnsembleBundle:
    with open(path) as fh:
        return bundle_from_dict(json.load(fh))
