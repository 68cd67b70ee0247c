"""Majority-voting ensemble baseline."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .classifiers import TrainedClassifier, predict
from .model import Fingerprint


def majority_vote(predictions: Sequence[int]) -> int:
    """Most frequent zone in the tuple.

    Ties (including full disagreement) go to the prediction of the
    highest-priority classifier among the tied zones, priority being the
    tuple order.
    """
    if not predictions:
        raise ValueError("prediction tuple is empty")
    counts = Counter(predictions)
    top = max(counts.values())
    tied = {zone for zone, c in counts.items() if c == top}
    for p in predictions:
        if p in tied:
            return p
    raise AssertionError("unreachable: a tied zone always appears in the tuple")


@dataclass(frozen=True)
class VotingEnsemble:
    """Ordered classifiers voting by majority; list order is the tie priority."""

    classifiers: tuple[TrainedClassifier, ...]

    def __post_init__(self) -> None:
        if not self.classifiers:
            raise ValueError("ensemble needs at least one classifier")
        zone_counts = {c.n_zones for c in self.classifiers}
        if len(zone_counts) != 1:
            raise ValueError(f"classifiers disagree on the zone set: {sorted(zone_counts)}")

    def predictions(self, fingerprint: Fingerprint) -> tuple[int, ...]:
        return tuple(predict(c, fingerprint) for c in self.classifiers)

    def predict(self, fingerprint: Fingerprint) -> int:
        return majority_vote(self.predictions(fingerprint))
