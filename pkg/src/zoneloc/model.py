"""Domain types: zones, fingerprints, floor plans, labeled datasets."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

# Unheard anchors are filled with the weakest representable reading so that
# feature vectors stay fixed-length and numeric.
RSSI_SENTINEL = -100.0
RSSI_MIN = -100.0
RSSI_MAX = 0.0

MF_FEATURES = 4  # mean x, y, z plus magnitude of the mean


@dataclass(frozen=True)
class Zone:
    """One wall-separated subarea of the floor (room or corridor)."""

    id: int
    label: str


@dataclass(frozen=True)
class Fingerprint:
    """One observation: per-anchor RSSI plus averaged magnetic-field features.

    ``rssi`` has one entry per anchor (sentinel for unheard anchors), ``mf``
    is (mean_x, mean_y, mean_z, magnitude) in microtesla.
    """

    timestamp_ms: int
    rssi: tuple[float, ...]
    mf: tuple[float, float, float, float]
    label: int | None = None

    def __post_init__(self) -> None:
        for i, v in enumerate(self.rssi):
            if not (RSSI_MIN <= v <= RSSI_MAX):
                raise ValueError(f"rssi[{i}] = {v} outside [{RSSI_MIN}, {RSSI_MAX}] dBm")
        if len(self.mf) != MF_FEATURES:
            raise ValueError(f"mf must have {MF_FEATURES} entries, got {len(self.mf)}")
        x, y, z, mag = self.mf
        expected = math.sqrt(x * x + y * y + z * z)
        if abs(mag - expected) > 1e-6 * max(expected, 1.0):
            raise ValueError(f"mf magnitude {mag} inconsistent with components (expected {expected})")

    def features(self) -> np.ndarray:
        """RSSI entries followed by the four MF features, as float64."""
        return np.asarray(self.rssi + self.mf, dtype=np.float64)


def build_fingerprint(
    wifi_scan: Mapping[int, float],
    anchor_count: int,
    mf_window: Sequence[tuple[float, float, float]],
    timestamp_ms: int,
    label: int | None = None,
) -> Fingerprint:
    """Assemble one fingerprint from a Wi-Fi scan and the magnetometer window.

    The Wi-Fi scan event is the fingerprint clock; all magnetometer readings
    accumulated since the previous scan are averaged component-wise.  Anchors
    absent from the scan get the sentinel value.
    """
    if not mf_window:
        raise ValueError("no magnetometer data in window")
    rssi = [RSSI_SENTINEL] * anchor_count
    for anchor, dbm in wifi_scan.items():
        if not 0 <= anchor < anchor_count:
            raise ValueError(f"anchor id {anchor} outside 0..{anchor_count - 1}")
        rssi[anchor] = float(dbm)
    n = len(mf_window)
    # math.fsum keeps the mean exactly permutation-invariant.
    mx = math.fsum(r[0] for r in mf_window) / n
    my = math.fsum(r[1] for r in mf_window) / n
    mz = math.fsum(r[2] for r in mf_window) / n
    mag = math.sqrt(mx * mx + my * my + mz * mz)
    return Fingerprint(
        timestamp_ms=timestamp_ms,
        rssi=tuple(rssi),
        mf=(mx, my, mz, mag),
        label=label,
    )


@dataclass(frozen=True)
class FloorPlan:
    """Zone list plus the undirected room-transition graph.

    ``stay`` holds one stay-probability per zone.  ``explicit_transitions``,
    when present, overrides the constructed transition matrix row by row.
    """

    zones: tuple[Zone, ...]
    edges: frozenset[tuple[int, int]]
    stay: tuple[float, ...]
    start_zone: int | None = None
    explicit_transitions: tuple[tuple[float, ...], ...] | None = None

    @property
    def n_zones(self) -> int:
        return len(self.zones)

    def neighbors(self, zone_id: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == zone_id:
                out.append(b)
            elif b == zone_id:
                out.append(a)
        return sorted(out)

    def adjacent(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges


def make_floor_plan(
    labels: Sequence[str] | int,
    edges: Iterable[tuple[int, int]],
    stay: float | Sequence[float] = 0.6,
    stay_overrides: Mapping[int, float] | None = None,
    start_zone: int | None = None,
    explicit_transitions: Sequence[Sequence[float]] | None = None,
) -> FloorPlan:
    """Build a FloorPlan, normalizing edges and expanding the stay scalar."""
    if isinstance(labels, int):
        labels = [f"zone{i}" for i in range(labels)]
    zones = tuple(Zone(i, str(lbl)) for i, lbl in enumerate(labels))
    norm_edges = frozenset((min(a, b), max(a, b)) for a, b in edges)
    if isinstance(stay, (int, float)):
        stay_list = [float(stay)] * len(zones)
    else:
        stay_list = [float(s) for s in stay]
    for zid, p in (stay_overrides or {}).items():
        stay_list[zid] = float(p)
    explicit = None
    if explicit_transitions is not None:
        explicit = tuple(tuple(float(v) for v in row) for row in explicit_transitions)
    return FloorPlan(
        zones=zones,
        edges=norm_edges,
        stay=tuple(stay_list),
        start_zone=start_zone,
        explicit_transitions=explicit,
    )


def validate_floor_plan(plan: FloorPlan) -> list[str]:
    """Return every invariant violation (empty list = plan is usable).

    A disconnected transition graph is legal; it only logs a warning.
    """
    violations: list[str] = []
    n = plan.n_zones
    if n == 0:
        violations.append("plan has no zones")
        return violations
    for i, zone in enumerate(plan.zones):
        if zone.id != i:
            violations.append(f"zone ids not dense: position {i} holds id {zone.id}")
    for a, b in sorted(plan.edges):
        if a == b:
            violations.append(f"self-loop edge ({a}, {b}); self-stay is modeled by stay_prob")
        if not (0 <= a < n and 0 <= b < n):
            violations.append(f"edge ({a}, {b}) endpoint out of range for {n} zones")
    if len(plan.stay) != n:
        violations.append(f"stay has {len(plan.stay)} entries for {n} zones")
    else:
        for i, p in enumerate(plan.stay):
            if not (0.0 < p <= 1.0):
                violations.append(f"stay_prob out of range for zone {i}: {p} not in (0, 1]")
    if plan.start_zone is not None and not (0 <= plan.start_zone < n):
        violations.append(f"start zone {plan.start_zone} out of range")
    if plan.explicit_transitions is not None:
        mat = plan.explicit_transitions
        if len(mat) != n or any(len(row) != n for row in mat):
            violations.append(f"explicit transition matrix is not {n}x{n}")
        else:
            for i, row in enumerate(mat):
                if any(v < 0.0 for v in row):
                    violations.append(f"explicit transition row {i} has a negative entry")
                if abs(math.fsum(row) - 1.0) > 1e-9:
                    violations.append(f"explicit transition row {i} sums to {math.fsum(row)}, not 1")
    if not violations and not _connected(plan):
        log.warning("floor plan transition graph is not connected")
    return violations


def _connected(plan: FloorPlan) -> bool:
    n = plan.n_zones
    if n <= 1:
        return True
    seen = {0}
    stack = [0]
    while stack:
        cur = stack.pop()
        for nb in plan.neighbors(cur):
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == n


@dataclass(frozen=True)
class LabeledDataset:
    """Ordered fingerprints tied to a floor plan and a fixed anchor count."""

    anchor_count: int
    samples: tuple[Fingerprint, ...]
    plan: FloorPlan

    def __post_init__(self) -> None:
        n = self.plan.n_zones
        for i, s in enumerate(self.samples):
            if len(s.rssi) != self.anchor_count:
                raise ValueError(
                    f"sample {i} has {len(s.rssi)} rssi entries, dataset declares {self.anchor_count}"
                )
            if s.label is not None and not (0 <= s.label < n):
                raise ValueError(f"sample {i} label {s.label} is not a valid zone id")

    @property
    def n_zones(self) -> int:
        return self.plan.n_zones

    @property
    def feature_count(self) -> int:
        return self.anchor_count + MF_FEATURES

    def features_matrix(self) -> np.ndarray:
        if not self.samples:
            return np.zeros((0, self.feature_count))
        return np.stack([s.features() for s in self.samples])

    def labels_array(self) -> np.ndarray:
        """Labels as int array; raises when any sample is unlabeled."""
        labels = []
        for i, s in enumerate(self.samples):
            if s.label is None:
                raise ValueError(f"sample {i} is unlabeled")
            labels.append(s.label)
        return np.asarray(labels, dtype=np.int64)

    def class_counts(self) -> dict[int, int]:
        counts = {z.id: 0 for z in self.plan.zones}
        for s in self.samples:
            if s.label is not None:
                counts[s.label] += 1
        return counts

    def timestamps(self) -> tuple[int, ...]:
        return tuple(s.timestamp_ms for s in self.samples)

    def with_samples(self, samples: Sequence[Fingerprint]) -> "LabeledDataset":
        return LabeledDataset(self.anchor_count, tuple(samples), self.plan)
