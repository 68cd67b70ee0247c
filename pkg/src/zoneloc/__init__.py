"""Room-level indoor localization from Wi-Fi RSSI and magnetic-field
fingerprints: an HMM-smoothed ensemble over simple discriminative classifiers,
with a majority-voting baseline, an evaluation harness and a synthetic
benchmark generator."""

__version__ = "0.1.0"

from .model import (
    Fingerprint,
    FloorPlan,
    LabeledDataset,
    Zone,
    build_fingerprint,
    make_floor_plan,
    validate_floor_plan,
)

__all__ = [
    "Fingerprint",
    "FloorPlan",
    "LabeledDataset",
    "Zone",
    "build_fingerprint",
    "make_floor_plan",
    "validate_floor_plan",
    "__version__",
]
