"""Text file formats: fingerprint CSV and floor-plan config."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import TextIO

from .model import Fingerprint, FloorPlan, LabeledDataset, make_floor_plan


class ParseError(ValueError):
    """Malformed input file; message carries the offending line number."""


def _float_str(v: float) -> str:
    # repr round-trips float64 exactly, keeping files byte-stable under reload.
    return repr(float(v))


# ---------------------------------------------------------------------------
# Fingerprint CSV
# ---------------------------------------------------------------------------

def fingerprint_header(anchor_count: int) -> list[str]:
    return (
        ["timestamp_ms", "zone_id"]
        + [f"rssi_{i}" for i in range(anchor_count)]
        + ["mf_x", "mf_y", "mf_z", "mf_mag"]
    )


def write_fingerprint_csv(dest: str | Path | TextIO, dataset: LabeledDataset) -> None:
    """One row per fingerprint; unlabeled samples get an empty zone_id."""
    own = isinstance(dest, (str, Path))
    fh: TextIO = open(dest, "w", newline="") if own else dest  # type: ignore[arg-type]
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fingerprint_header(dataset.anchor_count))
        for s in dataset.samples:
            row = [str(s.timestamp_ms), "" if s.label is None else str(s.label)]
            row += [_float_str(v) for v in s.rssi]
            row += [_float_str(v) for v in s.mf]
            writer.writerow(row)
    finally:
        if own:
            fh.close()


def fingerprint_csv_text(dataset: LabeledDataset) -> str:
    buf = io.StringIO()
    write_fingerprint_csv(buf, dataset)
    return buf.getvalue()


def read_fingerprint_csv(src: str | Path | TextIO, plan: FloorPlan) -> LabeledDataset:
    """Parse a fingerprint CSV against ``plan``; anchor count comes from the header."""
    own = isinstance(src, (str, Path))
    fh: TextIO = open(src, "r", newline="") if own else src  # type: ignore[arg-type]
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("fingerprint CSV is empty (header row is mandatory)")
        anchor_count = sum(1 for col in header if col.startswith("rssi_"))
        expected = fingerprint_header(anchor_count)
        for i, (got, want) in enumerate(zip(header, expected)):
            if got != want:
                raise ParseError(f"CSV schema mismatch: column {i} is '{got}', expected '{want}'")
        if len(header) != len(expected):
            raise ParseError(
                f"CSV schema mismatch: {len(header)} columns, expected {len(expected)}"
            )
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise ParseError(f"line {lineno}: {len(row)} fields, expected {len(expected)}")
            try:
                ts = int(row[0])
                label = int(row[1]) if row[1] != "" else None
                rssi = tuple(float(v) for v in row[2 : 2 + anchor_count])
                mf = tuple(float(v) for v in row[2 + anchor_count :])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from exc
            samples.append(Fingerprint(ts, rssi, mf, label))  # type: ignore[arg-type]
        return LabeledDataset(anchor_count, tuple(samples), plan)
    finally:
        if own:
            fh.close()


def read_fingerprint_csv_text(text: str, plan: FloorPlan) -> LabeledDataset:
    return read_fingerprint_csv(io.StringIO(text), plan)


# ---------------------------------------------------------------------------
# Floor-plan config (key-value lines plus an optional matrix section)
# ---------------------------------------------------------------------------

def write_floor_plan(dest: str | Path | TextIO, plan: FloorPlan) -> None:
    own = isinstance(dest, (str, Path))
    fh: TextIO = open(dest, "w") if own else dest  # type: ignore[arg-type]
    try:
        fh.write(f"zones {plan.n_zones}\n")
        for z in plan.zones:
            fh.write(f"label {z.id} {z.label}\n")
        for a, b in sorted(plan.edges):
            fh.write(f"edge {a} {b}\n")
        for i, p in enumerate(plan.stay):
            fh.write(f"stay {i} {_float_str(p)}\n")
        if plan.start_zone is not None:
            fh.write(f"start {plan.start_zone}\n")
        if plan.explicit_transitions is not None:
            fh.write("matrix\n")
            for row in plan.explicit_transitions:
                fh.write(" ".join(_float_str(v) for v in row) + "\n")
    finally:
        if own:
            fh.close()


def floor_plan_text(plan: FloorPlan) -> str:
    buf = io.StringIO()
    write_floor_plan(buf, plan)
    return buf.getvalue()


def read_floor_plan(src: str | Path | TextIO) -> FloorPlan:
    """Parse the floor-plan config; raises ParseError with a line number."""
    own = isinstance(src, (str, Path))
    fh: TextIO = open(src, "r") if own else src  # type: ignore[arg-type]
    try:
        lines = fh.read().splitlines()
    finally:
        if own:
            fh.close()

    n: int | None = None
    labels: dict[int, str] = {}
    edges: list[tuple[int, int]] = []
    stay_default = 0.6
    stay_overrides: dict[int, float] = {}
    start_zone: int | None = None
    matrix: list[list[float]] | None = None
    in_matrix = False

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if in_matrix:
            try:
                matrix.append([float(v) for v in line.split()])  # type: ignore[union-attr]
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad matrix row: {exc}") from exc
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "zones":
                n = int(parts[1])
            elif key == "label":
                labels[int(parts[1])] = " ".join(parts[2:])
            elif key == "edge":
                edges.append((int(parts[1]), int(parts[2])))
            elif key == "stay_default":
                stay_default = float(parts[1])
            elif key == "stay":
                stay_overrides[int(parts[1])] = float(parts[2])
            elif key == "start":
                start_zone = int(parts[1])
            elif key == "matrix":
                matrix = []
                in_matrix = True
            else:
                raise ParseError(f"line {lineno}: unknown directive '{key}'")
        except ParseError:
            raise
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc

    if n is None:
        raise ParseError("missing 'zones <count>' line")
    label_list = [labels.get(i, f"zone{i}") for i in range(n)]
    plan = make_floor_plan(
        label_list,
        edges,
        stay=stay_default,
        stay_overrides=stay_overrides,
        start_zone=start_zone,
        explicit_transitions=matrix,
    )
    return plan


def read_floor_plan_text(text: str) -> FloorPlan:
    return read_floor_plan(io.StringIO(text))
