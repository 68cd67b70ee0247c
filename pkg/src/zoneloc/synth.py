"""Synthetic environment and trajectory generator.

Produces labeled fingerprint datasets from a rectangle-tiled floor: RSSI via a
log-distance path-loss model with wall attenuation and log-normal shadowing,
magnetic field via a smooth base field with per-zone distortion offsets and a
linear spatial gradient.  Everything is seeded and reproducible.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .dataio import ParseError
from .model import FloorPlan, LabeledDataset, build_fingerprint, make_floor_plan

# Frozen benchmark operating point: noise levels calibrated once so that the
# individual classifiers land in the 0.70-0.95 accuracy band with the corridor
# as the confusable zone, then committed here.  The corridor's wall value is
# low (doorways and glass along the hallway), which keeps its fingerprints
# close to those of the adjoining rooms.
BENCHMARK_SHADOWING_DB = 9.5
BENCHMARK_MF_NOISE_UT = 8.5
BENCHMARK_WALL_DB = 6.0
BENCHMARK_CORRIDOR_WALL_DB = 2.0
BENCHMARK_ROOM_STAY = 0.9
BENCHMARK_CORRIDOR_STAY = 0.8
BENCHMARK_MIN_PER_ZONE = 200

CORRIDOR_ZONE = 1  # the hub zone of the canonical layout


@dataclass(frozen=True)
class ZoneRect:
    zone_id: int
    x0: float
    y0: float
    x1: float
    y1: float

    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class PathLossParams:
    p0_dbm: float = -40.0  # received power at 1 m
    exponent: float = 2.2
    shadowing_sigma_db: float = BENCHMARK_SHADOWING_DB


@dataclass(frozen=True)
class Environment:
    """Floor geometry, anchors, radio parameters and the magnetic-field model."""

    width: float
    height: float
    rects: tuple[ZoneRect, ...]
    anchors: tuple[tuple[float, float], ...]
    pathloss: PathLossParams
    wall_db: tuple[float, ...]  # per zone, dB added per wall crossed
    mf_base: tuple[float, float, float]
    mf_offsets: tuple[tuple[float, float, float], ...]  # per zone, microtesla
    mf_gradient: tuple[tuple[float, float], ...]  # 3x2: d(field)/d(x, y)
    mf_noise_ut: float
    plan: FloorPlan

    def __post_init__(self) -> None:
        n = self.plan.n_zones
        if len(self.rects) != n or len(self.wall_db) != n or len(self.mf_offsets) != n:
            raise ValueError("per-zone arrays must match the plan's zone count")
        area = 0.0
        for r in self.rects:
            if r.x0 >= r.x1 or r.y0 >= r.y1:
                raise ValueError(f"zone {r.zone_id} rectangle is degenerate")
            if r.x0 < -1e-9 or r.y0 < -1e-9 or r.x1 > self.width + 1e-9 or r.y1 > self.height + 1e-9:
                raise ValueError(f"zone {r.zone_id} rectangle extends outside the floor")
            area += r.area()
        if abs(area - self.width * self.height) > 1e-6:
            raise ValueError("zone rectangles do not tile the floor")
        for i, a in enumerate(self.rects):
            for b in self.rects[i + 1:]:
                ox = min(a.x1, b.x1) - max(a.x0, b.x0)
                oy = min(a.y1, b.y1) - max(a.y0, b.y0)
                if ox > 1e-9 and oy > 1e-9:
                    raise ValueError(f"zones {a.zone_id} and {b.zone_id} overlap")
        for ax, ay in self.anchors:
            if not (0 <= ax <= self.width and 0 <= ay <= self.height):
                raise ValueError(f"anchor ({ax}, {ay}) outside the floor boundary")

    @property
    def anchor_count(self) -> int:
        return len(self.anchors)

    def contains(self, pos: tuple[float, float]) -> bool:
        return 0 <= pos[0] <= self.width and 0 <= pos[1] <= self.height

    def zone_at(self, pos: tuple[float, float]) -> int:
        """Containing zone; boundaries resolve to the first matching rectangle."""
        x, y = pos
        if not self.contains(pos):
            raise ValueError(f"position {pos} outside floor")
        for r in self.rects:
            in_x = r.x0 <= x < r.x1 or (x == r.x1 == self.width)
            in_y = r.y0 <= y < r.y1 or (y == r.y1 == self.height)
            if in_x and in_y:
                return r.zone_id
        # only reachable through float edge cases on interior boundaries
        for r in self.rects:
            if r.x0 - 1e-9 <= x <= r.x1 + 1e-9 and r.y0 - 1e-9 <= y <= r.y1 + 1e-9:
                return r.zone_id
        raise ValueError(f"position {pos} not covered by any zone rectangle")

    def zone_center(self, zone_id: int) -> tuple[float, float]:
        for r in self.rects:
            if r.zone_id == zone_id:
                return r.center()
        raise ValueError(f"no rectangle for zone {zone_id}")


def _wall_crossings(env: Environment, p: tuple[float, float], q: tuple[float, float]) -> list[tuple[int, int]]:
    """Zone pairs whose shared wall the open segment p->q crosses.

    Zones tile the floor, so the containing zone is piecewise constant along
    the segment; every change of zone is one wall crossed.
    """
    dx, dy = q[0] - p[0], q[1] - p[1]
    ts: set[float] = set()
    for r in env.rects:
        if dx != 0.0:
            for xb in (r.x0, r.x1):
                t = (xb - p[0]) / dx
                if 1e-9 < t < 1.0 - 1e-9:
                    ts.add(round(t, 12))
        if dy != 0.0:
            for yb in (r.y0, r.y1):
                t = (yb - p[1]) / dy
                if 1e-9 < t < 1.0 - 1e-9:
                    ts.add(round(t, 12))
    cuts = [0.0] + sorted(ts) + [1.0]
    crossings = []
    prev_zone: int | None = None
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = (a + b) / 2.0
        zone = env.zone_at((p[0] + mid * dx, p[1] + mid * dy))
        if prev_zone is not None and zone != prev_zone:
            crossings.append((prev_zone, zone))
        prev_zone = zone
    return crossings


def rssi_at(env: Environment, pos: tuple[float, float], rng: np.random.Generator) -> np.ndarray:
    """Per-anchor RSSI at a position: log-distance loss, walls, shadowing.

    Values are clipped to [-100, 0] dBm; the -100 floor doubles as the
    unheard-anchor sentinel.
    """
    if not env.contains(pos):
        raise ValueError(f"position {pos} outside floor")
    sigma = env.pathloss.shadowing_sigma_db
    out = np.empty(env.anchor_count)
    for i, (ax, ay) in enumerate(env.anchors):
        d = math.hypot(pos[0] - ax, pos[1] - ay)
        level = env.pathloss.p0_dbm - 10.0 * env.pathloss.exponent * math.log10(max(d, 1.0))
        for za, zb in _wall_crossings(env, pos, (ax, ay)):
            level -= (env.wall_db[za] + env.wall_db[zb]) / 2.0
        if sigma > 0.0:
            level += rng.normal(0.0, sigma)
        out[i] = min(0.0, max(-100.0, level))
    return out


def mf_at(env: Environment, pos: tuple[float, float], rng: np.random.Generator) -> tuple[float, float, float]:
    """3-axis magnetic reading: base field + zone distortion + gradient + noise."""
    if not env.contains(pos):
        raise ValueError(f"position {pos} outside floor")
    zone = env.zone_at(pos)
    base = env.mf_base
    off = env.mf_offsets[zone]
    grad = env.mf_gradient
    x, y = pos
    reading = [base[k] + off[k] + grad[k][0] * x + grad[k][1] * y for k in range(3)]
    if env.mf_noise_ut > 0.0:
        noise = rng.normal(0.0, env.mf_noise_ut, size=3)
        reading = [v + float(e) for v, e in zip(reading, noise)]
    return (reading[0], reading[1], reading[2])


@dataclass(frozen=True)
class TrajectorySpec:
    """Waypoint route through zone centers with pauses at waypoints.

    ``dwell_zones`` restricts the pauses to a subset of zones (walk straight
    through the others); None pauses at every waypoint.
    """

    waypoints: tuple[int, ...]
    speed: float = 1.0  # m/s
    scan_rate: float = 2.0  # Wi-Fi scans per second (the fingerprint clock)
    mf_rate: float = 14.0  # magnetometer readings per second
    dwell_s: float = 0.0  # pause at each dwelling waypoint center
    dwell_zones: frozenset[int] | None = None
    start_timestamp_ms: int = 0

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("waypoint list is empty")
        if self.speed <= 0 or self.scan_rate <= 0 or self.mf_rate <= 0:
            raise ValueError("speed and rates must be positive")
        if self.mf_rate < self.scan_rate:
            raise ValueError("mf_rate must be at least scan_rate so every scan window has readings")
        if self.dwell_s < 0:
            raise ValueError("dwell_s must be >= 0")

    def dwells_at(self, zone: int) -> bool:
        return self.dwell_s > 0 and (self.dwell_zones is None or zone in self.dwell_zones)


def _segments(env: Environment, spec: TrajectorySpec) -> list[tuple[float, tuple[float, float], tuple[float, float]]]:
    """(duration, start, end) pieces: dwell at each waypoint, moves between."""
    plan = env.plan
    for a, b in zip(spec.waypoints[:-1], spec.waypoints[1:]):
        if not plan.adjacent(a, b):
            raise ValueError(f"waypoints {a} -> {b} are not adjacent in the floor plan")
    segs = []
    centers = [env.zone_center(z) for z in spec.waypoints]
    for i, c in enumerate(centers):
        if spec.dwells_at(spec.waypoints[i]):
            segs.append((spec.dwell_s, c, c))
        if i + 1 < len(centers):
            nxt = centers[i + 1]
            dist = math.hypot(nxt[0] - c[0], nxt[1] - c[1])
            segs.append((dist / spec.speed, c, nxt))
    if not segs:  # single waypoint, no dwell: stand still for one scan period
        segs.append((1.0 / spec.scan_rate, centers[0], centers[0]))
    return segs


def _position_at(segs: list[tuple[float, tuple[float, float], tuple[float, float]]], t: float) -> tuple[float, float]:
    remaining = t
    for dur, start, end in segs:
        if remaining <= dur or (dur > 0 and math.isclose(remaining, dur)):
            frac = 0.0 if dur == 0 else min(1.0, remaining / dur)
            return (start[0] + frac * (end[0] - start[0]), start[1] + frac * (end[1] - start[1]))
        remaining -= dur
    return segs[-1][2]


def generate_trajectory(env: Environment, spec: TrajectorySpec, seed: int) -> LabeledDataset:
    """Walk the waypoint route and emit one fingerprint per Wi-Fi scan tick.

    Magnetometer readings accumulate between consecutive scan ticks and are
    averaged into the fingerprint of the tick that closes the window.  Labels
    come from the zone polygon containing the position at scan time.
    """
    segs = _segments(env, spec)
    duration = sum(s[0] for s in segs)
    rng = np.random.default_rng(seed)
    n_ticks = int(duration * spec.scan_rate + 1e-9)
    if n_ticks == 0:
        raise ValueError("trajectory too short for a single Wi-Fi scan")
    samples = []
    mf_period = 1.0 / spec.mf_rate
    next_mf = mf_period
    for i in range(1, n_ticks + 1):
        t = i / spec.scan_rate
        window = []
        while next_mf <= t + 1e-12:
            window.append(mf_at(env, _position_at(segs, next_mf), rng))
            next_mf += mf_period
        pos = _position_at(segs, t)
        scan_vals = rssi_at(env, pos, rng)
        scan = {a: float(v) for a, v in enumerate(scan_vals)}
        samples.append(build_fingerprint(
            scan,
            env.anchor_count,
            window,
            timestamp_ms=spec.start_timestamp_ms + round(t * 1000.0),
            label=env.zone_at(pos),
        ))
    return LabeledDataset(env.anchor_count, tuple(samples), env.plan)


# ---------------------------------------------------------------------------
# Canonical benchmark environment: a hub corridor flanked by six rooms plus a
# dead-end room reachable only through its neighbor.
# ---------------------------------------------------------------------------

_CANONICAL_EDGES = [(0, 1), (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (3, 7)]

_CANONICAL_LABELS = [
    "room_nw", "corridor", "room_n", "room_se", "room_ne",
    "room_sw", "room_s", "room_far",
]

_CANONICAL_MF_OFFSETS = [
    (9.0, -4.0, 6.0),
    (0.0, 0.0, 0.0),
    (-7.0, 8.0, -5.0),
    (10.0, 4.0, -8.0),
    (-9.0, -7.0, 5.0),
    (6.0, 9.0, -7.0),
    (-8.0, -3.0, -9.0),
    (4.0, -10.0, 8.0),
]


def canonical_environment(
    shadowing_sigma_db: float = BENCHMARK_SHADOWING_DB,
    mf_noise_ut: float = BENCHMARK_MF_NOISE_UT,
    wall_db: float = BENCHMARK_WALL_DB,
    corridor_wall_db: float = BENCHMARK_CORRIDOR_WALL_DB,
    room_stay: float = BENCHMARK_ROOM_STAY,
    corridor_stay: float = BENCHMARK_CORRIDOR_STAY,
) -> Environment:
    """The 8-zone benchmark floor: 18 m x 16 m, anchors on the boundary."""
    rects = (
        ZoneRect(0, 0.0, 10.8, 6.0, 16.0),
        ZoneRect(1, 0.0, 5.2, 18.0, 10.8),
        ZoneRect(2, 6.0, 10.8, 12.0, 16.0),
        ZoneRect(3, 12.0, 2.6, 18.0, 5.2),
        ZoneRect(4, 12.0, 10.8, 18.0, 16.0),
        ZoneRect(5, 0.0, 0.0, 6.0, 5.2),
        ZoneRect(6, 6.0, 0.0, 12.0, 5.2),
        ZoneRect(7, 12.0, 0.0, 18.0, 2.6),
    )
    anchors = (
        (0.0, 0.0), (18.0, 0.0), (0.0, 16.0), (18.0, 16.0),
        (9.0, 0.0), (18.0, 8.0), (9.0, 16.0), (0.0, 8.0),
    )
    plan = make_floor_plan(
        _CANONICAL_LABELS,
        _CANONICAL_EDGES,
        stay=room_stay,
        stay_overrides={CORRIDOR_ZONE: corridor_stay},
    )
    walls = [wall_db] * 8
    walls[CORRIDOR_ZONE] = corridor_wall_db
    return Environment(
        width=18.0,
        height=16.0,
        rects=rects,
        anchors=anchors,
        pathloss=PathLossParams(shadowing_sigma_db=shadowing_sigma_db),
        wall_db=tuple(walls),
        mf_base=(22.0, 5.0, -43.0),
        mf_offsets=tuple(_CANONICAL_MF_OFFSETS),
        mf_gradient=((0.25, -0.1), (0.1, 0.2), (-0.15, 0.1)),
        mf_noise_ut=mf_noise_ut,
        plan=plan,
    )


def _random_walk(plan: FloorPlan, start: int, steps: int, rng: np.random.Generator) -> list[int]:
    """Random walk over plan edges, biased toward rarely visited zones."""
    visits = {z.id: 0 for z in plan.zones}
    walk = [start]
    visits[start] += 1
    cur = start
    for _ in range(steps):
        nbs = plan.neighbors(cur)
        weights = np.asarray([1.0 / (1.0 + visits[nb]) for nb in nbs])
        cur = int(rng.choice(nbs, p=weights / weights.sum()))
        walk.append(cur)
        visits[cur] += 1
    return walk


_EVAL_TOURS = [
    (0, 1, 2, 1, 4, 1, 3, 7, 3, 1, 5, 1, 6),
    (6, 1, 5, 1, 3, 7, 3, 1, 0, 1, 2, 1, 4),
    (2, 1, 0, 1, 6, 1, 3, 7, 3, 1, 4, 1, 5),
]


def benchmark_suite(seed: int) -> tuple[LabeledDataset, list[LabeledDataset]]:
    """Training random walk plus three fixed evaluation tours.

    The training set covers every zone with at least BENCHMARK_MIN_PER_ZONE
    fingerprints; the tours visit all zones and use disjoint timestamp ranges.
    """
    env = canonical_environment()
    seeder = np.random.default_rng(seed)
    walk_seed, train_seed, *traj_seeds = (int(s) for s in seeder.integers(2**63, size=5))
    steps = 220
    while True:
        walk = _random_walk(env.plan, CORRIDOR_ZONE, steps, np.random.default_rng(walk_seed))
        spec = TrajectorySpec(waypoints=tuple(walk), dwell_s=2.0, start_timestamp_ms=0)
        training = generate_trajectory(env, spec, train_seed)
        counts = training.class_counts()
        if min(counts.values()) >= BENCHMARK_MIN_PER_ZONE:
            break
        steps = int(steps * 1.5)
    rooms = frozenset(z.id for z in env.plan.zones if z.id != CORRIDOR_ZONE)
    trajectories = []
    for i, tour in enumerate(_EVAL_TOURS):
        spec = TrajectorySpec(
            waypoints=tour,
            dwell_s=3.0,
            dwell_zones=rooms,  # pause in rooms, walk straight through the hub
            start_timestamp_ms=(i + 1) * 100_000_000,
        )
        trajectories.append(generate_trajectory(env, spec, traj_seeds[i]))
    return training, trajectories


# ---------------------------------------------------------------------------
# Environment spec file
# ---------------------------------------------------------------------------

def write_environment_spec(dest: str | Path | TextIO, env: Environment) -> None:
    own = isinstance(dest, (str, Path))
    fh: TextIO = open(dest, "w") if own else dest  # type: ignore[arg-type]
    try:
        w = fh.write
        w(f"floor {env.width!r} {env.height!r}\n")
        for r in env.rects:
            label = env.plan.zones[r.zone_id].label
            w(f"zone {r.zone_id} {r.x0!r} {r.y0!r} {r.x1!r} {r.y1!r} {label}\n")
        for a, b in sorted(env.plan.edges):
            w(f"edge {a} {b}\n")
        for i, p in enumerate(env.plan.stay):
            w(f"stay {i} {p!r}\n")
        if env.plan.start_zone is not None:
            w(f"start {env.plan.start_zone}\n")
        for ax, ay in env.anchors:
            w(f"anchor {ax!r} {ay!r}\n")
        pl = env.pathloss
        w(f"pathloss {pl.p0_dbm!r} {pl.exponent!r} {pl.shadowing_sigma_db!r}\n")
        for i, d in enumerate(env.wall_db):
            w(f"wall {i} {d!r}\n")
        w(f"mf_base {env.mf_base[0]!r} {env.mf_base[1]!r} {env.mf_base[2]!r}\n")
        for i, off in enumerate(env.mf_offsets):
            w(f"mf_offset {i} {off[0]!r} {off[1]!r} {off[2]!r}\n")
        g = env.mf_gradient
        w(f"mf_gradient {g[0][0]!r} {g[0][1]!r} {g[1][0]!r} {g[1][1]!r} {g[2][0]!r} {g[2][1]!r}\n")
        w(f"mf_noise {env.mf_noise_ut!r}\n")
    finally:
        if own:
            fh.close()


def environment_spec_text(env: Environment) -> str:
    buf = io.StringIO()
    write_environment_spec(buf, env)
    return buf.getvalue()


def read_environment_spec(src: str | Path | TextIO) -> Environment:
    """Parse an environment spec; raises ParseError with the line number."""
    own = isinstance(src, (str, Path))
    fh: TextIO = open(src, "r") if own else src  # type: ignore[arg-type]
    try:
        lines = fh.read().splitlines()
    finally:
        if own:
            fh.close()

    floor: tuple[float, float] | None = None
    rects: dict[int, ZoneRect] = {}
    labels: dict[int, str] = {}
    edges: list[tuple[int, int]] = []
    stay_default = 0.6
    stay_overrides: dict[int, float] = {}
    start_zone: int | None = None
    anchors: list[tuple[float, float]] = []
    pathloss = PathLossParams()
    wall_default = BENCHMARK_WALL_DB
    wall_overrides: dict[int, float] = {}
    mf_base = (0.0, 0.0, 0.0)
    mf_offsets: dict[int, tuple[float, float, float]] = {}
    mf_gradient = ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))
    mf_noise = 0.0

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "floor":
                floor = (float(parts[1]), float(parts[2]))
            elif key == "zone":
                zid = int(parts[1])
                rects[zid] = ZoneRect(zid, float(parts[2]), float(parts[3]),
                                      float(parts[4]), float(parts[5]))
                if len(parts) > 6:
                    labels[zid] = " ".join(parts[6:])
            elif key == "edge":
                edges.append((int(parts[1]), int(parts[2])))
            elif key == "stay_default":
                stay_default = float(parts[1])
            elif key == "stay":
                stay_overrides[int(parts[1])] = float(parts[2])
            elif key == "start":
                start_zone = int(parts[1])
            elif key == "anchor":
                anchors.append((float(parts[1]), float(parts[2])))
            elif key == "pathloss":
                pathloss = PathLossParams(float(parts[1]), float(parts[2]), float(parts[3]))
            elif key == "wall_default":
                wall_default = float(parts[1])
            elif key == "wall":
                wall_overrides[int(parts[1])] = float(parts[2])
            elif key == "mf_base":
                mf_base = (float(parts[1]), float(parts[2]), float(parts[3]))
            elif key == "mf_offset":
                mf_offsets[int(parts[1])] = (float(parts[2]), float(parts[3]), float(parts[4]))
            elif key == "mf_gradient":
                vals = [float(v) for v in parts[1:7]]
                mf_gradient = ((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5]))
            elif key == "mf_noise":
                mf_noise = float(parts[1])
            else:
                raise ParseError(f"line {lineno}: unknown directive '{key}'")
        except ParseError:
            raise
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc

    if floor is None:
        raise ParseError("missing 'floor <width> <height>' line")
    if not rects:
        raise ParseError("no zone rectangles defined")
    n = max(rects) + 1
    if sorted(rects) != list(range(n)):
        raise ParseError("zone ids must be dense starting at 0")
    plan = make_floor_plan(
        [labels.get(i, f"zone{i}") for i in range(n)],
        edges,
        stay=stay_default,
        stay_overrides=stay_overrides,
        start_zone=start_zone,
    )
    try:
        return Environment(
            width=floor[0],
            height=floor[1],
            rects=tuple(rects[i] for i in range(n)),
            anchors=tuple(anchors),
            pathloss=pathloss,
            wall_db=tuple(wall_overrides.get(i, wall_default) for i in range(n)),
            mf_base=mf_base,
            mf_offsets=tuple(mf_offsets.get(i, (0.0, 0.0, 0.0)) for i in range(n)),
            mf_gradient=mf_gradient,
            mf_noise_ut=mf_noise,
            plan=plan,
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def read_environment_spec_text(text: str) -> Environment:
    return read_environment_spec(io.StringIO(text))
