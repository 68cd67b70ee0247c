"""Command pipelines shared by the CLI and the HTTP service.

Each function is a pure, seed-deterministic transformation from inputs to
datasets/bundles/reports; the CLI and service layers only do I/O around them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .bundle import EnsembleBundle
from .classifiers import (
    ClassifierKind,
    DecisionTreeParams,
    InstanceBasedParams,
    NeuralNetParams,
    TrainedClassifier,
    kind_name,
    likelihood_rows,
    nested_cv,
    predict,
    train,
)
from .evaluate import EvalReport, PredictorSet, run_benchmark
from .hmm import HmmModel, initial_distribution, tracker_init, tracker_step, transitions_from_floor_plan
from .model import LabeledDataset
from .synth import Environment, TrajectorySpec, _random_walk, benchmark_suite, generate_trajectory
from .voting import majority_vote

# Default hyperparameters for the three base learners (priority order).
DEFAULT_SETTINGS: tuple[ClassifierKind, ...] = (
    InstanceBasedParams(k=5, distance_weighted=True),
    DecisionTreeParams(min_leaf=5, pruning_confidence=0.25),
    NeuralNetParams(hidden=10, learning_rate=0.5, epochs=400, seed=1),
)

# Search grids bracketing each learner's default.
DEFAULT_GRIDS: dict[str, list[ClassifierKind]] = {
    "knn": [InstanceBasedParams(k=k, distance_weighted=True) for k in (1, 3, 5, 7)],
    "tree": [DecisionTreeParams(min_leaf=5, pruning_confidence=c) for c in (0.1, 0.25, 0.5)],
    "mlp": [NeuralNetParams(hidden=h, learning_rate=0.5, epochs=400, seed=1) for h in (5, 10, 20)],
}


@dataclass(frozen=True)
class TrainOptions:
    seed: int = 0
    alpha: float = 1.0
    holdout_fraction: float = 0.3
    use_cv: bool = False
    k_outer: int = 10
    k_inner: int = 10
    grids: dict[str, list[ClassifierKind]] = field(default_factory=lambda: dict(DEFAULT_GRIDS))


def train_bundle(training: LabeledDataset, options: TrainOptions = TrainOptions()) -> EnsembleBundle:
    """Train the three classifiers, derive likelihood rows, assemble the HMM.

    Each classifier trains on its own independently balanced subsample;
    with ``use_cv`` the grid winner from nested cross-validation replaces the
    default hyperparameters.
    """
    chosen: dict[str, ClassifierKind] = {}
    outer_acc: dict[str, float] = {}
    for i, default in enumerate(DEFAULT_SETTINGS):
        name = kind_name(default)
        if options.use_cv:
            grid = options.grids.get(name, [default])
            best, acc = nested_cv(training, grid, options.k_outer, options.k_inner,
                                  seed=options.seed + 1000 * (i + 1))
            chosen[name] = best
            outer_acc[name] = acc
        else:
            chosen[name] = default
    classifiers: list[TrainedClassifier] = []
    emitters = []
    for i, default in enumerate(DEFAULT_SETTINGS):
        name = kind_name(default)
        clf = train(chosen[name], training, options.holdout_fraction,
                    seed=options.seed + 10 * (i + 1))
        classifiers.append(clf)
        emitters.append(likelihood_rows(clf.holdout_confusion, options.alpha))
    plan = training.plan
    model = HmmModel(
        pi=initial_distribution(plan),
        a=transitions_from_floor_plan(plan),
        emitters=tuple(emitters),
    )
    summary = {
        "chosen": {name: _params_summary(p) for name, p in chosen.items()},
        "outer_accuracy": outer_acc or None,
        "seed": options.seed,
        "alpha": options.alpha,
        "holdout_fraction": options.holdout_fraction,
    }
    return EnsembleBundle(
        anchor_count=training.anchor_count,
        plan=plan,
        classifiers=tuple(classifiers),
        hmm=model,
        alpha=options.alpha,
        training_timestamps=training.timestamps(),
        summary=summary,
    )


def _params_summary(params: ClassifierKind) -> dict:
    d = dict(params.__dict__)
    d["kind"] = kind_name(params)
    return d


def predictors_from_bundle(bundle: EnsembleBundle) -> PredictorSet:
    """Wire the five predictors; the HMM tracker restarts per trajectory."""
    names = tuple(kind_name(c.params) for c in bundle.classifiers)
    fns = tuple((lambda fp, c=c: predict(c, fp)) for c in bundle.classifiers)

    def tracker_factory():
        state = tracker_init(bundle.hmm)

        def step(obs: tuple[int, ...]) -> int:
            nonlocal state
            state, zone = tracker_step(state, bundle.hmm, obs)
            return zone

        return step

    return PredictorSet(
        individual_names=names,
        individual_fns=fns,
        vote_fn=majority_vote,
        tracker_factory=tracker_factory,
        training_timestamps=frozenset(bundle.training_timestamps),
    )


def oracle_predictor_set(bundle: EnsembleBundle) -> PredictorSet:
    """Ground-truth stubs in the bundle's shape; a harness self-check."""
    names = tuple(kind_name(c.params) for c in bundle.classifiers)

    def oracle(fp):
        if fp.label is None:
            raise ValueError("oracle stub needs labeled fingerprints")
        return fp.label

    return PredictorSet(
        individual_names=names,
        individual_fns=(oracle,) * len(names),
        vote_fn=majority_vote,
        tracker_factory=lambda: (lambda obs: obs[0]),
    )


def evaluate_bundle(bundle: EnsembleBundle,
                    trajectories: Sequence[tuple[str, LabeledDataset]],
                    oracle_stub: bool = False) -> list[EvalReport]:
    for _, traj in trajectories:
        if traj.anchor_count != bundle.anchor_count:
            raise ValueError(
                f"anchor-count mismatch: bundle has {bundle.anchor_count}, "
                f"trajectory has {traj.anchor_count}"
            )
        if traj.n_zones != bundle.plan.n_zones:
            raise ValueError(
                f"zone-count mismatch: bundle has {bundle.plan.n_zones}, "
                f"trajectory has {traj.n_zones}"
            )
    predictors = oracle_predictor_set(bundle) if oracle_stub else predictors_from_bundle(bundle)
    return [run_benchmark(traj, predictors, name=name) for name, traj in trajectories]


@dataclass(frozen=True)
class TrackRow:
    timestamp_ms: int
    true_zone: int | None
    zones: dict[str, int]  # predictor name -> zone


def track_stream(bundle: EnsembleBundle, trajectory: LabeledDataset) -> Iterator[TrackRow]:
    """Replay a trajectory fingerprint-by-fingerprint through the tracker."""
    if trajectory.anchor_count != bundle.anchor_count:
        raise ValueError(
            f"anchor-count mismatch: bundle has {bundle.anchor_count}, "
            f"trajectory has {trajectory.anchor_count}"
        )
    names = [kind_name(c.params) for c in bundle.classifiers]
    state = tracker_init(bundle.hmm)
    for fp in trajectory.samples:
        obs = tuple(predict(c, fp) for c in bundle.classifiers)
        state, hmm_zone = tracker_step(state, bundle.hmm, obs)
        zones = {"hmm_d": hmm_zone, "voting": majority_vote(obs)}
        zones.update({nm: o for nm, o in zip(names, obs)})
        yield TrackRow(timestamp_ms=fp.timestamp_ms, true_zone=fp.label, zones=zones)


def track_summary(rows: Sequence[TrackRow]) -> dict[str, float] | None:
    """Per-predictor accuracy over the labeled rows; None when unlabeled."""
    labeled = [r for r in rows if r.true_zone is not None]
    if not labeled or len(labeled) != len(rows):
        return None
    out: dict[str, float] = {}
    for name in rows[0].zones:
        out[name] = sum(1 for r in labeled if r.zones[name] == r.true_zone) / len(labeled)
    return out


def simulate_suite(seed: int, env: Environment | None = None,
                   min_per_zone: int = 200) -> tuple[LabeledDataset, list[LabeledDataset]]:
    """Benchmark datasets: the frozen canonical suite, or a generic suite on a
    custom environment (random-walk training plus three random-walk tours)."""
    if env is None:
        return benchmark_suite(seed)
    seeder = np.random.default_rng(seed)
    walk_seed, train_seed, *traj_seeds = (int(s) for s in seeder.integers(2**63, size=5))
    start = env.plan.zones[0].id
    steps = max(40, 12 * env.plan.n_zones)
    while True:
        walk = _random_walk(env.plan, start, steps, np.random.default_rng(walk_seed))
        training = generate_trajectory(
            env, TrajectorySpec(waypoints=tuple(walk), dwell_s=2.0), train_seed)
        if min(training.class_counts().values()) >= min_per_zone:
            break
        steps = int(steps * 1.5)
    trajectories = []
    for i in range(3):
        tour = _random_walk(env.plan, start, max(12, 3 * env.plan.n_zones),
                            np.random.default_rng(traj_seeds[i] & 0x7FFFFFFF))
        trajectories.append(generate_trajectory(
            env,
            TrajectorySpec(waypoints=tuple(tour), dwell_s=3.0,
                           start_timestamp_ms=(i + 1) * 100_000_000),
            traj_seeds[i],
        ))
    return training, trajectories


# ---------------------------------------------------------------------------
# Run configuration (JSON file consumed by the CLI)
# ---------------------------------------------------------------------------

_GRID_CLASSES = {"knn": InstanceBasedParams, "tree": DecisionTreeParams, "mlp": NeuralNetParams}


def grids_from_jsonable(d: dict) -> dict[str, list[ClassifierKind]]:
    out: dict[str, list[ClassifierKind]] = {}
    for name, entries in d.items():
        cls = _GRID_CLASSES.get(name)
        if cls is None:
            raise ValueError(f"unknown classifier kind in grid: {name!r}")
        out[name] = [cls(**e) for e in entries]
    return out


@dataclass
class RunConfig:
    """Paths, seeds and knobs for the CLI commands; all seeding is explicit."""

    seed: int = 0
    out_dir: str = "out"
    env_spec: str | None = None
    floorplan: str | None = None
    alpha: float = 1.0
    holdout_fraction: float = 0.3
    use_cv: bool = False
    k_outer: int = 10
    k_inner: int = 10
    min_per_zone: int = 200
    grids: dict[str, list[ClassifierKind]] = field(default_factory=lambda: dict(DEFAULT_GRIDS))

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        with open(path) as fh:
            raw = json.load(fh)
        cfg = cls()
        for key in ("seed", "out_dir", "env_spec", "floorplan", "alpha",
                    "holdout_fraction", "use_cv", "k_outer", "k_inner", "min_per_zone"):
            if key in raw:
                setattr(cfg, key, raw[key])
        if "grids" in raw:
            cfg.grids = grids_from_jsonable(raw["grids"])
        return cfg

    def train_options(self) -> TrainOptions:
        return TrainOptions(
            seed=self.seed,
            alpha=self.alpha,
            holdout_fraction=self.holdout_fraction,
            use_cv=self.use_cv,
            k_outer=self.k_outer,
            k_inner=self.k_inner,
            grids=self.grids,
        )
