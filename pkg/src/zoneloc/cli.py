"""Command-line interface: simulate, train, eval, track, serve.

Thin wrappers around the shared pipelines: commands parse arguments, read and
write files, and print results; errors go to stderr with a non-zero exit.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from . import __version__
from .bundle import load_bundle, save_bundle
from .dataio import (
    ParseError,
    read_fingerprint_csv,
    read_floor_plan,
    write_fingerprint_csv,
    write_floor_plan,
)
from .evaluate import write_latency_csv, write_long_csv, write_report_tables
from .hmm import model_text_dump
from .pipeline import (
    RunConfig,
    evaluate_bundle,
    simulate_suite,
    track_stream,
    track_summary,
    train_bundle,
)
from .synth import canonical_environment, read_environment_spec

_ERRORS = (ValueError, ParseError, OSError)


def _load_config(config_path: str | None) -> RunConfig:
    if config_path is None:
        return RunConfig()
    return RunConfig.load(config_path)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Room-level localization: simulate data, train the ensemble, evaluate, track."""


@main.command()
@click.option("--env", "env_path", type=click.Path(exists=True, dir_okay=False),
              help="Environment spec file; defaults to the built-in benchmark floor.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
def simulate(env_path: str | None, config_path: str | None, seed: int | None,
             out_dir: str | None) -> None:
    """Generate the training CSV and three evaluation trajectory CSVs."""
    try:
        cfg = _load_config(config_path)
        if seed is not None:
            cfg.seed = seed
        if out_dir is not None:
            cfg.out_dir = out_dir
        if env_path is not None:
            cfg.env_spec = env_path
        env = read_environment_spec(cfg.env_spec) if cfg.env_spec else None
        training, trajectories = simulate_suite(cfg.seed, env, min_per_zone=cfg.min_per_zone)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_fingerprint_csv(out / "train.csv", training)
        for i, traj in enumerate(trajectories):
            write_fingerprint_csv(out / f"traj{i + 1}.csv", traj)
        write_floor_plan(out / "floorplan.txt", training.plan)
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {out / 'train.csv'} plus {len(trajectories)} trajectories")
    click.echo("training samples per zone:")
    for zone_id, count in sorted(training.class_counts().items()):
        click.echo(f"  zone {zone_id} ({training.plan.zones[zone_id].label}): {count}")


@main.command()
@click.argument("training_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False),
              help="Floor-plan config; defaults to the built-in benchmark plan.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--alpha", type=float, default=None, help="Likelihood-row smoothing.")
@click.option("--cv/--no-cv", "use_cv", default=None,
              help="Run nested cross-validation over the hyperparameter grids.")
def train(training_csv: str, plan_path: str | None, config_path: str | None,
          seed: int | None, out_dir: str | None, alpha: float | None,
          use_cv: bool | None) -> None:
    """Train the three classifiers and assemble the model bundle."""
    try:
        cfg = _load_config(config_path)
        if seed is not None:
            cfg.seed = seed
        if out_dir is not None:
            cfg.out_dir = out_dir
        if alpha is not None:
            cfg.alpha = alpha
        if use_cv is not None:
            cfg.use_cv = use_cv
        if plan_path is not None:
            cfg.floorplan = plan_path
        plan = read_floor_plan(cfg.floorplan) if cfg.floorplan else canonical_environment().plan
        dataset = read_fingerprint_csv(training_csv, plan)
        bundle = train_bundle(dataset, cfg.train_options())
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_bundle(out / "bundle.json", bundle)
        (out / "hmm.txt").write_text(model_text_dump(bundle.hmm))
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {out / 'bundle.json'}")
    summary = bundle.summary or {}
    for name, params in (summary.get("chosen") or {}).items():
        shown = {k: v for k, v in params.items() if k != "kind"}
        click.echo(f"  {name}: {shown}")
    outer = summary.get("outer_accuracy")
    if outer:
        for name, acc in outer.items():
            click.echo(f"  outer-cv accuracy {name}: {acc:.4f}")


@main.command(name="eval")
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("trajectories", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--oracle-stub", is_flag=True, default=False,
              help="Replace all predictors with ground-truth stubs (harness self-check).")
def eval_cmd(bundle_path: str, trajectories: tuple[str, ...],
             config_path: str | None, out_dir: str | None, oracle_stub: bool) -> None:
    """Run the five-predictor comparison on one or more trajectory CSVs."""
    try:
        cfg = _load_config(config_path)
        if out_dir is not None:
            cfg.out_dir = out_dir
        bundle = load_bundle(bundle_path)
        named = []
        for path in trajectories:
            name = Path(path).stem
            named.append((name, read_fingerprint_csv(path, bundle.plan)))
        reports = evaluate_bundle(bundle, named, oracle_stub=oracle_stub)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for report in reports:
            write_report_tables(out / f"report_{report.trajectory}.csv", report)
        write_long_csv(out / "long.csv", reports)
        write_latency_csv(out / "latency.csv", reports)
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    click.echo("accuracy per predictor and trajectory:")
    for report in reports:
        row = "  ".join(f"{r.name}={r.accuracy:.4f}" for r in report.results)
        click.echo(f"  {report.trajectory}: {row}")
    click.echo(f"reports written to {out}")


@main.command()
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("trajectory_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def track(bundle_path: str, trajectory_csv: str, config_path: str | None) -> None:
    """Replay a trajectory through the online tracker, one line per fingerprint."""
    try:
        _load_config(config_path)
        bundle = load_bundle(bundle_path)
        trajectory = read_fingerprint_csv(trajectory_csv, bundle.plan)
        rows = []
        for row in track_stream(bundle, trajectory):
            rows.append(row)
            true_s = "" if row.true_zone is None else str(row.true_zone)
            z = row.zones
            click.echo(
                f"{row.timestamp_ms},{true_s},{z['hmm_d']},{z['voting']},"
                f"{z['knn']},{z['tree']},{z['mlp']}"
            )
        summary = track_summary(rows)
    except BrokenPipeError:
        # downstream consumer (e.g. head) closed the stream; stop quietly
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return
    except _ERRORS as exc:
        raise click.ClickException(str(exc))
    if summary is not None:
        parts = " ".join(f"{name}={acc:.4f}" for name, acc in summary.items())
        click.echo(f"# accuracy {parts}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("zoneloc.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main(sys.argv[1:])
