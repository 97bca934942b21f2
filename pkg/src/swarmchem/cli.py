"""Command-line interface.

Subcommands: run (single simulation), evolve (competition enabled),
batch (class ensembles for diversity studies), analyze (diversity from
behavior-vector tables), harvest (object extraction from a recorded log),
replay (validate a log), serve (session server).

Exit codes: 0 success, 2 configuration errors, 3 runtime errors.
"""

from __future__ import annotations

import argparse
import base64
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .diversity import bootstrap_diversity, feature_bounds
from .errors import ConfigurationError, SimulationError
from .evolution import CompetitionRule
from .features import FEATURE_NAMES, TrajectoryRecorder, compute_behavior_vector
from .harvest import HarvestObserver, ObjectTracker
from .morphogenesis import SwarmClass
from .recipe import MutationConfig, RecipeError, serialize_recipe
from .replay import ReplayCorruptionError, ReplayRecorder, read_log, replay
from .runconfig import load_config, save_config
from .snapshots import load_world, save_world, state_hash
from .studies import StudySettings, four_class_study
from .engine import run as engine_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _median_or_none(values):
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[np.isfinite(arr)]
    return float(np.median(arr)) if len(arr) else None


def _write_vectors_csv(path: Path, matrix: np.ndarray):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_NAMES)
        for row in matrix:
            writer.writerow([f"{v:.10g}" for v in row])


def _read_vectors_csv(path: Path) -> np.ndarray:
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != FEATURE_NAMES:
            raise ConfigurationError(f"{path}: header does not match the feature registry")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ConfigurationError(f"{path}: no behavior vectors")
    return np.asarray(rows)


def _prepare_run(args, competition: str | None = None):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.world.seed = args.seed
    if args.steps is not None:
        cfg.n_steps = args.steps
    if getattr(args, "swarm_class", None):
        cfg.world.swarm_class = SwarmClass(args.swarm_class)
    if competition is not None:
        cfg.world.competition = CompetitionRule(competition)
    if getattr(args, "mutation_rate", None) is not None:
        r = args.mutation_rate
        cfg.world.mutation = MutationConfig(
            p_point=min(r, 1.0),
            p_duplicate_entry=min(r / 2, 1.0),
            p_delete_entry=min(r / 2, 1.0),
            p_resize_count=min(r, 1.0),
        )
    if getattr(args, "env_schedule", None):
        from .evolution import PerturbationRule

        doc = json.loads(Path(args.env_schedule).read_text())
        cfg.perturbations = [PerturbationRule(**entry) for entry in doc]
    return cfg


def _execute_run(cfg, out_dir: Path, record_frames: bool | None = None):
    out_dir.mkdir(parents=True, exist_ok=True)
    world = cfg.build_world()
    observers = []
    recorder = ReplayRecorder(cfg, out_dir / "replay.jsonl", record_frames=record_frames)
    observers.append(recorder)
    sampler = None
    if cfg.observers.feature_window > 0:
        sampler = TrajectoryRecorder(
            sample_every=cfg.observers.sample_every,
            link_radius=cfg.observers.link_radius,
        )
        observers.append(sampler)
    tracker = None
    if cfg.observers.harvest_interval > 0:
        tracker = ObjectTracker(
            link_radius=cfg.observers.link_radius,
            min_object_size=cfg.observers.min_object_size,
            min_lifetime=cfg.observers.min_lifetime,
        )
        observers.append(HarvestObserver(tracker, interval=cfg.observers.harvest_interval))

    engine_run(world, cfg.n_steps, observers=observers, perturbations=cfg.perturbations)

    (out_dir / "final.snapshot").write_bytes(save_world(world))
    summary = {
        "steps": world.step_count,
        "n_particles": world.n_particles,
        "state_hash": f"{state_hash(world):016x}",
    }
    if sampler is not None and cfg.n_steps > 0:
        vector = compute_behavior_vector(sampler.window(cfg.observers.feature_window))
        _write_vectors_csv(out_dir / "behavior.csv", vector.values[None, :])
        summary["behavior"] = dict(zip(FEATURE_NAMES, vector.values.tolist()))
    if tracker is not None:
        objects = tracker.emit(world)
        _write_harvest(out_dir, objects, run_id=f"seed-{cfg.world.seed}")
        summary["harvested_objects"] = len(objects)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return summary


def _write_harvest(out_dir: Path, objects, run_id: str):
    doc = [
        {
            "object_id": o.object_id,
            "parent_id": o.parent_id,
            "member_count": o.member_count,
            "first_seen": o.first_seen,
            "last_seen": o.last_seen,
            "stability_score": o.stability_score,
            "centroid": list(o.centroid),
            "mean_velocity": list(o.mean_velocity),
            "recipe": serialize_recipe(o.recipe),
        }
        for o in objects
    ]
    (out_dir / "objects.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    lines = []
    for o in objects:
        lines.append(
            f"# run {run_id} object {o.object_id} steps {o.first_seen}..{o.last_seen} "
            f"members {o.member_count} stability {o.stability_score:.3f}"
        )
        lines.append(serialize_recipe(o.recipe).rstrip("\n"))
        lines.append("")
    (out_dir / "harvested_recipes.txt").write_text("\n".join(lines))


def cmd_run(args) -> int:
    cfg = _prepare_run(args)
    _execute_run(cfg, Path(args.out))
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _prepare_run(args, competition=args.compete)
    _execute_run(cfg, Path(args.out))
    return EXIT_OK


def cmd_batch(args) -> int:
    classes = [SwarmClass(c.strip()) for c in args.classes.split(",") if c.strip()]
    settings = StudySettings(
        n_particles=args.particles, n_steps=args.steps_per_run, extent=args.extent
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    from .studies import class_ensemble

    matrices = {}
    for cls in classes:
        matrices[cls.value] = class_ensemble(
            cls, args.runs, args.seed or 0, settings, processes=args.threads
        )
        _write_vectors_csv(out_dir / f"vectors_{cls.value}.csv", matrices[cls.value])
        print(f"{cls.value}: {args.runs} runs done")
    pooled = np.vstack(list(matrices.values()))
    bounds = feature_bounds(pooled)
    report = {}
    from .rng import make_rng

    for cls in classes:
        reports = bootstrap_diversity(
            matrices[cls.value],
            make_rng((args.seed or 0) + cls.rank),
            replicates=args.replicates,
            subsample=min(args.subsample, args.runs),
            bounds=bounds,
        )
        report[cls.value] = {
            "coverage_median": _median_or_none([r.coverage for r in reports]),
            "mean_pairwise_median": _median_or_none([r.mean_pairwise for r in reports]),
            "entropy_median": _median_or_none([r.entropy for r in reports]),
            "replicates": args.replicates,
        }
    (out_dir / "diversity.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_analyze(args) -> int:
    matrices = {Path(p).stem: _read_vectors_csv(Path(p)) for p in args.vectors}
    pooled = np.vstack(list(matrices.values()))
    bounds = feature_bounds(pooled)
    from .rng import make_rng

    out = {}
    rows = []
    for name, matrix in matrices.items():
        reports = bootstrap_diversity(
            matrix,
            make_rng(args.seed or 0),
            replicates=args.replicates,
            subsample=min(args.subsample, len(matrix)),
            bounds=bounds,
        )
        out[name] = {
            "n_runs": len(matrix),
            "coverage_median": _median_or_none([r.coverage for r in reports]),
            "mean_pairwise_median": _median_or_none([r.mean_pairwise for r in reports]),
            "entropy_median": _median_or_none([r.entropy for r in reports]),
        }
        rows.append([name] + [out[name][k] for k in
                              ("coverage_median", "mean_pairwise_median", "entropy_median")])
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "diversity.json").write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    with (out_dir / "diversity.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ensemble", "coverage_median", "mean_pairwise_median", "entropy_median"])
        writer.writerows(rows)
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_harvest(args) -> int:
    header, records = read_log(args.log)
    if not header["frames"]:
        raise ConfigurationError(
            "harvest needs a replay log recorded with frames (observers.record_frames)"
        )
    obs = header["config"]["observers"]
    tracker = ObjectTracker(
        link_radius=obs["link_radius"],
        min_object_size=obs["min_object_size"],
        min_lifetime=obs["min_lifetime"],
    )
    world = None
    for rec in records:
        if rec["type"] == "frame":
            world = load_world(base64.b64decode(rec["data"]))
            tracker.observe(world)
    if world is None:
        raise ConfigurationError("log contains no frames")
    objects = tracker.emit(world)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_harvest(out_dir, objects, run_id=Path(args.log).stem)
    print(f"harvested {len(objects)} objects -> {out_dir}")
    return EXIT_OK


def cmd_replay(args) -> int:
    verified = replay(args.log)
    print(f"replay ok: {len(verified)} checkpoints, final step {verified[-1][0]}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmchem", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--seed", type=int, default=None, help="override world seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker processes")

    p_run = sub.add_parser("run", help="single simulation from a config")
    add_common(p_run)
    p_run.add_argument("--steps", type=int, default=None, help="override n_steps")
    p_run.add_argument("--class", dest="swarm_class", default=None,
                       choices=[c.value for c in SwarmClass], help="override swarm class")
    p_run.set_defaults(func=cmd_run)

    p_evolve = sub.add_parser("evolve", help="evolutionary run (competition enabled)")
    add_common(p_evolve)
    p_evolve.add_argument("--steps", type=int, default=None)
    p_evolve.add_argument("--compete", required=True,
                          choices=[r.value for r in CompetitionRule])
    p_evolve.add_argument("--mutation-rate", type=float, default=None)
    p_evolve.add_argument("--env-schedule", default=None, help="JSON perturbation schedule")
    p_evolve.set_defaults(func=cmd_evolve)

    p_batch = sub.add_parser("batch", help="class ensembles for diversity studies")
    add_common(p_batch, needs_config=False)
    p_batch.add_argument("--runs", type=int, default=50)
    p_batch.add_argument("--classes", default=",".join(c.value for c in SwarmClass))
    p_batch.add_argument("--particles", type=int, default=300)
    p_batch.add_argument("--steps-per-run", type=int, default=2000)
    p_batch.add_argument("--extent", type=float, default=500.0)
    p_batch.add_argument("--replicates", type=int, default=20)
    p_batch.add_argument("--subsample", type=int, default=100)
    p_batch.set_defaults(func=cmd_batch)

    p_an = sub.add_parser("analyze", help="diversity reports from behavior-vector tables")
    p_an.add_argument("--vectors", nargs="+", required=True, help="behavior CSV files")
    p_an.add_argument("--seed", type=int, default=0)
    p_an.add_argument("--out", default="out")
    p_an.add_argument("--replicates", type=int, default=100)
    p_an.add_argument("--subsample", type=int, default=250)
    p_an.set_defaults(func=cmd_analyze)

    p_h = sub.add_parser("harvest", help="extract objects from a recorded log")
    p_h.add_argument("--log", required=True)
    p_h.add_argument("--out", default="out")
    p_h.set_defaults(func=cmd_harvest)

    p_rp = sub.add_parser("replay", help="validate a replay log")
    p_rp.add_argument("--log", required=True)
    p_rp.set_defaults(func=cmd_replay)

    p_srv = sub.add_parser("serve", help="start the session server")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8787)
    p_srv.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, RecipeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, ReplayCorruptionError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
