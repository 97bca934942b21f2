"""Run configuration files.

A run config is a single JSON document with an explicit format_version:
world settings, recipes to spawn (inline text or a path to a recipe file),
step count, observer settings, and an optional perturbation schedule.
Validation reports every violation together, with field paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .engine import WorldConfig, World, new_world, spawn
from .errors import ConfigurationError
from .evolution import PerturbationRule
from .recipe import Recipe, RecipeError, parse_recipe, serialize_recipe
from .snapshots import config_from_dict, config_to_dict

FORMAT_VERSION = 1


@dataclass
class SpawnSpec:
    recipe: Recipe
    center: tuple[float, ...]
    radius: float = 50.0


@dataclass
class ObserverSettings:
    hash_every: int = 100
    record_frames: bool = False
    sample_every: int = 5
    feature_window: int = 200
    link_radius: float = 30.0
    harvest_interval: int = 0  # 0 disables harvesting
    min_object_size: int = 10
    min_lifetime: int = 50


@dataclass
class RunConfig:
    world: WorldConfig
    spawns: list[SpawnSpec]
    n_steps: int
    observers: ObserverSettings = field(default_factory=ObserverSettings)
    perturbations: list[PerturbationRule] = field(default_factory=list)

    def build_world(self) -> World:
        w = new_world(self.world)
        for s in self.spawns:
            spawn(w, s.recipe, s.center, s.radius)
        return w


def _load_recipe_field(entry: dict, base_dir: Path, path: str, errors: list[str]) -> Recipe | None:
    if "recipe" in entry:
        source = entry["recipe"]
    elif "recipe_path" in entry:
        p = base_dir / entry["recipe_path"]
        if not p.exists():
            errors.append(f"{path}.recipe_path: file not found: {p}")
            return None
        source = p.read_text()
    else:
        errors.append(f"{path}: needs 'recipe' (inline text) or 'recipe_path'")
        return None
    try:
        return parse_recipe(source)
    except RecipeError as exc:
        errors.append(f"{path}.recipe: {exc}")
        return None


def load_config(path) -> RunConfig:
    """Load and validate a run config; raises ConfigurationError listing
    every violation with its field path."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(doc, base_dir=path.parent)


def parse_config(doc: dict, base_dir: Path | None = None) -> RunConfig:
    base_dir = base_dir or Path.cwd()
    errors: list[str] = []
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigurationError(
            f"format_version: expected {FORMAT_VERSION}, got {version!r}"
        )

    world = None
    try:
        world = config_from_dict(doc.get("world", {}))
    except (ConfigurationError, TypeError, ValueError) as exc:
        errors.append(f"world: {exc}")

    n_steps = doc.get("n_steps", 0)
    if not isinstance(n_steps, int) or n_steps < 0:
        errors.append(f"n_steps: must be a non-negative integer, got {n_steps!r}")

    spawns: list[SpawnSpec] = []
    raw_spawns = doc.get("spawns", [])
    if not raw_spawns:
        errors.append("spawns: at least one spawn entry required")
    for k, entry in enumerate(raw_spawns):
        recipe = _load_recipe_field(entry, base_dir, f"spawns[{k}]", errors)
        center = entry.get("center")
        if center is None or not isinstance(center, (list, tuple)):
            errors.append(f"spawns[{k}].center: required list of coordinates")
            continue
        radius = entry.get("radius", 50.0)
        if radius < 0:
            errors.append(f"spawns[{k}].radius: must be >= 0")
        if world is not None and len(center) != world.dimensionality:
            errors.append(
                f"spawns[{k}].center: {len(center)} components for "
                f"{world.dimensionality}-D world"
            )
        if recipe is not None:
            spawns.append(SpawnSpec(recipe=recipe, center=tuple(center), radius=radius))

    observers = ObserverSettings()
    for key, value in doc.get("observers", {}).items():
        if not hasattr(observers, key):
            errors.append(f"observers.{key}: unknown setting")
        else:
            setattr(observers, key, value)

    perturbations: list[PerturbationRule] = []
    for k, entry in enumerate(doc.get("perturbations", [])):
        try:
            perturbations.append(PerturbationRule(**entry))
        except (ConfigurationError, TypeError) as exc:
            errors.append(f"perturbations[{k}]: {exc}")

    if errors:
        raise ConfigurationError(
            "invalid run config:\n  " + "\n  ".join(errors)
        )
    return RunConfig(
        world=world, spawns=spawns, n_steps=n_steps,
        observers=observers, perturbations=perturbations,
    )


def config_to_doc(cfg: RunConfig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "world": config_to_dict(cfg.world),
        "n_steps": cfg.n_steps,
        "spawns": [
            {
                "recipe": serialize_recipe(s.recipe),
                "center": list(s.center),
                "radius": s.radius,
            }
            for s in cfg.spawns
        ],
        "observers": {
            "hash_every": cfg.observers.hash_every,
            "record_frames": cfg.observers.record_frames,
            "sample_every": cfg.observers.sample_every,
            "feature_window": cfg.observers.feature_window,
            "link_radius": cfg.observers.link_radius,
            "harvest_interval": cfg.observers.harvest_interval,
            "min_object_size": cfg.observers.min_object_size,
            "min_lifetime": cfg.observers.min_lifetime,
        },
        "perturbations": [
            {
                "period": p.period,
                "kind": p.kind,
                "fraction": p.fraction,
                "factor": p.factor,
            }
            for p in cfg.perturbations
        ],
    }


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_doc(cfg), indent=2, sort_keys=True) + "\n")
