"""Ensemble studies: behavior measurement over random-recipe runs per class.

Each run spawns one random recipe into a fresh world, simulates, and
summarizes the settled behavior window as a 24-feature vector. Recipes are
paired across the multi-type classes (the same run index draws the same
recipe), so class comparisons isolate the class mechanism. Diversity
comparisons score per-class bootstrap replicates under normalization bounds
pooled over all classes.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .diversity import bootstrap_diversity, feature_bounds
from .engine import WorldConfig, new_world, run, spawn
from .features import TrajectoryRecorder, compute_behavior_vector
from .morphogenesis import SwarmClass
from .recipe import Recipe, random_recipe
from .rng import make_rng, stream_key

_RECIPE_PATH = 1001
_HOMOGENEOUS_RECIPE_PATH = 1002
_WORLD_PATH = 1003


@dataclass(frozen=True)
class StudySettings:
    n_particles: int = 300
    n_steps: int = 2000
    extent: float = 500.0
    spawn_radius: float = 150.0
    p_differentiate: float = 0.005
    info_share_radius: float = 30.0
    link_radius: float = 30.0
    sample_every: int = 5
    feature_window: int = 200
    max_entries: int = 5


def study_recipe(swarm_class: SwarmClass, run_idx: int, base_seed: int,
                 settings: StudySettings) -> Recipe:
    """Random recipe for one run; multi-type classes share recipes by run index."""
    if swarm_class == SwarmClass.HOMOGENEOUS:
        rng = make_rng(stream_key(base_seed, _HOMOGENEOUS_RECIPE_PATH, run_idx))
        return random_recipe(rng, n_entries=1, total_count=settings.n_particles)
    rng = make_rng(stream_key(base_seed, _RECIPE_PATH, run_idx))
    n_entries = int(rng.integers(2, settings.max_entries + 1))
    return random_recipe(rng, n_entries=n_entries, total_count=settings.n_particles)


def run_study_case(args) -> list[float]:
    """One study run; module-level and picklable for worker pools."""
    class_value, run_idx, base_seed, settings = args
    swarm_class = SwarmClass(class_value)
    recipe = study_recipe(swarm_class, run_idx, base_seed, settings)
    cfg = WorldConfig(
        seed=stream_key(base_seed, _WORLD_PATH, run_idx),
        extent=(settings.extent, settings.extent),
        swarm_class=swarm_class,
        p_differentiate=settings.p_differentiate,
        info_share_radius=settings.info_share_radius,
    )
    world = new_world(cfg)
    center = (settings.extent / 2, settings.extent / 2)
    spawn(world, recipe, center, settings.spawn_radius)
    recorder = TrajectoryRecorder(
        sample_every=settings.sample_every, link_radius=settings.link_radius
    )
    run(world, settings.n_steps, observers=[recorder])
    vector = compute_behavior_vector(recorder.window(settings.feature_window))
    return vector.values.tolist()


def class_ensemble(
    swarm_class: SwarmClass,
    n_runs: int,
    base_seed: int,
    settings: StudySettings = StudySettings(),
    processes: int = 1,
) -> np.ndarray:
    """Behavior matrix (n_runs x 24) for one class."""
    cases = [(swarm_class.value, k, base_seed, settings) for k in range(n_runs)]
    if processes > 1:
        with multiprocessing.Pool(processes) as pool:
            rows = pool.map(run_study_case, cases)
    else:
        rows = [run_study_case(c) for c in cases]
    return np.asarray(rows, dtype=np.float64)


CLASS_ORDER = (
    SwarmClass.HOMOGENEOUS,
    SwarmClass.HETEROGENEOUS,
    SwarmClass.REDIFFERENTIABLE,
    SwarmClass.INFOSHARE,
)


@dataclass
class FourClassResult:
    matrices: dict = field(default_factory=dict)  # class value -> (n_runs, 24)
    medians: dict = field(default_factory=dict)  # class value -> measure -> median
    orderings: dict = field(default_factory=dict)  # measure -> bool

    @property
    def measures_passing(self) -> int:
        return sum(bool(v) for v in self.orderings.values())


def four_class_study(
    n_runs: int,
    base_seed: int,
    settings: StudySettings = StudySettings(),
    replicates: int = 20,
    subsample: int | None = None,
    resolution: int = 10,
    processes: int = 1,
    matrices: dict | None = None,
) -> FourClassResult:
    """Run (or score precomputed) per-class ensembles and check the expected
    diversity ordering per measure: Redifferentiable > Heterogeneous,
    InfoSharing > Heterogeneous, and Homogeneous strictly lowest."""
    result = FourClassResult()
    if matrices is None:
        matrices = {}
        for cls in CLASS_ORDER:
            matrices[cls.value] = class_ensemble(
                cls, n_runs, base_seed, settings, processes=processes
            )
    result.matrices = matrices

    pooled = np.vstack([matrices[cls.value] for cls in CLASS_ORDER])
    bounds = feature_bounds(pooled)
    if subsample is None:
        subsample = max(2, n_runs // 2)

    per_measure: dict[str, dict[str, float]] = {"coverage": {}, "mean_pairwise": {}, "entropy": {}}
    for cls in CLASS_ORDER:
        reports = bootstrap_diversity(
            matrices[cls.value],
            make_rng(stream_key(base_seed, 2001, cls.rank)),
            replicates=replicates,
            subsample=subsample,
            resolution=resolution,
            bounds=bounds,
        )
        for measure in per_measure:
            values = [getattr(r, measure) for r in reports]
            per_measure[measure][cls.value] = float(np.median(values))
    result.medians = per_measure

    hom, het = SwarmClass.HOMOGENEOUS.value, SwarmClass.HETEROGENEOUS.value
    red, inf = SwarmClass.REDIFFERENTIABLE.value, SwarmClass.INFOSHARE.value
    for measure, med in per_measure.items():
        result.orderings[measure] = (
            med[red] > med[het]
            and med[inf] > med[het]
            and med[hom] < med[het]
            and med[hom] < med[red]
            and med[hom] < med[inf]
        )
    return result
