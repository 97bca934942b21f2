"""swarmchem: heterogeneous swarm chemistry simulation and analysis.

Recipe-parameterized self-propelled particle swarms, the four morphogenetic
system classes, collision-driven evolutionary recipe transmission, behavior
diversity analytics, object harvesting, and an interactive-evolution
session server.
"""

from .engine import World, WorldConfig, new_world, run, spawn, step
from .evolution import CollisionEvent, CompetitionRule, PerturbationRule
from .morphogenesis import SwarmClass
from .recipe import (
    KineticParams,
    MutationConfig,
    Recipe,
    RecipeError,
    mix_recipes,
    mutate_recipe,
    parse_recipe,
    random_recipe,
    serialize_recipe,
)
from .rng import RandomSource, make_rng

__version__ = "0.1.0"

__all__ = [
    "CollisionEvent",
    "CompetitionRule",
    "KineticParams",
    "MutationConfig",
    "PerturbationRule",
    "RandomSource",
    "Recipe",
    "RecipeError",
    "SwarmClass",
    "World",
    "WorldConfig",
    "make_rng",
    "mix_recipes",
    "mutate_recipe",
    "new_world",
    "parse_recipe",
    "random_recipe",
    "run",
    "serialize_recipe",
    "spawn",
    "step",
    "__version__",
]
