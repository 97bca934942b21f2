"""Evolution as information flow over a fixed particle population.

When two particles come within the collision radius, a competition function
decides which one is the source of a recipe transmission; the destination
adopts a (possibly mutated) copy of the source's recipe and immediately
re-differentiates from it. No particle is ever created or destroyed.

Competition rules: faster wins, slower wins, the particle hitting the other
from behind wins (larger velocity component toward the opponent), or the
majority rule: the particle surrounded by more same-type neighbors within
its own perception radius wins. All ties fall to a seeded coin flip.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import rng as rnd
from .errors import ConfigurationError
from .morphogenesis import draw_entry_index, rescale_speed
from .neighbors import build_index, displacement
from .recipe import mutate_recipe

if TYPE_CHECKING:
    from .engine import World


class CompetitionRule(enum.Enum):
    FASTER = "faster"
    SLOWER = "slower"
    FROM_BEHIND = "behind"
    MAJORITY = "majority"


@dataclass(frozen=True)
class CollisionEvent:
    i: int
    j: int
    step: int

    def __post_init__(self):
        if self.i > self.j:
            a, b = self.j, self.i
            object.__setattr__(self, "i", a)
            object.__setattr__(self, "j", b)


@dataclass(frozen=True)
class TransmissionEvent:
    step: int
    i: int
    j: int
    rule: str
    winner: int
    mutated: bool


def detect_collisions(world: "World", index=None) -> list[CollisionEvent]:
    """Unordered particle pairs closer than the collision radius, one event
    per pair, sorted by index pair."""
    cfg = world.config
    if cfg.collision_radius <= 0 or world.n_particles < 2:
        return []
    if index is None:
        index = build_index(
            world.positions, cfg.collision_radius, cfg.extent_array, cfg.toroidal
        )
    i_arr, j_arr, _, _ = index.pairs(cfg.collision_radius)
    lo = np.minimum(i_arr, j_arr)
    hi = np.maximum(i_arr, j_arr)
    order = np.lexsort((hi, lo))
    return [
        CollisionEvent(int(a), int(b), world.step_count)
        for a, b in zip(lo[order].tolist(), hi[order].tolist())
    ]


def same_type_neighbor_count(world: "World", i: int) -> int:
    """Particles q != i of i's type within i's own perception radius."""
    r = world.params[i, 0]  # COL_R_PERCEPTION
    dx = displacement(
        world.positions[i], world.positions, world.config.extent_array, world.config.toroidal
    )
    d2 = np.einsum("ij,ij->i", dx, dx)
    hit = (d2 < r * r) & (world.type_ids == world.type_ids[i])
    hit[i] = False
    return int(np.count_nonzero(hit))


def compete(
    event: CollisionEvent,
    rule: CompetitionRule,
    world: "World",
    rng: rnd.RandomSource,
) -> int:
    """Decide the winner of a collision; ties fall to a seeded coin flip."""
    i, j = event.i, event.j
    if rule in (CompetitionRule.FASTER, CompetitionRule.SLOWER):
        score_i = float(np.linalg.norm(world.velocities[i]))
        score_j = float(np.linalg.norm(world.velocities[j]))
        if rule == CompetitionRule.SLOWER:
            score_i, score_j = -score_i, -score_j
    elif rule == CompetitionRule.FROM_BEHIND:
        cfg = world.config
        d_ij = displacement(
            world.positions[i], world.positions[j], cfg.extent_array, cfg.toroidal
        )
        score_i = float(np.dot(world.velocities[i], d_ij))
        score_j = float(np.dot(world.velocities[j], -d_ij))
    elif rule == CompetitionRule.MAJORITY:
        score_i = same_type_neighbor_count(world, i)
        score_j = same_type_neighbor_count(world, j)
    else:  # pragma: no cover
        raise ConfigurationError(f"unknown competition rule {rule}")
    if score_i > score_j:
        return i
    if score_j > score_i:
        return j
    return i if rng.random() < 0.5 else j


def transmit(
    event: CollisionEvent, winner: int, world: "World", rng: rnd.RandomSource
) -> "World":
    """Copy the winner's recipe (with possible mutations) onto the loser,
    which immediately re-differentiates from the new recipe."""
    loser = event.j if winner == event.i else event.i
    source_recipe = world.carried[winner]
    new_recipe = mutate_recipe(source_recipe, world.config.mutation, rng)
    world.carried[loser] = new_recipe
    entry = draw_entry_index(new_recipe, rng.random())
    _, params = new_recipe.entries[entry]
    world.type_ids[loser] = world.types.id_for(params)
    world.params[loser] = params.as_tuple()
    world.velocities[loser] = rescale_speed(
        world.velocities[loser], params.v_normal, world.config.epsilon
    )
    world.last_transmissions.append(
        TransmissionEvent(
            step=world.step_count,
            i=event.i,
            j=event.j,
            rule=world.config.competition.value if world.config.competition else "",
            winner=winner,
            mutated=new_recipe != source_recipe,
        )
    )
    return world


def apply_collisions(
    world: "World", pre, ev_i: np.ndarray, ev_j: np.ndarray, majority_counts: np.ndarray
) -> tuple[int, list[TransmissionEvent]]:
    """Engine path: compete and transmit for one step's collision events.

    Reads contest inputs (positions, velocities, types, same-type counts)
    from the pre-step snapshot; commits recipe/type changes to the stepped
    state. Events are processed in sorted pair order with at most one
    applied transmission per particle per step; skipped events consume no
    random draws. Draws come from the per-(seed, step) evolution substream.
    """
    cfg = world.config
    rule = cfg.competition
    if len(ev_i) == 0:
        return 0, []
    lo = np.minimum(ev_i, ev_j)
    hi = np.maximum(ev_i, ev_j)
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]

    n = world.n_particles
    rng = rnd.make_rng(rnd.stream_key(cfg.seed, rnd.TAG_EVOLVE, world.step_count))
    touched = np.zeros(n, dtype=bool)
    transmissions: list[TransmissionEvent] = []
    for a, b in zip(lo.tolist(), hi.tolist()):
        if touched[a] or touched[b]:
            continue
        winner = _decide_pre(rule, a, b, pre, majority_counts, cfg, rng)
        loser = b if winner == a else a
        source_recipe = world.carried[winner]
        new_recipe = mutate_recipe(source_recipe, cfg.mutation, rng)
        world.carried[loser] = new_recipe
        entry = draw_entry_index(new_recipe, rng.random())
        _, params = new_recipe.entries[entry]
        world.type_ids[loser] = world.types.id_for(params)
        world.params[loser] = params.as_tuple()
        world.velocities[loser] = rescale_speed(
            world.velocities[loser], params.v_normal, cfg.epsilon
        )
        touched[a] = touched[b] = True
        transmissions.append(
            TransmissionEvent(
                step=world.step_count,
                i=a,
                j=b,
                rule=rule.value,
                winner=winner,
                mutated=new_recipe != source_recipe,
            )
        )
    return int(len(lo)), transmissions


def _decide_pre(rule, i, j, pre, majority_counts, cfg, rng) -> int:
    if rule in (CompetitionRule.FASTER, CompetitionRule.SLOWER):
        score_i = float(np.linalg.norm(pre.velocities[i]))
        score_j = float(np.linalg.norm(pre.velocities[j]))
        if rule == CompetitionRule.SLOWER:
            score_i, score_j = -score_i, -score_j
    elif rule == CompetitionRule.FROM_BEHIND:
        d_ij = displacement(pre.positions[i], pre.positions[j], cfg.extent_array, cfg.toroidal)
        score_i = float(np.dot(pre.velocities[i], d_ij))
        score_j = float(np.dot(pre.velocities[j], -d_ij))
    elif rule == CompetitionRule.MAJORITY:
        score_i = int(majority_counts[i])
        score_j = int(majority_counts[j])
    else:  # pragma: no cover
        raise ConfigurationError(f"unknown competition rule {rule}")
    if score_i > score_j:
        return i
    if score_j > score_i:
        return j
    return i if rng.random() < 0.5 else j


_PERTURBATION_KINDS = ("scatter", "rescale_extent", "swap_boundary")


@dataclass(frozen=True)
class PerturbationRule:
    """Scheduled environment change: every ``period`` steps apply ``kind``."""

    period: int
    kind: str
    fraction: float = 0.1
    factor: float = 1.0

    def __post_init__(self):
        if self.period < 1:
            raise ConfigurationError("perturbation period must be >= 1")
        if self.kind not in _PERTURBATION_KINDS:
            raise ConfigurationError(
                f"unknown perturbation kind {self.kind!r}; expected one of {_PERTURBATION_KINDS}"
            )
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigurationError("perturbation fraction must be in [0, 1]")
        if self.factor <= 0.0:
            raise ConfigurationError("perturbation factor must be > 0")


def apply_perturbations(world: "World", rules) -> list[dict]:
    """Fire every rule whose period divides the current step count."""
    events: list[dict] = []
    step = world.step_count
    if step == 0:
        return events
    cfg = world.config
    for k, rule in enumerate(rules):
        if step % rule.period != 0:
            continue
        key = rnd.stream_key(cfg.seed, rnd.TAG_PERTURB, step, k)
        if rule.kind == "scatter":
            n = world.n_particles
            m = int(rule.fraction * n)
            if m > 0:
                order = np.argsort(rnd.uniform(key, np.arange(n), 0), kind="stable")
                chosen = order[:m]
                extent = cfg.extent_array
                for a in range(cfg.dimensionality):
                    world.positions[chosen, a] = (
                        rnd.uniform(key, chosen, 1 + a) * extent[a]
                    )
            events.append({"step": step, "kind": rule.kind, "particles_moved": m})
        elif rule.kind == "rescale_extent":
            cfg.extent = tuple(e * rule.factor for e in cfg.extent)
            world.positions *= rule.factor
            events.append({"step": step, "kind": rule.kind, "factor": rule.factor})
        elif rule.kind == "swap_boundary":
            cfg.boundary = "open" if cfg.boundary == "toroidal" else "toroidal"
            events.append({"step": step, "kind": rule.kind, "boundary": cfg.boundary})
    return events
