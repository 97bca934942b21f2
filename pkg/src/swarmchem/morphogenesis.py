"""The four swarm system classes and their per-step hooks.

Class capabilities are cumulative: Homogeneous (one type) -> Heterogeneous
(multiple fixed types) -> Redifferentiable (particles stochastically redraw
their active type from their carried recipe) -> InfoSharing (particles also
adopt recipes from nearby particles and coordinate type choice locally).

The engine calls ``apply_class_hooks`` once per step after motion. All reads
(neighbor sets, type census, carried recipes) come from the pre-step
snapshot; writes commit to the stepped state. Share and re-differentiation
draws use separate counter-RNG streams, so disabling the sharing hook
reproduces a Redifferentiable run bit-exactly under the same seed.
"""

from __future__ import annotations

import enum
from typing import TYPE_CHECKING

import numpy as np

from . import rng as rnd
from .recipe import Recipe

if TYPE_CHECKING:
    from .engine import Particle, World


class SwarmClass(enum.Enum):
    HOMOGENEOUS = "homogeneous"
    HETEROGENEOUS = "heterogeneous"
    REDIFFERENTIABLE = "rediff"
    INFOSHARE = "infoshare"

    @property
    def rank(self) -> int:
        return _CLASS_ORDER.index(self)

    def at_least(self, other: "SwarmClass") -> bool:
        return self.rank >= other.rank


_CLASS_ORDER = [
    SwarmClass.HOMOGENEOUS,
    SwarmClass.HETEROGENEOUS,
    SwarmClass.REDIFFERENTIABLE,
    SwarmClass.INFOSHARE,
]


def draw_entry_index(recipe: Recipe, u: float, weights=None) -> int:
    """Map a uniform draw u in [0,1) to an entry index, count-weighted by default."""
    if weights is None:
        w = np.array([c for c, _ in recipe.entries], dtype=np.float64)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.sum() <= 0.0:
            w = np.array([c for c, _ in recipe.entries], dtype=np.float64)
    cum = np.cumsum(w)
    return int(np.searchsorted(cum / cum[-1], u, side="right").clip(0, len(w) - 1))


def rescale_speed(velocity: np.ndarray, new_v_normal: float, eps: float = 1e-6) -> np.ndarray:
    """Keep direction, set speed to the new type's normal speed (zero stays zero)."""
    speed = float(np.linalg.norm(velocity))
    if speed < eps:
        return velocity.copy()
    return velocity * (new_v_normal / speed)


def differentiate(particle: "Particle", p_differentiate: float, rng: rnd.RandomSource) -> "Particle":
    """With probability p_differentiate, redraw the particle's active type
    from its carried recipe, weighted by entry counts."""
    if rng.random() >= p_differentiate:
        return particle
    entry = draw_entry_index(particle.carried_recipe, rng.random())
    _, params = particle.carried_recipe.entries[entry]
    return particle.with_type(params, rescale_speed(particle.velocity, params.v_normal))


def coordination_weights(recipe: Recipe, neighbor_type_ids: np.ndarray, type_id_of) -> np.ndarray:
    """Type-choice coordination weights for a shared re-differentiation draw.

    Entry weight = observed local fraction of that entry's type: the
    particle coordinates its type choice with what its neighborhood is
    already doing. Falls back to plain count weights when no entry type is
    present locally (handled by the draw). Anti-conformist quota filling
    ((desired - observed) clamped at zero) was tried first and measurably
    disintegrates coherent swarms: it injects locally-missing disruptive
    types exactly where structure exists.
    """
    n_nb = max(len(neighbor_type_ids), 1)
    weights = np.empty(len(recipe.entries), dtype=np.float64)
    for k, (_, params) in enumerate(recipe.entries):
        tid = type_id_of(params)
        weights[k] = float(np.count_nonzero(neighbor_type_ids == tid)) / n_nb
    return weights


def share_information(
    particle: "Particle",
    neighbors: list["Particle"],
    p_share: float,
    rng: rnd.RandomSource,
) -> "Particle":
    """With probability p_share, adopt a uniformly chosen neighbor's carried
    recipe and re-differentiate immediately, coordinating the type choice
    with the neighborhood's observed composition. No effect without
    neighbors."""
    if not neighbors or rng.random() >= p_share:
        return particle
    pick = neighbors[int(rng.random() * len(neighbors))]
    adopted = pick.carried_recipe
    nb_types = np.array([q.type_id for q in neighbors], dtype=np.int64)
    tuple_to_tid = {q.active.as_tuple(): q.type_id for q in neighbors}
    tuple_to_tid.setdefault(particle.active.as_tuple(), particle.type_id)

    def type_id_of(params):
        return tuple_to_tid.get(params.as_tuple(), -1)

    w = coordination_weights(adopted, nb_types, type_id_of)
    entry = draw_entry_index(adopted, rng.random(), w)
    _, params = adopted.entries[entry]
    out = particle.with_type(params, rescale_speed(particle.velocity, params.v_normal))
    return out.with_recipe(adopted)


def apply_class_hooks(world: "World", pre, index) -> int:
    """Engine hook: share (InfoSharing) then differentiate (Redifferentiable+).

    ``pre`` is the pre-step snapshot; ``index`` the step's neighbor index
    built on pre-step positions. Returns the number of particles whose type
    changed.
    """
    cls = world.config.swarm_class
    if not cls.at_least(SwarmClass.REDIFFERENTIABLE):
        return 0
    n = world.n_particles
    if n == 0:
        return 0
    cfg = world.config
    seed, step = cfg.seed, world.step_count
    idx_all = np.arange(n)
    key_d = rnd.stream_key(seed, rnd.TAG_DIFFERENTIATE, step)
    coin = rnd.uniform(key_d, idx_all, 0)
    draw = rnd.uniform(key_d, idx_all, 1)
    triggered = np.nonzero(coin < cfg.p_differentiate)[0]
    if not len(triggered):
        return 0
    bias: dict[int, np.ndarray] = {}

    # InfoSharing: a triggered redraw with neighbors in the share radius
    # adopts a neighbor's recipe and coordinates the type choice with the
    # observed local composition. The trigger set and draw stream are the
    # same as Redifferentiable, so disabling sharing (radius 0) reproduces
    # the lower class bit-exactly.
    if cls == SwarmClass.INFOSHARE and cfg.info_share_radius > 0:
        key_s = rnd.stream_key(seed, rnd.TAG_SHARE, step)
        s_pick = rnd.uniform(key_s, idx_all, 0)
        for i in triggered.tolist():
            nb = index.neighbors_of(i, cfg.info_share_radius)
            if not len(nb):
                continue
            pick = int(nb[int(s_pick[i] * len(nb))])
            adopted = pre.carried[pick]
            world.carried[i] = adopted
            nb_types = pre.type_ids[nb]

            def type_id_of(params):
                tid = world.types.lookup(params)
                return tid if tid is not None else -1

            bias[i] = coordination_weights(adopted, nb_types, type_id_of)

    changed = 0
    for i in triggered.tolist():
        recipe = world.carried[i]
        entry = draw_entry_index(recipe, draw[i], bias.get(i))
        _, params = recipe.entries[entry]
        tid = world.types.id_for(params)
        if tid != world.type_ids[i]:
            changed += 1
        world.type_ids[i] = tid
        world.params[i] = params.as_tuple()
        world.velocities[i] = rescale_speed(world.velocities[i], params.v_normal, cfg.epsilon)
    return changed
