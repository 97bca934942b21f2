"""Deterministic kinetic core.

Per-step update for every particle i with neighbor set N (dist < r_perception):

* no neighbors: acceleration = random unit vector * steer_magnitude
* else: a = w_cohesion * (<x>_N - x_i) + w_alignment * (<v>_N - v_i)
        + w_separation * sum_j (x_i - x_j) / max(dist^2, eps),
  plus, with probability p_random_steer, a random vector of magnitude
  steer_magnitude.

Then v += a; speeds above v_max are rescaled to v_max; pacekeeping relaxes
speed toward v_normal: v *= w_pacekeeping * v_normal / max(|v|, eps)
+ (1 - w_pacekeeping); x += v; the boundary rule is applied (toroidal wrap,
or clamp + velocity reflection for open worlds).

The update is synchronous: all interactions are computed from the pre-step
state, then all particles commit. The implementation is dimension-generic
(one code path for 2D and 3D). All randomness is counter-based on
(seed, stream tag, step, particle index), so a run is bit-reproducible from
its seed and any snapshot resumes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from . import rng as rnd
from .errors import ConfigurationError, SimulationError
from .evolution import CompetitionRule, TransmissionEvent, apply_collisions, apply_perturbations
from .morphogenesis import SwarmClass, apply_class_hooks
from .neighbors import build_index
from .recipe import N_PARAMS, KineticParams, MutationConfig, Recipe

# params matrix columns, in recipe.PARAM_FIELDS order
COL_R_PERCEPTION = 0
COL_V_NORMAL = 1
COL_V_MAX = 2
COL_W_COHESION = 3
COL_W_ALIGNMENT = 4
COL_W_SEPARATION = 5
COL_P_RANDOM_STEER = 6
COL_W_PACEKEEPING = 7


@dataclass
class WorldConfig:
    dimensionality: int = 2
    extent: tuple[float, ...] = (500.0, 500.0)
    boundary: str = "toroidal"
    seed: int = 0
    swarm_class: SwarmClass = SwarmClass.HETEROGENEOUS
    competition: CompetitionRule | None = None
    mutation: MutationConfig = field(default_factory=MutationConfig)
    collision_radius: float = 10.0
    p_differentiate: float = 0.005
    info_share_radius: float = 30.0
    steer_magnitude: float = 0.5
    epsilon: float = 1e-6
    max_population: int = 200_000

    def __post_init__(self):
        if self.dimensionality not in (2, 3):
            raise ConfigurationError(f"dimensionality must be 2 or 3, got {self.dimensionality}")
        if np.isscalar(self.extent):
            self.extent = tuple([float(self.extent)] * self.dimensionality)
        else:
            self.extent = tuple(float(e) for e in self.extent)
        if len(self.extent) != self.dimensionality:
            raise ConfigurationError(
                f"extent has {len(self.extent)} axes for dimensionality {self.dimensionality}"
            )
        if any(e <= 0 for e in self.extent):
            raise ConfigurationError("extent must be > 0 per axis")
        if self.boundary not in ("toroidal", "open"):
            raise ConfigurationError(f"unknown boundary rule: {self.boundary!r}")
        if isinstance(self.swarm_class, str):
            self.swarm_class = SwarmClass(self.swarm_class)
        if isinstance(self.competition, str):
            self.competition = CompetitionRule(self.competition)
        if self.collision_radius < 0 or self.info_share_radius < 0:
            raise ConfigurationError("radii must be >= 0")
        if not 0.0 <= self.p_differentiate <= 1.0:
            raise ConfigurationError("p_differentiate must be in [0, 1]")

    @property
    def extent_array(self) -> np.ndarray:
        return np.asarray(self.extent, dtype=np.float64)

    @property
    def toroidal(self) -> bool:
        return self.boundary == "toroidal"


class TypeRegistry:
    """Stable mapping between kinetic parameter tuples and integer type ids."""

    def __init__(self):
        self._ids: dict[tuple[float, ...], int] = {}
        self._params: list[KineticParams] = []

    def id_for(self, params: KineticParams) -> int:
        key = params.as_tuple()
        tid = self._ids.get(key)
        if tid is None:
            tid = len(self._params)
            self._ids[key] = tid
            self._params.append(params)
        return tid

    def lookup(self, params: KineticParams) -> int | None:
        return self._ids.get(params.as_tuple())

    def params_of(self, type_id: int) -> KineticParams:
        return self._params[type_id]

    def __len__(self) -> int:
        return len(self._params)

    def all_params(self) -> list[KineticParams]:
        return list(self._params)


@dataclass(frozen=True)
class Particle:
    """Copy view of one particle, for operator-style APIs and tests."""

    position: np.ndarray
    velocity: np.ndarray
    active: KineticParams
    carried_recipe: Recipe
    type_id: int

    def with_type(self, params: KineticParams, velocity: np.ndarray) -> "Particle":
        return replace(self, active=params, velocity=velocity, type_id=-1)

    def with_recipe(self, recipe: Recipe) -> "Particle":
        return replace(self, carried_recipe=recipe)


class _PreState:
    """Pre-step snapshot handed to hooks and evolution."""

    __slots__ = ("positions", "velocities", "params", "type_ids", "carried")

    def __init__(self, world: "World"):
        self.positions = world.positions
        self.velocities = world.velocities
        self.params = world.params
        self.type_ids = world.type_ids.copy()
        self.carried = list(world.carried)


@dataclass
class World:
    config: WorldConfig
    positions: np.ndarray
    velocities: np.ndarray
    params: np.ndarray
    type_ids: np.ndarray
    carried: list[Recipe]
    types: TypeRegistry
    step_count: int = 0
    # per-step observability, refreshed by step()
    last_collision_events: int = 0
    last_transmissions: list[TransmissionEvent] = field(default_factory=list)
    last_rediff_events: int = 0
    last_perturbations: list[dict] = field(default_factory=list)

    @property
    def n_particles(self) -> int:
        return len(self.positions)

    def particle(self, i: int) -> Particle:
        return Particle(
            position=self.positions[i].copy(),
            velocity=self.velocities[i].copy(),
            active=self.types.params_of(int(self.type_ids[i])),
            carried_recipe=self.carried[i],
            type_id=int(self.type_ids[i]),
        )

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.velocities, axis=1)


def new_world(config: WorldConfig) -> World:
    d = config.dimensionality
    return World(
        config=config,
        positions=np.empty((0, d), dtype=np.float64),
        velocities=np.empty((0, d), dtype=np.float64),
        params=np.empty((0, N_PARAMS), dtype=np.float64),
        type_ids=np.empty(0, dtype=np.int64),
        carried=[],
        types=TypeRegistry(),
    )


def spawn(world: World, recipe: Recipe, center, radius: float) -> World:
    """Add total_count(recipe) particles in the ball(center, radius).

    Positions are uniform in the ball, velocities random directions at the
    type's v_normal, types assigned per entry counts exactly, carried recipe
    set to ``recipe``. Deterministic given (seed, step_count, population).
    """
    cfg = world.config
    d = cfg.dimensionality
    center = np.asarray(center, dtype=np.float64)
    if center.shape != (d,):
        raise ConfigurationError(f"spawn center must have {d} components")
    n_new = recipe.total_count
    if world.n_particles + n_new > cfg.max_population:
        raise ConfigurationError(
            f"spawn of {n_new} exceeds max population {cfg.max_population}"
        )
    if cfg.swarm_class == SwarmClass.HOMOGENEOUS:
        if len(recipe.entries) > 1:
            raise ConfigurationError("homogeneous world requires a single-type recipe")
        if len(world.types) and world.types.lookup(recipe.entries[0][1]) != 0:
            raise ConfigurationError("homogeneous world already has a different type")

    key_dir = rnd.stream_key(cfg.seed, rnd.TAG_SPAWN, world.step_count, world.n_particles, 0)
    key_rad = rnd.stream_key(cfg.seed, rnd.TAG_SPAWN, world.step_count, world.n_particles, 1)
    key_vel = rnd.stream_key(cfg.seed, rnd.TAG_SPAWN, world.step_count, world.n_particles, 2)
    idx = np.arange(n_new)
    directions = rnd.unit_vectors(key_dir, idx, d)
    radii = radius * rnd.uniform(key_rad, idx) ** (1.0 / d)
    pos = center + directions * radii[:, None]
    extent = cfg.extent_array
    if cfg.toroidal:
        pos = np.mod(pos, extent)
    else:
        pos = np.clip(pos, 0.0, extent)

    vel_dir = rnd.unit_vectors(key_vel, idx, d)
    params_rows = np.empty((n_new, N_PARAMS), dtype=np.float64)
    tids = np.empty(n_new, dtype=np.int64)
    cursor = 0
    for count, p in recipe.entries:
        tid = world.types.id_for(p)
        params_rows[cursor : cursor + count] = p.as_tuple()
        tids[cursor : cursor + count] = tid
        cursor += count
    vel = vel_dir * params_rows[:, COL_V_NORMAL][:, None]

    world.positions = np.concatenate([world.positions, pos])
    world.velocities = np.concatenate([world.velocities, vel])
    world.params = np.concatenate([world.params, params_rows])
    world.type_ids = np.concatenate([world.type_ids, tids])
    world.carried.extend([recipe] * n_new)
    return world


def _interaction_radius(world: World) -> float:
    cfg = world.config
    r = float(world.params[:, COL_R_PERCEPTION].max()) if world.n_particles else 0.0
    if cfg.competition is not None:
        r = max(r, cfg.collision_radius)
    if cfg.swarm_class == SwarmClass.INFOSHARE:
        r = max(r, cfg.info_share_radius)
    return max(r, 1e-9)


def step(world: World, brute_force: bool = False) -> World:
    """Advance the world by one synchronous step (in place).

    brute_force=True degrades the grid to a single cell, turning candidate
    enumeration into the full O(n^2) scan; results are identical, only slower
    (kept for the index-vs-brute benchmark).
    """
    cfg = world.config
    n = world.n_particles
    world.last_collision_events = 0
    world.last_transmissions = []
    world.last_rediff_events = 0
    world.last_perturbations = []
    if n == 0:
        world.step_count += 1
        return world

    extent = cfg.extent_array
    pre = _PreState(world)
    build_radius = float(np.max(extent)) if brute_force else _interaction_radius(world)
    index = build_index(world.positions, build_radius, extent, cfg.toroidal)
    order, starts, counts, cp_a, cp_b = index.grid_arrays()

    # gather into grid order so cell-mates are memory-adjacent in the kernel
    pos_sorted = world.positions[order]
    vel_sorted = world.velocities[order]
    type_sorted = world.type_ids[order]
    r_perc_sorted = world.params[order, COL_R_PERCEPTION]

    want_events = cfg.competition is not None and cfg.collision_radius > 0
    coll_r2 = cfg.collision_radius**2 if want_events else 0.0
    want_majority = cfg.competition == CompetitionRule.MAJORITY
    ev_cap = 8 * n + 64
    while True:
        coh_s, vsum_s, sep_s, cnt_s, mcount_s, evl_i, evl_j, overflow = kernels.interactions(
            starts, counts, cp_a, cp_b,
            pos_sorted, vel_sorted, type_sorted, r_perc_sorted,
            extent, cfg.toroidal, cfg.epsilon, coll_r2, want_majority, ev_cap,
        )
        if not overflow:
            break
        ev_cap *= 4

    # scatter back to particle order
    coh_sum = np.empty_like(coh_s)
    vel_sum = np.empty_like(vsum_s)
    sep = np.empty_like(sep_s)
    cnt = np.empty_like(cnt_s)
    mcount = np.empty_like(mcount_s)
    coh_sum[order] = coh_s
    vel_sum[order] = vsum_s
    sep[order] = sep_s
    cnt[order] = cnt_s
    mcount[order] = mcount_s
    ev_i = order[evl_i]
    ev_j = order[evl_j]

    has_nb = cnt > 0
    inv_count = np.where(has_nb, 1.0 / np.maximum(cnt, 1), 0.0)
    coh = coh_sum * inv_count[:, None]  # <x>_N - x_i via mean displacement
    ali = vel_sum * inv_count[:, None] - np.where(has_nb[:, None], world.velocities, 0.0)

    d = cfg.dimensionality
    acc = (
        world.params[:, COL_W_COHESION][:, None] * coh
        + world.params[:, COL_W_ALIGNMENT][:, None] * ali
        + world.params[:, COL_W_SEPARATION][:, None] * sep
    )

    idx_all = np.arange(n)
    key_steer_dir = rnd.stream_key(cfg.seed, rnd.TAG_STEER, world.step_count, 0)
    key_steer_coin = rnd.stream_key(cfg.seed, rnd.TAG_STEER, world.step_count, 1)
    steer = rnd.unit_vectors(key_steer_dir, idx_all, d) * cfg.steer_magnitude
    coin = rnd.uniform(key_steer_coin, idx_all)
    acc[~has_nb] = steer[~has_nb]
    kick = has_nb & (coin < world.params[:, COL_P_RANDOM_STEER])
    acc[kick] += steer[kick]

    vel = world.velocities + acc
    speed = np.linalg.norm(vel, axis=1)
    v_max = world.params[:, COL_V_MAX]
    over = speed > v_max
    if np.any(over):
        vel[over] *= (v_max[over] / np.maximum(speed[over], cfg.epsilon))[:, None]
        speed = np.linalg.norm(vel, axis=1)
    w_pace = world.params[:, COL_W_PACEKEEPING]
    factor = w_pace * world.params[:, COL_V_NORMAL] / np.maximum(speed, cfg.epsilon) + (
        1.0 - w_pace
    )
    vel *= factor[:, None]

    pos = world.positions + vel
    if cfg.toroidal:
        pos = np.mod(pos, extent)
    else:
        low = pos < 0.0
        high = pos > extent
        if np.any(low) or np.any(high):
            vel = np.where(low | high, -vel, vel)
            pos = np.clip(pos, 0.0, extent)

    world.positions = pos
    world.velocities = vel

    world.last_rediff_events = apply_class_hooks(world, pre, index)

    if cfg.competition is not None:
        n_events, transmissions = apply_collisions(world, pre, ev_i, ev_j, mcount)
        world.last_collision_events = n_events
        world.last_transmissions = transmissions
        world.last_rediff_events += len(transmissions)

    world.step_count += 1
    return world


def run(world: World, n_steps: int, observers=(), perturbations=()) -> World:
    """Apply ``step`` n_steps times, invoking observers after each step.

    Observer failures propagate without corrupting the world (the step that
    raised has fully committed). Perturbation rules fire on their period.
    """
    if n_steps < 0:
        raise ConfigurationError("n_steps must be >= 0")
    for obs in observers:
        start = getattr(obs, "on_start", None)
        if start is not None:
            start(world)
    for _ in range(n_steps):
        step(world)
        if perturbations:
            world.last_perturbations = apply_perturbations(world, perturbations)
        for obs in observers:
            try:
                obs.on_step(world)
            except Exception as exc:
                raise SimulationError(
                    f"observer {type(obs).__name__} failed at step {world.step_count}: {exc}"
                ) from exc
    for obs in observers:
        finish = getattr(obs, "on_finish", None)
        if finish is not None:
            finish(world)
    return world
