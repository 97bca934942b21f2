"""Versioned binary world snapshots and the replay state hash.

Layout (little-endian): magic ``SWCS``, u32 format version, u32 header
length, header JSON (config + step count), u32 recipe count then
length-prefixed canonical recipe texts, u32 type count then 8 f64 per type,
u32 particle count, then positions (n*d f64), velocities (n*d f64),
type ids (n u32), carried-recipe indices (n u32).

load(save(w)) reproduces the world exactly and save(load(b)) == b, so two
runs are byte-comparable through their snapshots. The state hash is a
64-bit blake2b over the canonical particle serialization.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .engine import World, WorldConfig, new_world
from .errors import SimulationError
from .recipe import KineticParams, MutationConfig, parse_recipe, serialize_recipe

MAGIC = b"SWCS"
FORMAT_VERSION = 1


def config_to_dict(cfg: WorldConfig) -> dict:
    return {
        "dimensionality": cfg.dimensionality,
        "extent": list(cfg.extent),
        "boundary": cfg.boundary,
        "seed": cfg.seed,
        "swarm_class": cfg.swarm_class.value,
        "competition": cfg.competition.value if cfg.competition else None,
        "mutation": {
            "p_point": cfg.mutation.p_point,
            "point_sigma_rel": cfg.mutation.point_sigma_rel,
            "p_duplicate_entry": cfg.mutation.p_duplicate_entry,
            "p_delete_entry": cfg.mutation.p_delete_entry,
            "p_resize_count": cfg.mutation.p_resize_count,
            "count_resize_rel": cfg.mutation.count_resize_rel,
        },
        "collision_radius": cfg.collision_radius,
        "p_differentiate": cfg.p_differentiate,
        "info_share_radius": cfg.info_share_radius,
        "steer_magnitude": cfg.steer_magnitude,
        "epsilon": cfg.epsilon,
        "max_population": cfg.max_population,
    }


def config_from_dict(d: dict) -> WorldConfig:
    d = dict(d)
    if "mutation" in d and isinstance(d["mutation"], dict):
        d["mutation"] = MutationConfig(**d["mutation"])
    return WorldConfig(**d)


def canonical_particle_bytes(world: World) -> bytes:
    """Deterministic serialization of the particle state (hash input)."""
    recipe_index, _ = _recipe_table(world)
    parts = [
        struct.pack("<QI", world.step_count & 0xFFFFFFFFFFFFFFFF, world.n_particles),
        np.ascontiguousarray(world.positions, dtype="<f8").tobytes(),
        np.ascontiguousarray(world.velocities, dtype="<f8").tobytes(),
        np.ascontiguousarray(world.type_ids, dtype="<u4").tobytes(),
        recipe_index.astype("<u4").tobytes(),
    ]
    return b"".join(parts)


def state_hash(world: World) -> int:
    """64-bit hash of the canonical particle serialization."""
    digest = hashlib.blake2b(canonical_particle_bytes(world), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def _recipe_table(world: World):
    """Carried recipes deduplicated by canonical text, first-appearance order."""
    index = np.empty(world.n_particles, dtype=np.int64)
    table: list[str] = []
    seen: dict[str, int] = {}
    cache: dict[int, str] = {}
    for k, recipe in enumerate(world.carried):
        text = cache.get(id(recipe))
        if text is None:
            text = serialize_recipe(recipe)
            cache[id(recipe)] = text
        idx = seen.get(text)
        if idx is None:
            idx = len(table)
            seen[text] = idx
            table.append(text)
        index[k] = idx
    return index, table


def save_world(world: World) -> bytes:
    header = json.dumps(
        {
            "format_version": FORMAT_VERSION,
            "config": config_to_dict(world.config),
            "step_count": world.step_count,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    recipe_index, table = _recipe_table(world)
    out = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(header)), header]
    out.append(struct.pack("<I", len(table)))
    for text in table:
        raw = text.encode("utf-8")
        out.append(struct.pack("<I", len(raw)))
        out.append(raw)
    types = world.types.all_params()
    out.append(struct.pack("<I", len(types)))
    for p in types:
        out.append(struct.pack("<8d", *p.as_tuple()))
    out.append(struct.pack("<I", world.n_particles))
    out.append(np.ascontiguousarray(world.positions, dtype="<f8").tobytes())
    out.append(np.ascontiguousarray(world.velocities, dtype="<f8").tobytes())
    out.append(np.ascontiguousarray(world.type_ids, dtype="<u4").tobytes())
    out.append(recipe_index.astype("<u4").tobytes())
    return b"".join(out)


class SnapshotError(SimulationError):
    pass


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise SnapshotError("snapshot truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_world(data: bytes) -> World:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise SnapshotError("not a swarm snapshot (bad magic)")
    version, header_len = struct.unpack("<II", r.take(8))
    if version != FORMAT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    header = json.loads(r.take(header_len).decode("utf-8"))
    world = new_world(config_from_dict(header["config"]))
    world.step_count = int(header["step_count"])

    recipes = []
    for _ in range(r.u32()):
        recipes.append(parse_recipe(r.take(r.u32()).decode("utf-8")))
    n_types = r.u32()
    for _ in range(n_types):
        world.types.id_for(KineticParams(*struct.unpack("<8d", r.take(64))))
    n = r.u32()
    d = world.config.dimensionality
    world.positions = np.frombuffer(r.take(n * d * 8), dtype="<f8").reshape(n, d).copy()
    world.velocities = np.frombuffer(r.take(n * d * 8), dtype="<f8").reshape(n, d).copy()
    world.type_ids = np.frombuffer(r.take(n * 4), dtype="<u4").astype(np.int64)
    recipe_index = np.frombuffer(r.take(n * 4), dtype="<u4")
    world.carried = [recipes[i] for i in recipe_index]
    world.params = np.array(
        [world.types.params_of(int(t)).as_tuple() for t in world.type_ids],
        dtype=np.float64,
    ).reshape(n, 8)
    return world
