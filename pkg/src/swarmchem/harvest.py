"""Automated object harvesting.

Persistent swarm patterns (connected clusters of at least min_object_size
particles) are tracked across observations by maximal member overlap. A
previous object matched by two or more current clusters has fissioned: it
is closed and the clusters become its children (parent linkage preserved).
A cluster overlapping several previous objects continues the one with the
largest overlap; the others are treated as absorbed. Objects that persist
for min_lifetime steps are emitted with a recipe reconstructed from their
members' active types.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clusters import cluster_members, connected_components
from .neighbors import min_image
from .recipe import Recipe


@dataclass
class TrackedObject:
    object_id: int
    members: set[int]
    first_seen: int
    last_seen: int
    parent_id: int | None = None
    overlaps: list[float] = field(default_factory=list)  # consecutive Jaccard
    member_types: np.ndarray | None = None
    centroid: np.ndarray | None = None
    mean_velocity: np.ndarray | None = None
    alive: bool = True

    @property
    def lifetime(self) -> int:
        return self.last_seen - self.first_seen

    @property
    def stability_score(self) -> float:
        return float(np.mean(self.overlaps)) if self.overlaps else 1.0


@dataclass(frozen=True)
class HarvestedObject:
    object_id: int
    recipe: Recipe
    member_count: int
    centroid: tuple[float, ...]
    mean_velocity: tuple[float, ...]
    first_seen: int
    last_seen: int
    stability_score: float
    parent_id: int | None


class ObjectTracker:
    """Cluster identity tracking across a simulation run."""

    def __init__(self, link_radius: float = 30.0, min_object_size: int = 10,
                 min_lifetime: int = 50):
        self.link_radius = link_radius
        self.min_object_size = min_object_size
        self.min_lifetime = min_lifetime
        self._next_id = 0
        self.live: dict[int, TrackedObject] = {}
        self.closed: list[TrackedObject] = []

    def observe(self, world) -> None:
        """Match current clusters against tracked objects and update identities."""
        step = world.step_count
        cfg = world.config
        labels = connected_components(
            world.positions, self.link_radius, cfg.extent_array, cfg.toroidal
        )
        clusters = [m for m in cluster_members(labels) if len(m) >= self.min_object_size]
        clusters.sort(key=lambda m: (-len(m), int(m[0])))

        matches: dict[int, list[int]] = {}  # prev object id -> cluster indices
        unmatched: list[int] = []
        for ci, members in enumerate(clusters):
            mset = set(members.tolist())
            best_id, best_overlap = None, 0
            for oid in sorted(self.live):
                overlap = len(self.live[oid].members & mset)
                if overlap > best_overlap:
                    best_id, best_overlap = oid, overlap
            if best_id is None:
                unmatched.append(ci)
            else:
                matches.setdefault(best_id, []).append(ci)

        claimed: set[int] = set()
        for oid in sorted(matches):
            obj = self.live[oid]
            cluster_ids = matches[oid]
            if len(cluster_ids) == 1:
                ci = cluster_ids[0]
                mset = set(clusters[ci].tolist())
                union = obj.members | mset
                obj.overlaps.append(len(obj.members & mset) / len(union))
                obj.members = mset
                obj.last_seen = step
                self._refresh(obj, clusters[ci], world)
                claimed.add(oid)
            else:
                # fission: close the parent, every matched cluster is a child
                for ci in cluster_ids:
                    child = self._new_object(clusters[ci], step, world, parent_id=oid)
                    self.live[child.object_id] = child
                obj.alive = False
                self.closed.append(obj)
                del self.live[oid]
                claimed.add(oid)

        for oid in [o for o in list(self.live) if o not in claimed and self.live[o].last_seen < step]:
            obj = self.live.pop(oid)
            obj.alive = False
            self.closed.append(obj)

        for ci in unmatched:
            obj = self._new_object(clusters[ci], step, world, parent_id=None)
            self.live[obj.object_id] = obj

    def _new_object(self, members: np.ndarray, step: int, world, parent_id) -> TrackedObject:
        obj = TrackedObject(
            object_id=self._next_id,
            members=set(members.tolist()),
            first_seen=step,
            last_seen=step,
            parent_id=parent_id,
        )
        self._next_id += 1
        self._refresh(obj, members, world)
        return obj

    def _refresh(self, obj: TrackedObject, members: np.ndarray, world) -> None:
        obj.member_types = world.type_ids[members].copy()
        pos = world.positions[members]
        anchor = pos[0]
        rel = pos - anchor
        if world.config.toroidal:
            rel = min_image(rel, world.config.extent_array)
        centroid = anchor + rel.mean(axis=0)
        if world.config.toroidal:
            centroid = np.mod(centroid, world.config.extent_array)
        obj.centroid = centroid
        obj.mean_velocity = world.velocities[members].mean(axis=0)

    def _reconstruct_recipe(self, obj: TrackedObject, world) -> Recipe:
        counts = {}
        for tid in obj.member_types.tolist():
            counts[tid] = counts.get(tid, 0) + 1
        entries = tuple(
            (count, world.types.params_of(tid)) for tid, count in sorted(counts.items())
        )
        return Recipe(entries)

    def emit(self, world) -> list[HarvestedObject]:
        """Objects (live or closed) that persisted at least min_lifetime steps."""
        out = []
        for obj in sorted(
            list(self.live.values()) + self.closed, key=lambda o: o.object_id
        ):
            if obj.lifetime < self.min_lifetime:
                continue
            out.append(
                HarvestedObject(
                    object_id=obj.object_id,
                    recipe=self._reconstruct_recipe(obj, world),
                    member_count=len(obj.members),
                    centroid=tuple(float(x) for x in obj.centroid),
                    mean_velocity=tuple(float(x) for x in obj.mean_velocity),
                    first_seen=obj.first_seen,
                    last_seen=obj.last_seen,
                    stability_score=obj.stability_score,
                    parent_id=obj.parent_id,
                )
            )
        return out


def harvest_objects(world, tracker: ObjectTracker) -> list[HarvestedObject]:
    """Observe the current world state and return qualifying objects."""
    tracker.observe(world)
    return tracker.emit(world)


class HarvestObserver:
    """Run observer wrapping an ObjectTracker at a fixed observation interval."""

    def __init__(self, tracker: ObjectTracker, interval: int = 10):
        self.tracker = tracker
        self.interval = interval

    def on_start(self, world):
        self.tracker.observe(world)

    def on_step(self, world):
        if world.step_count % self.interval == 0:
            self.tracker.observe(world)
