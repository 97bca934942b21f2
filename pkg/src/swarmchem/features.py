"""Behavior quantification: a 24-feature summary of one run's trajectory.

A trajectory window is a sequence of sampled frames (positions, velocities,
active types, plus event counters between samples). Features split into a
structural group (cluster statistics and proximity-graph measures at the
link radius, spatial spread, type composition and segregation) and a
dynamic group (motion statistics, change rates, event and turnover rates).
Frame-wise features are averaged over the window; rates use consecutive
samples or the window ends.

The registry deliberately avoids stacking redundant dispersion measures
(spread proxies are mutually near-duplicates and would multiply-count one
axis of variation in distance-based diversity estimates); proximity-graph
quantities (link density, same-type neighbor fraction) are bounded and
carry the structural information instead.

Distance-based quantities use boundary-aware (minimum-image) distances;
centroid-based quantities (gyration, angular momentum) use raw coordinates
and are exact as long as the swarm does not wrap around a toroidal seam.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clusters import cluster_members, connected_components
from .neighbors import min_image

FEATURE_NAMES = (
    "cluster_count",
    "same_type_neighbor_fraction",
    "dominant_type_fraction",
    "largest_cluster_fraction",
    "radius_of_gyration",
    "link_density",
    "type_turnover",
    "mean_pairwise_distance",
    "local_density_variance",
    "distinct_type_count",
    "type_entropy",
    "mean_speed",
    "speed_variance",
    "polarization",
    "angular_momentum",
    "centroid_drift_rate",
    "mean_turning_rate",
    "mean_squared_speed",
    "cluster_count_change_rate",
    "gyration_change_rate",
    "collision_event_rate",
    "rediff_event_rate",
    "largest_cluster_persistence",
    "within_cluster_polarization",
)

N_FEATURES = len(FEATURE_NAMES)


@dataclass
class TrajectoryWindow:
    steps: np.ndarray
    positions: np.ndarray  # (k, n, d)
    velocities: np.ndarray  # (k, n, d)
    type_ids: np.ndarray  # (k, n)
    extent: np.ndarray
    toroidal: bool
    collision_counts: np.ndarray  # events since the previous sample
    rediff_counts: np.ndarray
    link_radius: float = 30.0

    @property
    def n_frames(self) -> int:
        return len(self.steps)

    @property
    def n_particles(self) -> int:
        return self.positions.shape[1]


@dataclass
class BehaviorVector:
    values: np.ndarray
    names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if len(self.values) != len(self.names):
            raise ValueError("behavior vector length does not match feature registry")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("behavior vector contains non-finite entries")


class _Frame:
    """Per-frame derived quantities, computed once."""

    def __init__(self, pos, vel, types, extent, toroidal, link_radius):
        n, d = pos.shape
        self.pos = pos
        self.vel = vel
        self.types = types
        self.speeds = np.linalg.norm(vel, axis=1)
        self.centroid = pos.mean(axis=0)
        diff = pos[:, None, :] - pos[None, :, :]
        if toroidal:
            diff = min_image(diff, extent)
        self.dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(self.dist, np.inf)
        self.labels = connected_components(pos, link_radius, extent, toroidal)
        self.cluster_sizes = np.bincount(self.labels)
        self.link_counts = (self.dist < link_radius).sum(axis=1)

    def unit_velocities(self):
        ok = self.speeds > 1e-12
        unit = np.zeros_like(self.vel)
        unit[ok] = self.vel[ok] / self.speeds[ok, None]
        return unit

    def polarization(self):
        return float(np.linalg.norm(self.unit_velocities().sum(axis=0))) / len(self.pos)

    def gyration(self):
        rel = self.pos - self.centroid
        return float(np.sqrt(np.einsum("ij,ij->i", rel, rel).mean()))


def compute_behavior_vector(window: TrajectoryWindow) -> BehaviorVector:
    """Evaluate the 24-feature registry on a trajectory window (>= 2 frames)."""
    k = window.n_frames
    if k < 2:
        raise ValueError("trajectory window needs at least 2 frames")
    n = window.n_particles
    if n == 0:
        raise ValueError("trajectory window has no particles")
    extent = np.asarray(window.extent, dtype=np.float64)

    frames = [
        _Frame(
            window.positions[t],
            window.velocities[t],
            window.type_ids[t],
            extent,
            window.toroidal,
            window.link_radius,
        )
        for t in range(k)
    ]
    steps = np.asarray(window.steps, dtype=np.float64)
    span = max(float(steps[-1] - steps[0]), 1.0)
    gaps = np.maximum(np.diff(steps), 1.0)

    cluster_counts = np.array([len(f.cluster_sizes) for f in frames], dtype=np.float64)
    gyrations = np.array([f.gyration() for f in frames])

    def frame_mean(fn):
        return float(np.mean([fn(f) for f in frames]))

    def link_density(f):
        if n < 2:
            return 0.0
        linked = f.dist < window.link_radius
        return float(linked.sum()) / (n * (n - 1))

    def same_type_fraction(f):
        linked = f.dist < window.link_radius
        counts = linked.sum(axis=1)
        has = counts > 0
        if not np.any(has):
            return 1.0
        same = linked & (f.types[:, None] == f.types[None, :])
        return float((same.sum(axis=1)[has] / counts[has]).mean())

    def type_turnover():
        return float(np.mean(frames[0].types != frames[-1].types))

    def mean_pairwise(f):
        if n < 2:
            return 0.0
        iu = np.triu_indices(n, k=1)
        return float(f.dist[iu].mean())

    def type_entropy(f):
        counts = np.bincount(f.types)
        p = counts[counts > 0] / n
        return float(-(p * np.log(p)).sum())

    def angular_momentum(f):
        rel = f.pos - f.centroid
        if f.pos.shape[1] == 2:
            cross = rel[:, 0] * f.vel[:, 1] - rel[:, 1] * f.vel[:, 0]
            return abs(float(cross.mean()))
        cross = np.cross(rel, f.vel)
        return float(np.linalg.norm(cross.mean(axis=0)))

    def turning_rate():
        total = 0.0
        samples = 0
        for t in range(k - 1):
            a, b = frames[t], frames[t + 1]
            ok = (a.speeds > 1e-12) & (b.speeds > 1e-12)
            if not np.any(ok):
                continue
            cosang = np.einsum("ij,ij->i", a.vel[ok], b.vel[ok]) / (
                a.speeds[ok] * b.speeds[ok]
            )
            ang = np.arccos(np.clip(cosang, -1.0, 1.0))
            total += float((ang / gaps[t]).sum())
            samples += int(ok.sum())
        return total / samples if samples else 0.0

    def largest_cluster_set(f):
        top = int(np.argmax(f.cluster_sizes))
        return set(np.nonzero(f.labels == top)[0].tolist())

    def persistence():
        first = largest_cluster_set(frames[0])
        last = largest_cluster_set(frames[-1])
        union = first | last
        return len(first & last) / len(union) if union else 0.0

    def within_cluster_polarization(f):
        vals = []
        unit = f.unit_velocities()
        for members in cluster_members(f.labels):
            if len(members) < 2:
                continue
            vals.append(float(np.linalg.norm(unit[members].sum(axis=0))) / len(members))
        return float(np.mean(vals)) if vals else 0.0

    centroid_drift = float(np.linalg.norm(frames[-1].centroid - frames[0].centroid)) / span
    events_span = float(steps[-1] - steps[0])
    collision_rate = float(window.collision_counts[1:].sum()) / max(events_span, 1.0) / n
    rediff_rate = float(window.rediff_counts[1:].sum()) / max(events_span, 1.0) / n

    values = np.array(
        [
            float(cluster_counts.mean()),
            frame_mean(same_type_fraction),
            frame_mean(lambda f: float(np.bincount(f.types).max()) / n),
            frame_mean(lambda f: float(f.cluster_sizes.max()) / n),
            float(gyrations.mean()),
            frame_mean(link_density),
            type_turnover(),
            frame_mean(mean_pairwise),
            frame_mean(lambda f: float(np.var(f.link_counts))),
            frame_mean(lambda f: float(len(np.unique(f.types)))),
            frame_mean(type_entropy),
            frame_mean(lambda f: float(f.speeds.mean())),
            frame_mean(lambda f: float(np.var(f.speeds))),
            frame_mean(lambda f: f.polarization()),
            frame_mean(angular_momentum),
            centroid_drift,
            turning_rate(),
            frame_mean(lambda f: float((f.speeds**2).mean())),
            float((np.abs(np.diff(cluster_counts)) / gaps).mean()),
            float((np.abs(np.diff(gyrations)) / gaps).mean()),
            collision_rate,
            rediff_rate,
            persistence(),
            frame_mean(within_cluster_polarization),
        ]
    )
    return BehaviorVector(values)


@dataclass
class TrajectoryRecorder:
    """Run observer that samples frames for behavior analysis.

    Keeps every sample_every-th frame plus event counts accumulated since
    the previous sample; ``window(n_steps)`` returns the most recent
    n_steps worth of samples as a TrajectoryWindow.
    """

    sample_every: int = 5
    link_radius: float = 30.0
    _steps: list = field(default_factory=list)
    _positions: list = field(default_factory=list)
    _velocities: list = field(default_factory=list)
    _type_ids: list = field(default_factory=list)
    _collisions: list = field(default_factory=list)
    _rediffs: list = field(default_factory=list)
    _pending_collisions: int = 0
    _pending_rediffs: int = 0
    _extent: np.ndarray | None = None
    _toroidal: bool = True

    def on_start(self, world):
        self._extent = world.config.extent_array
        self._toroidal = world.config.toroidal
        self._snapshot(world)

    def on_step(self, world):
        self._pending_collisions += world.last_collision_events
        self._pending_rediffs += world.last_rediff_events
        if world.step_count % self.sample_every == 0:
            self._snapshot(world)

    def _snapshot(self, world):
        self._steps.append(world.step_count)
        self._positions.append(world.positions.copy())
        self._velocities.append(world.velocities.copy())
        self._type_ids.append(world.type_ids.copy())
        self._collisions.append(self._pending_collisions)
        self._rediffs.append(self._pending_rediffs)
        self._pending_collisions = 0
        self._pending_rediffs = 0

    def window(self, last_steps: int | None = None) -> TrajectoryWindow:
        if not self._steps:
            raise ValueError("recorder has no samples")
        start = 0
        if last_steps is not None:
            cutoff = self._steps[-1] - last_steps
            while start < len(self._steps) - 1 and self._steps[start] < cutoff:
                start += 1
        return TrajectoryWindow(
            steps=np.asarray(self._steps[start:]),
            positions=np.stack(self._positions[start:]),
            velocities=np.stack(self._velocities[start:]),
            type_ids=np.stack(self._type_ids[start:]),
            extent=self._extent,
            toroidal=self._toroidal,
            collision_counts=np.asarray(self._collisions[start:]),
            rediff_counts=np.asarray(self._rediffs[start:]),
            link_radius=self.link_radius,
        )
