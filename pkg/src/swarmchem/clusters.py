"""Connected-component clustering of particle positions.

Components are computed over the graph whose edges join particles closer
than the link radius (boundary-aware). Used by the structural behavior
features and by object harvesting.
"""

from __future__ import annotations

import numpy as np

from .neighbors import build_index


def _find(parent: np.ndarray, i: int) -> int:
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:  # path compression
        parent[i], i = root, parent[i]
    return root


def connected_components(
    positions: np.ndarray, link_radius: float, extent, toroidal: bool
) -> np.ndarray:
    """Label particles by connected component at the link radius.

    Labels are consecutive integers starting at 0, assigned in order of each
    component's first (lowest-index) member, so the labeling is deterministic.
    """
    n = len(positions)
    labels = np.empty(n, dtype=np.int64)
    if n == 0:
        return labels
    parent = np.arange(n)
    if link_radius > 0 and n > 1:
        index = build_index(positions, link_radius, np.asarray(extent, float), toroidal)
        i_arr, j_arr, _, _ = index.pairs(link_radius)
        for a, b in zip(i_arr.tolist(), j_arr.tolist()):
            ra, rb = _find(parent, a), _find(parent, b)
            if ra != rb:
                if ra < rb:  # keep the smaller index as root
                    parent[rb] = ra
                else:
                    parent[ra] = rb
    next_label = 0
    root_label: dict[int, int] = {}
    for i in range(n):
        r = _find(parent, i)
        if r not in root_label:
            root_label[r] = next_label
            next_label += 1
        labels[i] = root_label[r]
    return labels


def cluster_members(labels: np.ndarray) -> list[np.ndarray]:
    """Member index arrays per label, in label order."""
    if len(labels) == 0:
        return []
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    bounds = np.nonzero(np.diff(sorted_labels))[0] + 1
    return [np.sort(part) for part in np.split(order, bounds)]


def largest_cluster_fraction(
    positions: np.ndarray, link_radius: float, extent, toroidal: bool
) -> float:
    """Fraction of particles in the largest connected cluster."""
    n = len(positions)
    if n == 0:
        return 0.0
    labels = connected_components(positions, link_radius, extent, toroidal)
    counts = np.bincount(labels)
    return float(counts.max()) / n
