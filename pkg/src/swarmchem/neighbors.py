"""Uniform-grid neighbor index.

Particles are binned into a sparse uniform grid with cell edge at least the
largest interaction radius present, so every pair within that radius lies in
the same or an adjacent cell. Pair enumeration is fully vectorized: cells are
sorted, unordered cell pairs are deduplicated (wrap-around on small toroidal
grids collapses offsets, so adjacency is computed as an explicit cell-pair
set), and particle pairs are generated with repeat/arange segment arithmetic.

Queries respect the boundary rule: toroidal worlds use minimum-image
displacements, open worlds plain differences. Results are identical to a
brute-force O(n^2) scan for any query radius up to the build radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def min_image(dx: np.ndarray, extent: np.ndarray) -> np.ndarray:
    """Wrap displacement vectors into the minimum-image convention."""
    return dx - extent * np.round(dx / extent)


def displacement(
    from_pos: np.ndarray, to_pos: np.ndarray, extent: np.ndarray, toroidal: bool
) -> np.ndarray:
    dx = to_pos - from_pos
    if toroidal:
        dx = min_image(dx, extent)
    return dx


@dataclass
class NeighborIndex:
    """Sparse uniform grid over the world extent."""

    positions: np.ndarray
    extent: np.ndarray
    toroidal: bool
    max_radius: float
    cells_per_axis: np.ndarray = field(init=False)
    _order: np.ndarray = field(init=False)
    _starts: np.ndarray = field(init=False)
    _counts: np.ndarray = field(init=False)
    _unique_cells: np.ndarray = field(init=False)
    _cell_pairs: tuple[np.ndarray, np.ndarray] = field(init=False)

    def __post_init__(self):
        if self.max_radius <= 0:
            raise ValueError("max_radius must be > 0")
        pos = np.asarray(self.positions, dtype=np.float64)
        self.positions = pos
        self.extent = np.asarray(self.extent, dtype=np.float64)
        d = pos.shape[1]
        # bigger cells are always safe; cap the axis resolution so linear
        # cell ids stay small even for tiny query radii
        self.cells_per_axis = np.clip(
            (self.extent // self.max_radius).astype(np.int64), 1, 1024
        )
        cell_edge = self.extent / self.cells_per_axis
        coords = np.clip(
            (pos / cell_edge).astype(np.int64), 0, self.cells_per_axis - 1
        )
        linear = coords[:, 0]
        for a in range(1, d):
            linear = linear * self.cells_per_axis[a] + coords[:, a]
        self._order = np.argsort(linear, kind="stable")
        sorted_linear = linear[self._order]
        self._unique_cells, self._starts, self._counts = np.unique(
            sorted_linear, return_index=True, return_counts=True
        )
        self._cell_pairs = self._adjacent_cell_pairs(d)

    def _adjacent_cell_pairs(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        """Unordered pairs (a, b) of occupied-cell indices that are adjacent."""
        m = self.cells_per_axis
        k = len(self._unique_cells)
        if k == 0:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        # decode unique linear ids back to coords
        rem = self._unique_cells.copy()
        coords = np.empty((k, d), dtype=np.int64)
        for a in range(d - 1, -1, -1):
            coords[:, a] = rem % m[a]
            rem //= m[a]
        # half-space offsets: first nonzero component positive
        half = []
        for off in np.ndindex(*([3] * d)):
            delta = tuple(o - 1 for o in off)
            for c in delta:
                if c > 0:
                    half.append(delta)
                    break
                if c < 0:
                    break
        pairs_a: list[np.ndarray] = []
        pairs_b: list[np.ndarray] = []
        for delta in half:
            nb = coords + np.asarray(delta, dtype=np.int64)
            if self.toroidal:
                nb = nb % m
                valid = np.ones(k, dtype=bool)
            else:
                valid = np.all((nb >= 0) & (nb < m), axis=1)
            lin = nb[:, 0]
            for a in range(1, d):
                lin = lin * m[a] + nb[:, a]
            src = np.nonzero(valid)[0]
            lin = lin[valid]
            loc = np.searchsorted(self._unique_cells, lin)
            loc_ok = (loc < k) & (self._unique_cells[np.minimum(loc, k - 1)] == lin)
            pairs_a.append(src[loc_ok])
            pairs_b.append(loc[loc_ok])
        if pairs_a:
            a = np.concatenate(pairs_a)
            b = np.concatenate(pairs_b)
            keep = a != b  # wrap on tiny grids can map a cell onto itself
            a, b = a[keep], b[keep]
            lo = np.minimum(a, b)
            hi = np.maximum(a, b)
            uniq = np.unique(lo * np.int64(k) + hi)
            return (uniq // k).astype(np.int64), (uniq % k).astype(np.int64)
        empty = np.empty(0, dtype=np.int64)
        return empty, empty

    def _cross_segment_pairs(
        self, seg_a: np.ndarray, seg_b: np.ndarray, same: bool
    ) -> tuple[np.ndarray, np.ndarray]:
        ca = self._counts[seg_a]
        cb = self._counts[seg_b]
        sizes = ca * cb
        total = int(sizes.sum())
        if total == 0:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        seg = np.repeat(np.arange(len(sizes)), sizes)
        base = np.zeros(len(sizes), dtype=np.int64)
        np.cumsum(sizes[:-1], out=base[1:])
        local = np.arange(total, dtype=np.int64) - base[seg]
        ia = local // cb[seg]
        jb = local - ia * cb[seg]
        if same:
            keep = ia < jb
            seg, ia, jb = seg[keep], ia[keep], jb[keep]
        i_sorted = self._starts[seg_a][seg] + ia
        j_sorted = self._starts[seg_b][seg] + jb
        return self._order[i_sorted], self._order[j_sorted]

    def grid_arrays(self):
        """Internal grid layout for the fused interaction kernel:
        (order, starts, counts, cell_pair_a, cell_pair_b)."""
        a, b = self._cell_pairs
        return self._order, self._starts, self._counts, a, b

    def pairs(
        self, radius: float | None = None
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """All unordered pairs (i, j) with dist < radius.

        Returns (I, J, DX, D2) where DX is the boundary-aware displacement
        from i to j and D2 the squared distance. radius defaults to the
        build radius and must not exceed it.
        """
        r = self.max_radius if radius is None else radius
        if r > self.max_radius * (1 + 1e-12):
            raise ValueError(f"query radius {r} exceeds index radius {self.max_radius}")
        all_cells = np.arange(len(self._unique_cells), dtype=np.int64)
        i_same, j_same = self._cross_segment_pairs(all_cells, all_cells, same=True)
        a, b = self._cell_pairs
        i_cross, j_cross = self._cross_segment_pairs(a, b, same=False)
        i_all = np.concatenate([i_same, i_cross])
        j_all = np.concatenate([j_same, j_cross])
        dx = self.positions[j_all] - self.positions[i_all]
        if self.toroidal:
            dx = min_image(dx, self.extent)
        d2 = np.einsum("ij,ij->i", dx, dx)
        keep = d2 < r * r
        return i_all[keep], j_all[keep], dx[keep], d2[keep]

    def neighbors_of(self, i: int, radius: float | None = None) -> np.ndarray:
        """Indices q != i with dist(i, q) < radius, sorted ascending."""
        r = self.max_radius if radius is None else radius
        if r > self.max_radius * (1 + 1e-12):
            raise ValueError(f"query radius {r} exceeds index radius {self.max_radius}")
        d = self.positions.shape[1]
        m = self.cells_per_axis
        cell_edge = self.extent / m
        center = np.clip((self.positions[i] / cell_edge).astype(np.int64), 0, m - 1)
        k = len(self._unique_cells)
        candidates: list[np.ndarray] = []
        seen_cells: set[int] = set()
        for off in np.ndindex(*([3] * d)):
            nb = center + np.asarray(off, dtype=np.int64) - 1
            if self.toroidal:
                nb = nb % m
            elif np.any((nb < 0) | (nb >= m)):
                continue
            lin = int(nb[0])
            for a in range(1, d):
                lin = lin * int(m[a]) + int(nb[a])
            if lin in seen_cells:  # wrap on tiny grids collapses offsets
                continue
            seen_cells.add(lin)
            loc = int(np.searchsorted(self._unique_cells, lin))
            if loc < k and self._unique_cells[loc] == lin:
                s, c = self._starts[loc], self._counts[loc]
                candidates.append(self._order[s : s + c])
        if not candidates:
            return np.empty(0, dtype=np.int64)
        cand = np.concatenate(candidates)
        dx = self.positions[cand] - self.positions[i]
        if self.toroidal:
            dx = min_image(dx, self.extent)
        d2 = np.einsum("ij,ij->i", dx, dx)
        hit = cand[(d2 < r * r) & (cand != i)]
        return np.sort(hit)


def build_index(
    positions: np.ndarray, max_radius: float, extent: np.ndarray, toroidal: bool
) -> NeighborIndex:
    return NeighborIndex(positions, extent, toroidal, float(max_radius))
