"""Fused interaction kernel.

The engine gathers particle state into grid order (cell-mates adjacent in
memory) and hands the kernel plain segment ranges; the kernel runs one
sequential pass over candidate pairs and accumulates, per particle:
cohesion/alignment/separation sums and neighbor counts (each side gated by
its own perception radius), same-type neighbor counts for the majority
competition rule, and collision events. Iteration order is a pure function
of the grid layout, so float accumulation is bit-reproducible; fastmath
stays off on purpose. The pair body is spelled out inline: a helper
function here costs a real call per candidate pair (~20x slower).

The body is written once for both dimensionalities: the third axis
contributes an exact 0.0 in 2D, so a 2D run embedded in a 3D world (z = 0)
reproduces the 2D coordinates bit-exactly. A degenerate one-cell grid turns
candidate enumeration into the full O(n^2) scan, which serves as the
brute-force reference in benchmarks.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def interactions(
    starts,
    counts,
    cell_pair_a,
    cell_pair_b,
    pos,
    vel,
    type_ids,
    r_perc,
    extent,
    toroidal,
    eps,
    coll_r2,
    want_majority,
    ev_cap,
):
    """All inputs and outputs are in grid (sorted-by-cell) order.

    Returns (coh_sum, vel_sum, sep_sum, neighbor_count, same_type_count,
    event_i, event_j, overflow). Events are pairs with dist < sqrt(coll_r2);
    overflow reports a full event buffer (caller retries with a larger one).
    """
    n, d = pos.shape
    coh = np.zeros((n, d), dtype=np.float64)
    vsum = np.zeros((n, d), dtype=np.float64)
    sep = np.zeros((n, d), dtype=np.float64)
    cnt = np.zeros(n, dtype=np.int64)
    mcount = np.zeros(n, dtype=np.int64)
    ev_i = np.empty(ev_cap, dtype=np.int64)
    ev_j = np.empty(ev_cap, dtype=np.int64)
    n_ev = 0
    overflow = False
    e0 = extent[0]
    e1 = extent[1]
    e2 = extent[2] if d == 3 else 0.0
    n_cells = starts.shape[0]
    n_cross = cell_pair_a.shape[0]

    # block 0..n_cells-1: pairs within one cell; blocks after: cross-cell
    for blk in range(n_cells + n_cross):
        if blk < n_cells:
            sa = starts[blk]
            ea = sa + counts[blk]
            sb = sa
            eb = ea
            same_cell = True
        else:
            p = blk - n_cells
            ka = cell_pair_a[p]
            kb = cell_pair_b[p]
            sa = starts[ka]
            ea = sa + counts[ka]
            sb = starts[kb]
            eb = sb + counts[kb]
            same_cell = False
        for i in range(sa, ea):
            xi0 = pos[i, 0]
            xi1 = pos[i, 1]
            vi0 = vel[i, 0]
            vi1 = vel[i, 1]
            ri2 = r_perc[i] * r_perc[i]
            ti = type_ids[i]
            j_start = i + 1 if same_cell else sb
            for j in range(j_start, eb):
                dx0 = pos[j, 0] - xi0
                dx1 = pos[j, 1] - xi1
                dx2 = 0.0
                if toroidal:
                    if dx0 > 0.5 * e0:
                        dx0 -= e0
                    elif dx0 < -0.5 * e0:
                        dx0 += e0
                    if dx1 > 0.5 * e1:
                        dx1 -= e1
                    elif dx1 < -0.5 * e1:
                        dx1 += e1
                if d == 3:
                    dx2 = pos[j, 2] - pos[i, 2]
                    if toroidal:
                        if dx2 > 0.5 * e2:
                            dx2 -= e2
                        elif dx2 < -0.5 * e2:
                            dx2 += e2
                d2 = dx0 * dx0 + dx1 * dx1 + dx2 * dx2
                rj = r_perc[j]
                within_i = d2 < ri2
                within_j = d2 < rj * rj
                if within_i or within_j:
                    inv = 1.0 / (d2 if d2 > eps else eps)
                    same_type = ti == type_ids[j]
                    if within_i:
                        cnt[i] += 1
                        coh[i, 0] += dx0
                        coh[i, 1] += dx1
                        vsum[i, 0] += vel[j, 0]
                        vsum[i, 1] += vel[j, 1]
                        sep[i, 0] -= dx0 * inv
                        sep[i, 1] -= dx1 * inv
                        if d == 3:
                            coh[i, 2] += dx2
                            vsum[i, 2] += vel[j, 2]
                            sep[i, 2] -= dx2 * inv
                        if want_majority and same_type:
                            mcount[i] += 1
                    if within_j:
                        cnt[j] += 1
                        coh[j, 0] -= dx0
                        coh[j, 1] -= dx1
                        vsum[j, 0] += vi0
                        vsum[j, 1] += vi1
                        sep[j, 0] += dx0 * inv
                        sep[j, 1] += dx1 * inv
                        if d == 3:
                            coh[j, 2] -= dx2
                            vsum[j, 2] += vel[i, 2]
                            sep[j, 2] += dx2 * inv
                        if want_majority and same_type:
                            mcount[j] += 1
                if coll_r2 > 0.0 and d2 < coll_r2:
                    if n_ev < ev_cap:
                        ev_i[n_ev] = i
                        ev_j[n_ev] = j
                        n_ev += 1
                    else:
                        overflow = True
    return coh, vsum, sep, cnt, mcount, ev_i[:n_ev].copy(), ev_j[:n_ev].copy(), overflow
