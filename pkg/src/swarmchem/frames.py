"""Binary frame records for live streaming, and the type color mapping.

Frame layout (little-endian): u32 step, u32 count, then per particle one
u16 per axis (position quantized over the world extent; error at most
extent / 2^16 per axis) and u8 red, green, blue. Colors encode the three
principal rule strengths: red = cohesion, green = alignment,
blue = separation (capped for display).
"""

from __future__ import annotations

import struct

import numpy as np

from .recipe import DEFAULT_RANGES, KineticParams, ParamRanges

SEPARATION_DISPLAY_CAP = 20.0


def color_map(
    params: KineticParams,
    ranges: ParamRanges = DEFAULT_RANGES,
    separation_cap: float = SEPARATION_DISPLAY_CAP,
) -> tuple[int, int, int]:
    """{R, G, B} = {cohesion, alignment, separation}, scaled to 0..255."""
    red = params.w_cohesion / ranges.w_cohesion[1]
    green = params.w_alignment / ranges.w_alignment[1]
    blue = min(params.w_separation / separation_cap, 1.0)
    to_byte = lambda x: int(round(min(max(x, 0.0), 1.0) * 255))
    return (to_byte(red), to_byte(green), to_byte(blue))


def encode_frame(step: int, positions: np.ndarray, colors: np.ndarray, extent) -> bytes:
    """Pack one display frame; positions (n, d), colors (n, 3) uint8."""
    n, d = positions.shape
    extent = np.asarray(extent, dtype=np.float64)
    q = np.clip(np.round(positions / extent * 65535.0), 0, 65535).astype("<u2")
    record = np.empty((n, d * 2 + 3), dtype=np.uint8)
    record[:, : d * 2] = q.view(np.uint8).reshape(n, d * 2)
    record[:, d * 2 :] = colors
    return struct.pack("<II", step, n) + record.tobytes()


def decode_frame(data: bytes, dimensionality: int):
    """Unpack a frame into (step, unit_positions (n, d) in [0, 1], colors (n, 3))."""
    step, n = struct.unpack_from("<II", data, 0)
    d = dimensionality
    body = np.frombuffer(data, dtype=np.uint8, offset=8).reshape(n, d * 2 + 3)
    q = body[:, : d * 2].copy().view("<u2").reshape(n, d)
    positions = q.astype(np.float64) / 65535.0
    colors = body[:, d * 2 :].copy()
    return step, positions, colors


def world_colors(world) -> np.ndarray:
    """Per-particle display colors, cached per type id."""
    cache: dict[int, tuple[int, int, int]] = {}
    out = np.empty((world.n_particles, 3), dtype=np.uint8)
    for k, tid in enumerate(world.type_ids.tolist()):
        c = cache.get(tid)
        if c is None:
            c = color_map(world.types.params_of(tid))
            cache[tid] = c
        out[k] = c
    return out


def encode_world_frame(world) -> bytes:
    return encode_frame(
        world.step_count, world.positions, world_colors(world), world.config.extent_array
    )
