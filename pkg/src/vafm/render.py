"""Orthographic ray-marched height maps of occupancy grids.

The rotation argument is the object's rotation about the grid center. A
fixed camera looks down the world -z axis at an image plane spanning the
grid's circumscribing square (cube edge * sqrt(3)), so no orientation clips
the object; internally the rays are transformed by the inverse rotation
instead of resampling the grid. Each pixel records the distance from the far
plane to the first occupied sample along its ray (AFM topography semantics),
with 0 reserved for background.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, ShapeMismatch
from .views import Rotation
from .voxel import VoxelGrid

_STEP = 0.5  # marching step in voxel units (half a voxel edge)
_CHUNK = 64  # marching steps evaluated per vectorized block

SHADE_MODES = ("height-gray", "lambert")


@dataclass
class HeightMap:
    """Per-pixel height above the far plane, in world units; 0 = background."""

    values: np.ndarray

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass
class RgbImage:
    """8-bit RGB pixels, row-major top-to-bottom, shape (height, width, 3)."""

    pixels: np.ndarray

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def render_heightmap(
    grid: VoxelGrid, rotation: Rotation, resolution: int = 224
) -> HeightMap:
    """March one ray per pixel through the grid, front to back.

    Samples are taken every half voxel with nearest-neighbor occupancy
    lookup; the sample lattice is global (t = k * step from the image plane)
    so entry-point skipping cannot change which sample hits first.

    :raises ShapeMismatch: the grid is not cubic.
    """
    if not grid.is_cubic:
        raise ShapeMismatch(f"renderer needs a cubic grid, got {grid.dims}")
    if resolution < 1:
        raise InvalidConfig("resolution must be positive")
    n = grid.values.shape[0]
    pitch = grid.transform.pitch
    occupancy = np.ascontiguousarray(grid.values != 0).ravel()

    span = n * math.sqrt(3.0)  # image plane side and march length, voxel units
    half = span / 2.0
    center = n / 2.0
    rt = rotation.as_matrix().T  # inverse rotation, applied to the rays

    px = (np.arange(resolution) + 0.5) / resolution
    ax = (px - 0.5) * span
    ay = (0.5 - px) * span
    gx, gy = np.meshgrid(ax, ay, indexing="xy")  # gy varies along rows
    cam = np.stack([gx.ravel(), gy.ravel(), np.full(gx.size, half)], axis=1)
    origins = center + cam @ rt.T
    direction = rt @ np.array([0.0, 0.0, -1.0])

    # Slab intersection with the cube [0, n]^3 to clip the marched range.
    with np.errstate(divide="ignore", invalid="ignore"):
        t_a = (0.0 - origins) / direction
        t_b = (n - origins) / direction
    t_lo = np.minimum(t_a, t_b)
    t_hi = np.maximum(t_a, t_b)
    parallel = np.abs(direction) < 1e-15
    if parallel.any():
        inside = (origins >= 0.0) & (origins <= n)
        t_lo[:, parallel] = np.where(inside[:, parallel], -np.inf, np.inf)
        t_hi[:, parallel] = np.where(inside[:, parallel], np.inf, -np.inf)
    t_enter = t_lo.max(axis=1)
    t_exit = t_hi.min(axis=1)

    n_steps = int(math.ceil(span / _STEP)) + 1
    alive = t_exit >= np.maximum(t_enter, 0.0)
    # clamp to the lattice range before casting so missing rays
    # (t infinite) stay representable; they get an empty k range below
    t_enter_c = np.clip(t_enter, 0.0, span)
    t_exit_c = np.clip(t_exit, 0.0, span)
    k_lo = np.maximum(np.floor(t_enter_c / _STEP).astype(np.int64) - 1, 0)
    k_hi = np.minimum(np.ceil(t_exit_c / _STEP).astype(np.int64) + 1, n_steps - 1)
    k_hi = np.where(alive, k_hi, -1)

    t_hit = np.full(origins.shape[0], -1.0)
    for k0 in range(0, n_steps, _CHUNK):
        ks = np.arange(k0, min(k0 + _CHUNK, n_steps))
        sel = np.flatnonzero(alive & (k_lo <= ks[-1]) & (k_hi >= ks[0]))
        if sel.size == 0:
            if not (alive & (k_lo > ks[-1])).any():
                break
            continue
        ts = ks * _STEP
        pos = origins[sel, None, :] + ts[None, :, None] * direction[None, None, :]
        idx = np.floor(pos).astype(np.int64)
        in_bounds = ((idx >= 0) & (idx < n)).all(axis=2)
        flat = (idx[:, :, 0] * n + idx[:, :, 1]) * n + idx[:, :, 2]
        occ = np.zeros(in_bounds.shape, dtype=bool)
        occ[in_bounds] = occupancy[flat[in_bounds]]
        hit = occ.any(axis=1)
        if hit.any():
            first = occ[hit].argmax(axis=1)
            rows = sel[hit]
            t_hit[rows] = ts[first]
            alive[rows] = False

    heights = np.where(t_hit >= 0.0, (span - t_hit) * pitch, 0.0)
    return HeightMap(values=heights.reshape(resolution, resolution))


def shade(hm: HeightMap, mode: str = "height-gray") -> RgbImage:
    """Turn a height map into an 8-bit RGB image.

    height-gray: min-max normalize hit pixels into [30, 255] (a constant
    field maps to 255), background stays 0, gray replicated to 3 channels.
    lambert: central-difference normals lit by a single directional light
    from (1,1,1)/sqrt(3), grayscale diffuse over the hit footprint.
    """
    if mode not in SHADE_MODES:
        raise InvalidConfig(f"unknown shade mode {mode!r}")
    v = hm.values
    hits = v > 0
    gray = np.zeros(v.shape, dtype=np.uint8)
    if hits.any():
        if mode == "height-gray":
            vmin = v[hits].min()
            vmax = v[hits].max()
            if vmax == vmin:
                gray[hits] = 255
            else:
                scaled = 30.0 + (v[hits] - vmin) * (225.0 / (vmax - vmin))
                gray[hits] = np.rint(scaled).astype(np.uint8)
        else:
            grow, gx = np.gradient(v)
            gy = -grow  # rows run top to bottom, world y runs bottom to top
            norm = np.sqrt(gx * gx + gy * gy + 1.0)
            light = 1.0 / math.sqrt(3.0)
            diffuse = (-gx * light - gy * light + light) / norm
            diffuse = np.clip(diffuse, 0.0, 1.0)
            gray[hits] = np.rint(diffuse[hits] * 255.0).astype(np.uint8)
    return RgbImage(pixels=np.repeat(gray[:, :, None], 3, axis=2))


def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload))
    )


def encode_png(img: RgbImage) -> bytes:
    """Minimal deterministic PNG encoder: 8-bit RGB, no alpha, filter 0.

    Output bytes depend only on the pixel values (fixed zlib level), so
    identical renders produce identical files.
    """
    pixels = np.ascontiguousarray(img.pixels, dtype=np.uint8)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ShapeMismatch(f"expected (h, w, 3) pixels, got {pixels.shape}")
    h, w = pixels.shape[:2]
    raw = b"".join(b"\x00" + pixels[row].tobytes() for row in range(h))
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return b"".join(
        [
            b"\x89PNG\r\n\x1a\n",
            _png_chunk(b"IHDR", ihdr),
            _png_chunk(b"IDAT", zlib.compress(raw, 6)),
            _png_chunk(b"IEND", b""),
        ]
    )
