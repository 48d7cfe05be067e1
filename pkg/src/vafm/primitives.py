"""Analytic test shapes with closed-form volumes.

These meshes exist so the voxelizer can be checked against geometry whose
volume is known exactly: a cube fills its bounding box, an icosphere
converges on (4/3)*pi*r^3 from below as subdivisions increase.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidConfig
from .molecule import TriangleMesh

# 12 triangles, outward-facing, CCW when viewed from outside
_CUBE_FACES = (
    (0, 2, 1), (0, 3, 2),  # -z
    (4, 5, 6), (4, 6, 7),  # +z
    (0, 1, 5), (0, 5, 4),  # -y
    (3, 7, 6), (3, 6, 2),  # +y
    (0, 4, 7), (0, 7, 3),  # -x
    (1, 2, 6), (1, 6, 5),  # +x
)


def unit_cube(center=(0.0, 0.0, 0.0), side: float = 1.0) -> TriangleMesh:
    """Axis-aligned cube as 12 triangles."""
    if side <= 0:
        raise InvalidConfig(f"side {side} must be positive")
    c = np.asarray(center, dtype=np.float64)
    h = side / 2.0
    corners = np.array(
        [
            [-h, -h, -h],
            [+h, -h, -h],
            [+h, +h, -h],
            [-h, +h, -h],
            [-h, -h, +h],
            [+h, -h, +h],
            [+h, +h, +h],
            [-h, +h, +h],
        ]
    )
    return TriangleMesh(
        vertices=corners + c,
        triangles=np.array(_CUBE_FACES, dtype=np.int64),
    )


def icosphere(subdivisions: int = 3, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Icosahedron refined by midpoint subdivision, vertices on the sphere.

    Each level splits every triangle into four; level 3 gives 1280 faces,
    volume within about 0.2% of the true ball.
    """
    if subdivisions < 0:
        raise InvalidConfig(f"subdivisions {subdivisions} must be >= 0")
    if radius <= 0:
        raise InvalidConfig(f"radius {radius} must be positive")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [_normalized(v) for v in verts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]

    for _ in range(subdivisions):
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in midpoint_cache:
                va, vb = verts[a], verts[b]
                verts.append(
                    _normalized(
                        ((va[0] + vb[0]) / 2, (va[1] + vb[1]) / 2, (va[2] + vb[2]) / 2)
                    )
                )
                midpoint_cache[key] = len(verts) - 1
            return midpoint_cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = refined

    vertices = np.array(verts, dtype=np.float64) * radius + np.asarray(center)
    return TriangleMesh(
        vertices=vertices,
        triangles=np.array(faces, dtype=np.int64),
    )


def _normalized(v) -> tuple[float, float, float]:
    x, y, z = v
    n = (x * x + y * y + z * z) ** 0.5
    return (x / n, y / n, z / n)
