"""Deterministic uniform view sampling over SO(3).

Each view's rotation comes from its own counter-based stream so views can be
generated in any order, on any worker, with identical results: a 64-bit
FNV-1a hash of (global_seed, protein_id, view_index) seeds a SplitMix64
stream, and three uniform variates feed Shoemake's subgroup algorithm for a
Haar-uniform unit quaternion.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def derive_seed(global_seed: int, protein_id: str, view_index: int) -> int:
    """Stable per-view seed.

    Hashes global_seed (8 bytes little-endian), the protein id (UTF-8), and
    view_index (4 bytes little-endian) with FNV-1a. Pure arithmetic on
    fixed-width integers, so the result is identical on every platform.
    """
    payload = (
        struct.pack("<Q", global_seed & _MASK64)
        + protein_id.encode("utf-8")
        + struct.pack("<I", view_index & 0xFFFFFFFF)
    )
    return fnv1a64(payload)


class SplitMix64:
    """Counter-based generator: 64-bit state, one output per increment."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 random mantissa bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class Rotation:
    """A 3D rotation stored as a unit quaternion (w, x, y, z).

    The quaternion is a plain tuple so Rotation values hash and compare
    like any other frozen dataclass.
    """

    quat: tuple[float, float, float, float]

    @classmethod
    def from_quat(cls, values) -> "Rotation":
        """Build from any 4-vector, normalizing to unit length.

        :raises InvalidConfig: the quaternion has (near-)zero norm.
        """
        q = np.asarray(values, dtype=np.float64).reshape(4)
        norm = float(np.linalg.norm(q))
        if norm < 1e-12:
            raise InvalidConfig("quaternion has zero norm")
        return cls(quat=tuple(float(c) for c in q / norm))

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(quat=(1.0, 0.0, 0.0, 0.0))

    def as_matrix(self) -> np.ndarray:
        """Equivalent 3x3 rotation matrix (orthonormal, det +1)."""
        w, x, y, z = self.quat
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Rotate one point or an (n, 3) array of points."""
        return np.asarray(points, dtype=np.float64) @ self.as_matrix().T


def sample_rotation(seed: int) -> Rotation:
    """Haar-uniform random rotation from a 64-bit seed.

    Shoemake's subgroup algorithm: with u1, u2, u3 uniform in [0, 1),
    sqrt(1-u1)*(sin t1, cos t1) and sqrt(u1)*(sin t2, cos t2) with
    t = 2*pi*u give a uniform point on the unit 3-sphere.
    """
    stream = SplitMix64(seed)
    u1 = stream.next_float()
    u2 = stream.next_float()
    u3 = stream.next_float()
    s1 = math.sqrt(1.0 - u1)
    s2 = math.sqrt(u1)
    t1 = 2.0 * math.pi * u2
    t2 = 2.0 * math.pi * u3
    q = np.array(
        [
            s2 * math.cos(t2),
            s1 * math.sin(t1),
            s1 * math.cos(t1),
            s2 * math.sin(t2),
        ]
    )
    return Rotation.from_quat(q)


@dataclass(frozen=True)
class ViewSpec:
    """One view of one protein: its index, seed, and rotation."""

    protein_id: str
    view_index: int
    seed: int
    rotation: Rotation


def generate_viewset(protein_id: str, global_seed: int, n: int = 25) -> list[ViewSpec]:
    """Deterministic list of n views for a protein.

    View i uses derive_seed(global_seed, protein_id, i), so any subset can be
    regenerated independently.
    """
    if n < 1:
        raise InvalidConfig("need at least one view")
    specs = []
    for i in range(n):
        seed = derive_seed(global_seed, protein_id, i)
        specs.append(
            ViewSpec(
                protein_id=protein_id,
                view_index=i,
                seed=seed,
                rotation=sample_rotation(seed),
            )
        )
    return specs
