"""Reader and writer for the .afmv bit-packed voxel grid format.

Layout (little-endian): 4-byte magic "AFMV", u16 version (1), three u16
dims (nx, ny, nz), then ceil(nx*ny*nz / 8) payload bytes with voxels
raveled x-fastest and packed LSB-first, then CRC32 of the payload.

This is an independent implementation of the dataset builder's format so
the trainer depends only on files, not on the builder's code.
"""

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import DataError

MAGIC = b"AFMV"
VERSION = 1
HEADER = struct.Struct("<4sHHHH")


def read_voxels(path: str | Path) -> np.ndarray:
    """Load a grid as a uint8 array of shape (nx, ny, nz) with values {0, 1}."""
    blob = Path(path).read_bytes()
    if len(blob) < HEADER.size:
        raise DataError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, nx, ny, nz = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    if 0 in (nx, ny, nz):
        raise DataError(f"{path}: zero dimension {(nx, ny, nz)}")
    n_voxels = nx * ny * nz
    n_payload = (n_voxels + 7) // 8
    expected = HEADER.size + n_payload + 4
    if len(blob) != expected:
        raise DataError(f"{path}: size {len(blob)}, expected {expected}")
    payload = blob[HEADER.size:HEADER.size + n_payload]
    (crc,) = struct.unpack_from("<I", blob, HEADER.size + n_payload)
    if crc != zlib.crc32(payload):
        raise DataError(f"{path}: CRC mismatch")
    bits = np.unpackbits(
        np.frombuffer(payload, dtype=np.uint8), bitorder="little"
    )[:n_voxels]
    return bits.reshape((nx, ny, nz), order="F")


def write_voxels(path: str | Path, values: np.ndarray) -> None:
    """Write a binary uint8/bool grid of shape (nx, ny, nz)."""
    if values.ndim != 3:
        raise DataError(f"expected a 3D grid, got shape {values.shape}")
    nx, ny, nz = values.shape
    if max(values.shape) > 0xFFFF:
        raise DataError(f"dimension exceeds u16 range: {values.shape}")
    bits = np.ascontiguousarray(values.astype(np.uint8).ravel(order="F"))
    payload = np.packbits(bits, bitorder="little").tobytes()
    blob = (
        HEADER.pack(MAGIC, VERSION, nx, ny, nz)
        + payload
        + struct.pack("<I", zlib.crc32(payload))
    )
    Path(path).write_bytes(blob)
