"""Binary occupancy grid file format (.afmv).

Layout, all integers little-endian:

    offset 0   magic  b"AFMV"
    offset 4   u16    version (currently 1)
    offset 6   u16*3  dims nx, ny, nz
    offset 12  bytes  occupancy bits, x-fastest, LSB-first within each
                      byte, zero-padded to a byte boundary
    trailer    u32    CRC32 of the payload bytes

The format carries no world transform; decoded grids get origin (0,0,0) and
pitch 1.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import VoxFileError
from .voxel import GridTransform, VoxelGrid

MAGIC = b"AFMV"
VERSION = 1
_HEADER = struct.Struct("<4sHHHH")


def encode_voxfile(grid: VoxelGrid) -> bytes:
    """Serialize a grid's occupancy (nonzero = occupied) to format bytes."""
    nx, ny, nz = grid.dims
    if max(nx, ny, nz) > 0xFFFF:
        raise VoxFileError(f"dims {grid.dims} exceed u16 range")
    bits = (grid.values.ravel(order="F") != 0).astype(np.uint8)
    payload = np.packbits(bits, bitorder="little").tobytes()
    return (
        _HEADER.pack(MAGIC, VERSION, nx, ny, nz)
        + payload
        + struct.pack("<I", zlib.crc32(payload))
    )


def decode_voxfile(data: bytes) -> VoxelGrid:
    """Parse format bytes back into a binary VoxelGrid.

    :raises VoxFileError: structural violation, reported with byte offset.
    """
    dims, payload = _parse_structure(data)
    payload_len = len(payload)
    stored_crc = struct.unpack_from("<I", data, 12 + payload_len)[0]
    if stored_crc != zlib.crc32(payload):
        raise VoxFileError("CRC mismatch", offset=12 + payload_len)
    return _grid_from_payload(dims, payload)


def inspect_voxfile(data: bytes) -> dict:
    """Structural report for the CLI: dims, occupancy, CRC status.

    Unlike decode_voxfile, a CRC mismatch is reported in the result rather
    than raised, so the payload can still be summarized.
    """
    dims, payload = _parse_structure(data)
    stored_crc = struct.unpack_from("<I", data, 12 + len(payload))[0]
    grid = _grid_from_payload(dims, payload)
    return {
        "dims": dims,
        "occupied": grid.occupied_count,
        "total": dims[0] * dims[1] * dims[2],
        "crc_ok": stored_crc == zlib.crc32(payload),
    }


def _parse_structure(data: bytes) -> tuple[tuple[int, int, int], bytes]:
    if len(data) < _HEADER.size:
        raise VoxFileError("truncated header", offset=len(data))
    magic, version, nx, ny, nz = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise VoxFileError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise VoxFileError(f"unsupported version {version}", offset=4)
    if nx == 0 or ny == 0 or nz == 0:
        raise VoxFileError(f"zero dimension in {(nx, ny, nz)}", offset=6)
    payload_len = (nx * ny * nz + 7) // 8
    expected = _HEADER.size + payload_len + 4
    if len(data) < expected:
        raise VoxFileError(
            f"truncated payload, need {expected} bytes, have {len(data)}",
            offset=len(data),
        )
    if len(data) > expected:
        raise VoxFileError(f"{len(data) - expected} trailing bytes", offset=expected)
    return (nx, ny, nz), data[_HEADER.size : _HEADER.size + payload_len]


def _grid_from_payload(dims: tuple[int, int, int], payload: bytes) -> VoxelGrid:
    nx, ny, nz = dims
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little")
    values = bits[: nx * ny * nz].reshape(dims, order="F").astype(np.uint8)
    return VoxelGrid(
        values=values,
        transform=GridTransform(origin=np.zeros(3), pitch=1.0),
    )


def write_voxfile(path: str | Path, grid: VoxelGrid) -> None:
    Path(path).write_bytes(encode_voxfile(grid))


def read_voxfile(path: str | Path) -> VoxelGrid:
    return decode_voxfile(Path(path).read_bytes())
