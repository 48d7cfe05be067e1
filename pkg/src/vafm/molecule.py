"""Structure file parsing: fixed-column PDB records and Wavefront OBJ meshes.

Both parsers are pure functions of their input bytes. PDB atoms carry a van
der Waals radius assigned from a built-in element table so downstream
rasterization needs no chemistry knowledge.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyStructure, MalformedRecord

# Bondi van der Waals radii in angstroms. Elements outside this table get
# DEFAULT_VDW_RADIUS and a warning.
VDW_RADII = {
    "H": 1.20,
    "C": 1.70,
    "N": 1.55,
    "O": 1.52,
    "S": 1.80,
    "P": 1.80,
}
DEFAULT_VDW_RADIUS = 1.70


@dataclass(frozen=True)
class AtomRecord:
    """One atom: serial number, element symbol, position (A), vdW radius (A)."""

    serial: int
    element: str
    position: tuple[float, float, float]
    vdw_radius: float


@dataclass
class Molecule:
    """Parsed structure: an id and an ordered list of atoms."""

    id: str
    atoms: list[AtomRecord] = field(default_factory=list)

    def positions(self) -> np.ndarray:
        """Atom centers as an (n, 3) float64 array."""
        return np.array([a.position for a in self.atoms], dtype=np.float64)

    def radii(self) -> np.ndarray:
        """Per-atom vdW radii as an (n,) float64 array."""
        return np.array([a.vdw_radius for a in self.atoms], dtype=np.float64)


@dataclass
class TriangleMesh:
    """Indexed triangle surface: (n, 3) float64 vertices, (m, 3) int triangles."""

    vertices: np.ndarray
    triangles: np.ndarray


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box with componentwise min <= max."""

    min: np.ndarray
    max: np.ndarray

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    @property
    def center(self) -> np.ndarray:
        return (self.min + self.max) / 2.0


def _decode(data: bytes | str) -> str:
    if isinstance(data, bytes):
        return data.decode("latin-1")
    return data


def _element_from_columns(line: str) -> str:
    """Element symbol from columns 77-78, falling back to the atom name.

    The fallback takes the first run of alphabetic characters in the atom
    name field (columns 13-16), which handles names like " CA " and "1HB2".
    """
    symbol = line[76:78].strip() if len(line) >= 78 else ""
    if symbol:
        return symbol.upper()
    name = line[12:16]
    run = []
    for ch in name:
        if ch.isalpha():
            run.append(ch)
        elif run:
            break
    return "".join(run).upper()


def parse_pdb(data: bytes | str, molecule_id: str | None = None) -> Molecule:
    """Parse ATOM/HETATM records from PDB text into a Molecule.

    Fixed-column slices per the wwPDB format: coordinates from columns
    31-54, element from columns 77-78 (with the atom-name fallback above).
    Water (residue HOH) is excluded, alternate locations other than blank
    or 'A' are skipped, and only the first MODEL of a multi-model file is
    read. Unknown elements get the default radius and a warning.

    :raises EmptyStructure: no usable ATOM/HETATM records.
    :raises MalformedRecord: a coordinate field does not parse.
    """
    text = _decode(data)
    atoms: list[AtomRecord] = []
    header_id = ""
    warned: set[str] = set()

    for lineno, line in enumerate(text.splitlines(), start=1):
        record = line[:6].strip()
        if record == "HEADER" and len(line) >= 66:
            header_id = line[62:66].strip()
            continue
        if record == "ENDMDL":
            break
        if record not in ("ATOM", "HETATM"):
            continue
        if line[17:20].strip() == "HOH":
            continue
        altloc = line[16:17]
        if altloc not in (" ", "", "A"):
            continue
        try:
            x = float(line[30:38])
            y = float(line[38:46])
            z = float(line[46:54])
        except (ValueError, IndexError):
            raise MalformedRecord("unparsable coordinate field", line=lineno)
        position = (x, y, z)
        if not all(math.isfinite(c) for c in position):
            raise MalformedRecord("non-finite coordinate", line=lineno)
        try:
            serial = int(line[6:11])
        except ValueError:
            serial = len(atoms) + 1
        element = _element_from_columns(line)
        radius = VDW_RADII.get(element)
        if radius is None:
            if element not in warned:
                warnings.warn(
                    f"unknown element {element!r}, using default radius "
                    f"{DEFAULT_VDW_RADIUS} A"
                )
                warned.add(element)
            radius = DEFAULT_VDW_RADIUS
        atoms.append(AtomRecord(serial, element, position, radius))

    if not atoms:
        raise EmptyStructure("no ATOM/HETATM records")
    return Molecule(id=molecule_id or header_id or "", atoms=atoms)


def _resolve_obj_index(token: str, n_vertices: int, lineno: int) -> int:
    raw = token.split("/")[0]
    try:
        idx = int(raw)
    except ValueError:
        raise MalformedRecord(f"bad face index {token!r}", line=lineno)
    if idx == 0:
        raise MalformedRecord("OBJ indices are 1-based, got 0", line=lineno)
    if idx < 0:
        resolved = n_vertices + idx
        if resolved < 0:
            raise MalformedRecord(f"face index {idx} out of range", line=lineno)
        return resolved
    return idx - 1


def parse_obj(data: bytes | str) -> TriangleMesh:
    """Parse `v` and `f` directives into a TriangleMesh.

    Polygon faces are fan-triangulated from their first vertex. Negative
    indices count back from the vertices defined so far. Texture and normal
    sub-indices (the parts after '/') are ignored. Faces whose three indices
    coincide are dropped as degenerate.

    :raises EmptyStructure: no faces survive parsing.
    :raises MalformedRecord: malformed vertex/face line or index out of range.
    """
    text = _decode(data)
    vertices: list[tuple[float, float, float]] = []
    triangles: list[tuple[int, int, int]] = []
    max_positive: tuple[int, int] | None = None  # (index, line) checked at end

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise MalformedRecord("vertex with fewer than 3 coordinates", line=lineno)
            try:
                vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError:
                raise MalformedRecord("unparsable vertex coordinate", line=lineno)
        elif parts[0] == "f":
            if len(parts) < 4:
                raise MalformedRecord("face with fewer than 3 vertices", line=lineno)
            idx = [_resolve_obj_index(t, len(vertices), lineno) for t in parts[1:]]
            for i in idx:
                if max_positive is None or i > max_positive[0]:
                    max_positive = (i, lineno)
            for a, b in zip(idx[1:], idx[2:]):
                if not (idx[0] == a == b):
                    triangles.append((idx[0], a, b))

    if max_positive is not None and max_positive[0] >= len(vertices):
        raise MalformedRecord(
            f"face index {max_positive[0] + 1} out of range", line=max_positive[1]
        )
    if not triangles:
        raise EmptyStructure("no faces")
    return TriangleMesh(
        vertices=np.array(vertices, dtype=np.float64).reshape(-1, 3),
        triangles=np.array(triangles, dtype=np.int64).reshape(-1, 3),
    )


def write_obj(mesh: TriangleMesh) -> str:
    """Serialize a TriangleMesh back to OBJ text.

    Floats are written with repr so parse_obj(write_obj(m)) reproduces the
    vertex list exactly.
    """
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for t in mesh.triangles:
        lines.append(f"f {int(t[0]) + 1} {int(t[1]) + 1} {int(t[2]) + 1}")
    return "\n".join(lines) + "\n"


def compute_aabb(geometry: Molecule | TriangleMesh) -> Aabb:
    """Bounding box of a structure.

    Molecule bounds inflate each atom center by its vdW radius; mesh bounds
    are exact vertex bounds.

    :raises EmptyStructure: the geometry has no atoms or vertices.
    """
    if isinstance(geometry, Molecule):
        if not geometry.atoms:
            raise EmptyStructure("molecule has no atoms")
        pos = geometry.positions()
        rad = geometry.radii()[:, None]
        return Aabb((pos - rad).min(axis=0), (pos + rad).max(axis=0))
    if isinstance(geometry, TriangleMesh):
        if len(geometry.vertices) == 0:
            raise EmptyStructure("mesh has no vertices")
        return Aabb(
            geometry.vertices.min(axis=0).astype(np.float64),
            geometry.vertices.max(axis=0).astype(np.float64),
        )
    raise TypeError(f"unsupported geometry type {type(geometry).__name__}")
