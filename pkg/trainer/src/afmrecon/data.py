"""Dataset loading: manifest entries, view images, and ground-truth voxels.

Reads the dataset builder's on-disk contract (manifest.jsonl with fixed
keys, PNG views, .afmv voxels, dataset_config.json) and preloads it into
memory; the datasets this trainer targets are desk scale, so eager arrays
are simpler and faster than lazy loading.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .voxio import read_voxels

MANIFEST_KEYS = (
    "protein_id",
    "split",
    "repetition",
    "view_indices",
    "voxel_path",
    "rotations_path",
    "view_paths",
)


@dataclass(frozen=True)
class Entry:
    """One manifest line: a protein repetition with its view subset."""

    protein_id: str
    split: str
    repetition: int
    view_indices: tuple[int, ...]
    voxel_path: str
    view_paths: tuple[str, ...]


def read_manifest(path: str | Path) -> list[Entry]:
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise DataError(f"{path}:{lineno}: bad JSON ({err.msg})") from err
        missing = [k for k in MANIFEST_KEYS if k not in record]
        if missing:
            raise DataError(f"{path}:{lineno}: missing keys {missing}")
        entries.append(
            Entry(
                protein_id=record["protein_id"],
                split=record["split"],
                repetition=int(record["repetition"]),
                view_indices=tuple(record["view_indices"]),
                voxel_path=record["voxel_path"],
                view_paths=tuple(record["view_paths"]),
            )
        )
    return entries


def load_image(path: str | Path) -> np.ndarray:
    """PNG to float32 (H, W, 3) in [0, 1]."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        return np.asarray(rgb, dtype=np.float32) / 255.0


@dataclass
class Bundle:
    """A dataset held in memory.

    images[i] is (n_views, H, W, 3) float32 for entries[i]; truths[i] is the
    (32, 32, 32) float32 occupancy grid, shared per protein.
    """

    root: Path
    config: dict
    entries: list[Entry] = field(default_factory=list)
    images: list[np.ndarray] = field(default_factory=list)
    truths: list[np.ndarray] = field(default_factory=list)

    def indices_for(self, split: str) -> list[int]:
        return [i for i, e in enumerate(self.entries) if e.split == split]

    @property
    def views_per_entry(self) -> int:
        return self.images[0].shape[0] if self.images else 0


def load_bundle(root: str | Path, splits: tuple[str, ...] | None = None) -> Bundle:
    """Preload a dataset directory, optionally restricted to some splits."""
    root = Path(root)
    config_path = root / "dataset_config.json"
    if not config_path.exists():
        raise DataError(f"not a dataset directory: {root} (no dataset_config.json)")
    config = json.loads(config_path.read_text())
    entries = read_manifest(root / "manifest.jsonl")
    if splits is not None:
        entries = [e for e in entries if e.split in splits]
    if not entries:
        raise DataError(f"{root}: no manifest entries" +
                        (f" in splits {splits}" if splits else ""))

    bundle = Bundle(root=root, config=config, entries=entries)
    truth_cache: dict[str, np.ndarray] = {}
    for entry in entries:
        try:
            stack = np.stack([load_image(root / p) for p in entry.view_paths])
        except OSError as err:
            raise DataError(f"{entry.protein_id}: cannot load view: {err}") from err
        bundle.images.append(stack)
        if entry.voxel_path not in truth_cache:
            try:
                volume = read_voxels(root / entry.voxel_path)
            except OSError as err:
                raise DataError(
                    f"{entry.protein_id}: cannot load voxels: {err}"
                ) from err
            truth_cache[entry.voxel_path] = volume.astype(np.float32)
        bundle.truths.append(truth_cache[entry.voxel_path])
    return bundle
