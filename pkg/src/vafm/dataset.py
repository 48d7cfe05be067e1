"""Dataset assembly: per-protein sample directories, splits, and manifests.

On-disk layout under the output root:

    <protein_id>/voxel_<gt_res>.afmv   bit-packed ground-truth grid
    <protein_id>/rotations.json        per-view seeds and quaternions
    <protein_id>/views/view_NN.png     rendered views
    manifest.jsonl                     one entry per (protein, repetition)
    dataset_config.json                the parameters that built the tree

Sample directories are written atomically (built under a dot-prefixed
temporary name, renamed into place), so a failed build leaves nothing
behind. Every output byte is a function of (inputs, global_seed) alone;
worker count only changes wall time.
"""

from __future__ import annotations

import json
import os
import shutil
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InsufficientData, InvalidConfig, ManifestError, VafmError
from .molecule import Molecule, TriangleMesh, parse_obj, parse_pdb
from .render import SHADE_MODES, encode_png, render_heightmap, shade
from .views import SplitMix64, derive_seed, generate_viewset
from .voxel import downsample, voxelize_atoms, voxelize_mesh
from .voxfile import write_voxfile

REPETITIONS = 4
ROTATIONS_FILE = "rotations.json"
VIEWS_DIR = "views"

MANIFEST_KEYS = (
    "protein_id",
    "split",
    "repetition",
    "view_indices",
    "voxel_path",
    "rotations_path",
    "view_paths",
)

STRUCTURE_SUFFIXES = (".pdb", ".obj")


def voxel_filename(gt_res: int) -> str:
    return f"voxel_{gt_res}.afmv"


def view_filename(view_index: int) -> str:
    return f"view_{view_index:02d}.png"


@dataclass
class ProteinSample:
    """Paths produced for one protein, relative to the dataset root."""

    protein_id: str
    voxel_path: str
    rotations_path: str
    view_paths: list[str]


@dataclass(frozen=True)
class ManifestEntry:
    """One training sample: a protein repetition with its view subset."""

    protein_id: str
    split: str
    repetition: int
    view_indices: tuple[int, ...]
    voxel_path: str
    rotations_path: str
    view_paths: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "protein_id": self.protein_id,
            "split": self.split,
            "repetition": self.repetition,
            "view_indices": list(self.view_indices),
            "voxel_path": self.voxel_path,
            "rotations_path": self.rotations_path,
            "view_paths": list(self.view_paths),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ManifestEntry":
        return cls(
            protein_id=data["protein_id"],
            split=data["split"],
            repetition=data["repetition"],
            view_indices=tuple(data["view_indices"]),
            voxel_path=data["voxel_path"],
            rotations_path=data["rotations_path"],
            view_paths=tuple(data["view_paths"]),
        )


def build_sample(
    source: Molecule | TriangleMesh,
    global_seed: int,
    out_dir: str | Path,
    *,
    protein_id: str | None = None,
    target_res: int = 256,
    gt_res: int = 32,
    image_res: int = 224,
    n_views: int = 25,
    shade_mode: str = "height-gray",
) -> ProteinSample:
    """Voxelize, downsample, and render one structure into <out_dir>/<id>/.

    The sample directory is built under a temporary name and renamed into
    place only when complete; any failure removes the partial directory.
    """
    if target_res % gt_res:
        raise InvalidConfig(f"gt_res {gt_res} must divide target_res {target_res}")
    if shade_mode not in SHADE_MODES:
        raise InvalidConfig(f"unknown shade mode {shade_mode!r}")
    if protein_id is None:
        protein_id = source.id if isinstance(source, Molecule) and source.id else "sample"

    if isinstance(source, Molecule):
        grid = voxelize_atoms(source, target_res)
    else:
        grid = voxelize_mesh(source, target_res)
    ground_truth = downsample(grid, target_res // gt_res)
    viewset = generate_viewset(protein_id, global_seed, n_views)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp_dir = out_dir / f".{protein_id}.tmp"
    final_dir = out_dir / protein_id
    if tmp_dir.exists():
        shutil.rmtree(tmp_dir)
    try:
        (tmp_dir / VIEWS_DIR).mkdir(parents=True)
        write_voxfile(tmp_dir / voxel_filename(gt_res), ground_truth)

        rotations = {
            "protein_id": protein_id,
            "global_seed": global_seed,
            "views": [
                {
                    "view_index": vs.view_index,
                    "seed": vs.seed,
                    "quaternion": [float(c) for c in vs.rotation.quat],
                }
                for vs in viewset
            ],
        }
        (tmp_dir / ROTATIONS_FILE).write_text(
            json.dumps(rotations, indent=2) + "\n", encoding="utf-8"
        )

        view_paths = []
        for vs in viewset:
            hm = render_heightmap(grid, vs.rotation, image_res)
            png = encode_png(shade(hm, shade_mode))
            rel = f"{VIEWS_DIR}/{view_filename(vs.view_index)}"
            (tmp_dir / rel).write_bytes(png)
            view_paths.append(f"{protein_id}/{rel}")
    except BaseException:
        shutil.rmtree(tmp_dir, ignore_errors=True)
        raise

    if final_dir.exists():
        shutil.rmtree(final_dir)
    os.replace(tmp_dir, final_dir)
    return ProteinSample(
        protein_id=protein_id,
        voxel_path=f"{protein_id}/{voxel_filename(gt_res)}",
        rotations_path=f"{protein_id}/{ROTATIONS_FILE}",
        view_paths=view_paths,
    )


def split_dataset(protein_ids, seed: int, train_frac: float = 0.8) -> dict[str, str]:
    """Assign proteins to train/val: shuffle by seed, first floor(frac*N) train.

    The split is by protein, so repetitions of one structure never straddle
    splits. The test label is reserved for externally supplied data and is
    never assigned here.

    :raises InsufficientData: fewer than 2 proteins.
    """
    ids = sorted(protein_ids)
    if len(ids) < 2:
        raise InsufficientData(f"need at least 2 proteins, got {len(ids)}")
    if not 0.0 < train_frac < 1.0:
        raise InvalidConfig(f"train_frac {train_frac} outside (0, 1)")
    stream = SplitMix64(seed)
    for i in range(len(ids) - 1, 0, -1):
        j = stream.next_u64() % (i + 1)
        ids[i], ids[j] = ids[j], ids[i]
    n_train = int(train_frac * len(ids))
    return {pid: ("train" if k < n_train else "val") for k, pid in enumerate(ids)}


def _sample_view_indices(seed: int, n_views: int, total: int) -> tuple[int, ...]:
    # partial Fisher-Yates: first n_views slots of a seeded shuffle
    stream = SplitMix64(seed)
    pool = list(range(total))
    for i in range(n_views):
        j = i + stream.next_u64() % (total - i)
        pool[i], pool[j] = pool[j], pool[i]
    return tuple(pool[:n_views])


def expand_repetitions(
    assignment: dict[str, str],
    n_views: int,
    seed: int,
    *,
    n_views_total: int = 25,
    gt_res: int = 32,
) -> list[ManifestEntry]:
    """Four manifest entries per protein, each with its own view subset.

    Subsets are drawn without replacement from the available views, using a
    seed derived per (protein, repetition); repetitions are independent and
    may overlap. The derivation key carries a ":rep" tag so these streams
    never collide with the per-view rotation streams.

    :raises InvalidConfig: n_views outside 1..n_views_total.
    """
    if not 1 <= n_views <= n_views_total:
        raise InvalidConfig(
            f"n_views {n_views} outside 1..{n_views_total} available views"
        )
    entries = []
    for protein_id in sorted(assignment):
        voxel_path = f"{protein_id}/{voxel_filename(gt_res)}"
        rotations_path = f"{protein_id}/{ROTATIONS_FILE}"
        for rep in range(REPETITIONS):
            rep_seed = derive_seed(seed, f"{protein_id}:rep", rep)
            indices = _sample_view_indices(rep_seed, n_views, n_views_total)
            entries.append(
                ManifestEntry(
                    protein_id=protein_id,
                    split=assignment[protein_id],
                    repetition=rep,
                    view_indices=indices,
                    voxel_path=voxel_path,
                    rotations_path=rotations_path,
                    view_paths=tuple(
                        f"{protein_id}/{VIEWS_DIR}/{view_filename(i)}" for i in indices
                    ),
                )
            )
    return entries


def write_manifest(entries) -> str:
    """JSON Lines serialization, one entry per line, fixed key order."""
    lines = [json.dumps(e.to_dict()) for e in entries]
    return "".join(line + "\n" for line in lines)


def read_manifest(text: str) -> list[ManifestEntry]:
    """Parse JSON Lines manifest text.

    :raises ManifestError: bad JSON or a missing required key, with the
        1-based line number.
    """
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"not valid JSON: {exc.msg}", line=lineno)
        for key in MANIFEST_KEYS:
            if key not in data:
                raise ManifestError(f"missing key {key!r}", line=lineno)
        entries.append(ManifestEntry.from_dict(data))
    return entries


def save_manifest(path: str | Path, entries) -> None:
    Path(path).write_text(write_manifest(entries), encoding="utf-8")


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    return read_manifest(Path(path).read_text(encoding="utf-8"))


@dataclass
class BuildResult:
    """Outcome of a dataset build: ids that succeeded, failures with reasons."""

    built: list[str] = field(default_factory=list)
    failed: list[tuple[str, str]] = field(default_factory=list)
    entries: list[ManifestEntry] = field(default_factory=list)
    elapsed: float = 0.0


def load_structure(path: str | Path) -> Molecule | TriangleMesh:
    """Parse a structure file by suffix (.pdb or .obj)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pdb":
        return parse_pdb(path.read_bytes(), molecule_id=path.stem)
    if suffix == ".obj":
        return parse_obj(path.read_bytes())
    raise InvalidConfig(f"unsupported structure suffix {suffix!r}")


def _build_one(args) -> tuple[str, str | None, float]:
    """Worker-pool task: build one sample, returning (id, error, seconds)."""
    path_str, out_dir, params = args
    protein_id = Path(path_str).stem
    start = time.monotonic()
    try:
        source = load_structure(path_str)
        build_sample(
            source,
            params["global_seed"],
            out_dir,
            protein_id=protein_id,
            target_res=params["target_res"],
            gt_res=params["gt_res"],
            image_res=params["image_res"],
            n_views=params["n_views"],
            shade_mode=params["shade_mode"],
        )
    except VafmError as exc:
        return protein_id, f"{type(exc).__name__}: {exc}", time.monotonic() - start
    return protein_id, None, time.monotonic() - start


def build_dataset(
    structure_files,
    out_dir: str | Path,
    *,
    global_seed: int = 0,
    target_res: int = 256,
    gt_res: int = 32,
    image_res: int = 224,
    n_views: int = 25,
    views_per_entry: int = 5,
    shade_mode: str = "height-gray",
    train_frac: float = 0.8,
    workers: int | None = None,
    progress=None,
) -> BuildResult:
    """Build every structure, then split, expand repetitions, and write the
    manifest and dataset_config.json.

    Samples are independent units of work handed to a process pool; the
    manifest is assembled single-threaded from ids sorted lexicographically,
    so results do not depend on worker count or completion order.
    """
    if views_per_entry > n_views:
        raise InvalidConfig(
            f"views_per_entry {views_per_entry} exceeds n_views {n_views}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = sorted(Path(f) for f in structure_files)
    notify = progress or (lambda message: None)
    params = {
        "global_seed": global_seed,
        "target_res": target_res,
        "gt_res": gt_res,
        "image_res": image_res,
        "n_views": n_views,
        "shade_mode": shade_mode,
    }
    tasks = [(str(f), str(out_dir), params) for f in files]
    if workers is None:
        workers = os.cpu_count() or 1

    start = time.monotonic()
    result = BuildResult()
    done = 0
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_build_one, t) for t in tasks]
            for future in as_completed(futures):
                protein_id, error, seconds = future.result()
                done += 1
                _record(result, protein_id, error, seconds, done, len(tasks), notify)
    else:
        for task in tasks:
            protein_id, error, seconds = _build_one(task)
            done += 1
            _record(result, protein_id, error, seconds, done, len(tasks), notify)

    result.built.sort()
    if result.built:
        if len(result.built) >= 2:
            assignment = split_dataset(result.built, global_seed, train_frac)
        else:
            notify("single structure: assigning it to train without a split")
            assignment = {result.built[0]: "train"}
        result.entries = expand_repetitions(
            assignment,
            views_per_entry,
            global_seed,
            n_views_total=n_views,
            gt_res=gt_res,
        )
        save_manifest(out_dir / "manifest.jsonl", result.entries)
        config = {
            "pipeline_version": _pipeline_version(),
            "global_seed": global_seed,
            "target_res": target_res,
            "gt_res": gt_res,
            "image_res": image_res,
            "n_views": n_views,
            "views_per_entry": views_per_entry,
            "shade_mode": shade_mode,
            "train_frac": train_frac,
        }
        (out_dir / "dataset_config.json").write_text(
            json.dumps(config, indent=2) + "\n", encoding="utf-8"
        )
    result.elapsed = time.monotonic() - start
    return result


def _record(result, protein_id, error, seconds, done, total, notify):
    if error is None:
        result.built.append(protein_id)
        notify(f"[{done}/{total}] {protein_id} ok ({seconds:.1f}s)")
    else:
        result.failed.append((protein_id, error))
        notify(f"[{done}/{total}] {protein_id} FAILED: {error}")


def _pipeline_version() -> str:
    from . import __version__

    return __version__
