"""Command-line entry point.

Subcommands:

    generate   build a full dataset from a directory of .pdb/.obj files
    render     render a single view of one structure to a PNG
    split      print the deterministic train/val assignment for an input dir
    eval       score predicted grids against a dataset manifest
    inspect    summarize a .afmv grid or a manifest.jsonl

Diagnostics go to stderr; stdout carries only the command's own output.
Exit status is 0 exactly when nothing failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .dataset import (
    STRUCTURE_SUFFIXES,
    build_dataset,
    load_manifest,
    load_structure,
    split_dataset,
)
from .errors import VafmError
from .metrics import DEFAULT_THRESHOLD, batch_eval, format_table, report_to_json
from .render import SHADE_MODES, encode_png, render_heightmap, shade
from .views import Rotation, sample_rotation
from .voxel import voxelize_atoms, voxelize_mesh
from .voxfile import MAGIC, inspect_voxfile
from .molecule import Molecule

log = logging.getLogger("vafm")

_SPLIT_ORDER = ("train", "val", "test")


@dataclass
class PipelineConfig:
    """Flag values for a generate run, one field per flag."""

    input_dir: Path
    out_dir: Path
    global_seed: int = 0
    target_res: int = 256
    gt_res: int = 32
    image_res: int = 224
    n_views: int = 25
    views_per_entry: int = 5
    shade_mode: str = "height-gray"
    workers: int | None = None

    def validate(self) -> None:
        for name, value in (
            ("--gt-res", self.gt_res),
            ("--image-res", self.image_res),
            ("--views", self.n_views),
            ("--views-per-entry", self.views_per_entry),
        ):
            if value < 1:
                raise SystemExit(f"error: {name} must be positive, got {value}")
        if self.target_res % self.gt_res:
            raise SystemExit(
                f"error: --gt-res {self.gt_res} must divide --target-res {self.target_res}"
            )
        if self.views_per_entry > self.n_views:
            raise SystemExit(
                f"error: --views-per-entry {self.views_per_entry} exceeds --views {self.n_views}"
            )


def _structure_files(input_dir: Path) -> list[Path]:
    return sorted(
        p for p in input_dir.iterdir()
        if p.is_file() and p.suffix.lower() in STRUCTURE_SUFFIXES
    )


def cmd_generate(args) -> int:
    config = PipelineConfig(
        input_dir=Path(args.input),
        out_dir=Path(args.out),
        global_seed=args.seed,
        target_res=args.target_res,
        gt_res=args.gt_res,
        image_res=args.image_res,
        n_views=args.views,
        views_per_entry=args.views_per_entry,
        shade_mode=args.shade,
        workers=args.workers,
    )
    config.validate()
    if not config.input_dir.is_dir():
        log.error("input directory not found: %s", config.input_dir)
        return 1
    files = _structure_files(config.input_dir)
    if not files:
        log.error("no input structures in %s", config.input_dir)
        return 1

    result = build_dataset(
        files,
        config.out_dir,
        global_seed=config.global_seed,
        target_res=config.target_res,
        gt_res=config.gt_res,
        image_res=config.image_res,
        n_views=config.n_views,
        views_per_entry=config.views_per_entry,
        shade_mode=config.shade_mode,
        workers=config.workers,
        progress=log.info,
    )
    log.info(
        "built %d/%d samples, %d manifest entries, %.1fs",
        len(result.built), len(files), len(result.entries), result.elapsed,
    )
    for protein_id, reason in result.failed:
        log.error("failed: %s (%s)", protein_id, reason)
    return 0 if not result.failed else 1


def _parse_quat(text: str) -> Rotation:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise SystemExit(f"error: --quat needs 4 comma-separated values, got {len(parts)}")
    return Rotation.from_quat(parts)


def cmd_render(args) -> int:
    if args.shade not in SHADE_MODES:
        raise SystemExit(f"error: unknown shade mode {args.shade!r}")
    rotation = _parse_quat(args.quat) if args.quat else sample_rotation(args.seed)
    source = load_structure(args.input)
    if isinstance(source, Molecule):
        grid = voxelize_atoms(source, args.target_res)
    else:
        grid = voxelize_mesh(source, args.target_res)
    hm = render_heightmap(grid, rotation, args.image_res)
    Path(args.out).write_bytes(encode_png(shade(hm, args.shade)))
    log.info("wrote %s", args.out)
    return 0


def cmd_split(args) -> int:
    input_dir = Path(args.input)
    if not input_dir.is_dir():
        log.error("input directory not found: %s", input_dir)
        return 1
    files = _structure_files(input_dir)
    if not files:
        log.error("no input structures in %s", input_dir)
        return 1
    assignment = split_dataset([f.stem for f in files], args.seed)
    for protein_id in sorted(assignment):
        print(f"{protein_id}\t{assignment[protein_id]}")
    counts = {s: sum(1 for v in assignment.values() if v == s) for s in _SPLIT_ORDER}
    log.info(
        "split %d proteins: %s",
        len(assignment),
        ", ".join(f"{s}={counts[s]}" for s in _SPLIT_ORDER if counts[s]),
    )
    if args.out:
        Path(args.out).write_text(
            json.dumps(assignment, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def cmd_eval(args) -> int:
    manifest_path = Path(args.input)
    entries = load_manifest(manifest_path)
    report = batch_eval(
        entries,
        args.predictions,
        threshold=args.threshold,
        dataset_root=manifest_path.parent,
    )
    print(format_table(report))
    if args.out:
        Path(args.out).write_text(report_to_json(report), encoding="utf-8")
    for path in report.missing:
        log.error("missing prediction: %s", path)
    return 0 if not report.missing else 1


def cmd_inspect(args) -> int:
    path = Path(args.input)
    if not path.is_file():
        log.error("no such file: %s", path)
        return 1
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return _inspect_voxfile(path)
    return _inspect_manifest(path)


def _inspect_voxfile(path: Path) -> int:
    info = inspect_voxfile(path.read_bytes())
    nx, ny, nz = info["dims"]
    frac = info["occupied"] / info["total"] if info["total"] else 0.0
    print(f"dims {nx} x {ny} x {nz}")
    print(f"occupied {info['occupied']} / {info['total']} ({frac:.3%})")
    if not info["crc_ok"]:
        print("CRC mismatch")
        return 1
    print("CRC ok")
    return 0


def _inspect_manifest(path: Path) -> int:
    entries = load_manifest(path)
    counts = {s: 0 for s in _SPLIT_ORDER}
    proteins = set()
    for entry in entries:
        counts.setdefault(entry.split, 0)
        counts[entry.split] += 1
        proteins.add(entry.protein_id)
    print(f"{len(entries)} entries, {len(proteins)} proteins")
    print(", ".join(f"{s}: {n} entries" for s, n in counts.items() if n))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vafm",
        description="virtual AFM imaging dataset pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="build a dataset from structure files")
    gen.add_argument("--input", required=True, help="directory of .pdb/.obj files")
    gen.add_argument("--out", required=True, help="dataset output directory")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--target-res", type=int, default=256)
    gen.add_argument("--gt-res", type=int, default=32)
    gen.add_argument("--image-res", type=int, default=224)
    gen.add_argument("--views", type=int, default=25, help="views rendered per protein")
    gen.add_argument("--views-per-entry", type=int, default=5,
                     help="views listed per manifest entry")
    gen.add_argument("--shade", default="height-gray", choices=sorted(SHADE_MODES))
    gen.add_argument("--workers", type=int, default=None)
    gen.set_defaults(func=cmd_generate)

    ren = sub.add_parser("render", help="render one view of one structure")
    ren.add_argument("--input", required=True, help="a .pdb or .obj file")
    ren.add_argument("--out", required=True, help="output PNG path")
    ren.add_argument("--seed", type=int, default=0, help="rotation seed")
    ren.add_argument("--quat", default=None, help="rotation as w,x,y,z (overrides --seed)")
    ren.add_argument("--target-res", type=int, default=256)
    ren.add_argument("--image-res", type=int, default=224)
    ren.add_argument("--shade", default="height-gray", choices=sorted(SHADE_MODES))
    ren.set_defaults(func=cmd_render)

    spl = sub.add_parser("split", help="print the train/val assignment")
    spl.add_argument("--input", required=True, help="directory of structure files")
    spl.add_argument("--out", default=None, help="optional JSON output path")
    spl.add_argument("--seed", type=int, default=0)
    spl.set_defaults(func=cmd_split)

    ev = sub.add_parser("eval", help="score predictions against a manifest")
    ev.add_argument("--input", required=True, help="path to manifest.jsonl")
    ev.add_argument("--predictions", required=True, help="directory of predicted .afmv files")
    ev.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    ev.add_argument("--out", default=None, help="optional JSON report path")
    ev.set_defaults(func=cmd_eval)

    ins = sub.add_parser("inspect", help="summarize a .afmv file or manifest")
    ins.add_argument("--input", required=True, help=".afmv or manifest.jsonl path")
    ins.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VafmError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
