"""Score predictions against a dataset's ground truth voxels.

Builds a tiny dataset, fakes a predictor by corrupting the ground truth
with seeded noise, writes the predictions in the expected layout, and
prints the per-split score table.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from vafm import (
    VoxelGrid,
    batch_eval,
    build_dataset,
    format_table,
    load_manifest,
    read_voxfile,
    write_voxfile,
)

HERE = Path(__file__).resolve().parent
DEFAULT_INPUT = HERE.parent / "tests" / "data"


def noisy_prediction(grid: VoxelGrid, seed: int, flip_frac: float = 0.04) -> VoxelGrid:
    """Flip a fraction of voxels to fake an imperfect reconstruction."""
    rng = np.random.default_rng(seed)
    values = grid.values.copy()
    flips = rng.random(values.shape) < flip_frac
    values[flips] = 1 - values[flips]
    return VoxelGrid(values=values, transform=grid.transform)


def main() -> None:
    input_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_INPUT
    workspace = Path(tempfile.mkdtemp(prefix="vafm_eval_demo_"))
    dataset_dir = workspace / "dataset"
    pred_dir = workspace / "predictions"
    pred_dir.mkdir()

    sources = sorted(
        p for p in input_dir.iterdir()
        if p.suffix.lower() in (".pdb", ".obj")
    )
    build_dataset(
        sources, dataset_dir, global_seed=1,
        target_res=64, gt_res=16, image_res=96,
        n_views=8, views_per_entry=3, workers=2,
    )
    entries = load_manifest(dataset_dir / "manifest.jsonl")

    for entry in entries:
        truth = read_voxfile(dataset_dir / entry.voxel_path)
        pred = noisy_prediction(truth, seed=entry.repetition)
        write_voxfile(
            pred_dir / f"{entry.protein_id}_rep{entry.repetition}.afmv", pred)

    report = batch_eval(entries, pred_dir, dataset_root=dataset_dir)
    print(format_table(report))
    print(f"\nmean IoU {report.mean_iou:.4f} over {len(report.samples)} samples")
    print(f"workspace: {workspace}")


if __name__ == "__main__":
    main()
