"""Voxelize one structure and write the grid to a .afmv file.

Walks the first half of the pipeline by hand: parse a PDB, fit the snug
grid transform, rasterize the atom spheres at high resolution, down-sample
to the coarse ground-truth cube, and save both grids.
"""

import sys
from pathlib import Path

from vafm import (
    compute_aabb,
    downsample,
    fit_transform,
    parse_pdb,
    voxelize_atoms,
    write_voxfile,
)

HERE = Path(__file__).resolve().parent
DEFAULT_INPUT = HERE.parent / "tests" / "data" / "p1aa.pdb"


def main() -> None:
    source = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_INPUT
    out_dir = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("demo_out")
    out_dir.mkdir(parents=True, exist_ok=True)

    molecule = parse_pdb(source.read_text(), molecule_id=source.stem)
    print(f"parsed {source.name}: {len(molecule.atoms)} atoms")

    aabb = compute_aabb(molecule)
    print(f"extents {aabb.extents.round(2)} A")

    transform = fit_transform(aabb, 128)
    print(f"grid pitch {transform.pitch:.4f} A/voxel at 128^3")

    fine = voxelize_atoms(molecule, 128)
    print(f"fine grid: {fine.occupied_count} occupied "
          f"({fine.occupied_count / 128**3:.2%})")

    coarse = downsample(fine, factor=8)
    print(f"coarse 16^3: {coarse.occupied_count} occupied")

    for grid, name in ((fine, "fine_128.afmv"), (coarse, "coarse_16.afmv")):
        path = out_dir / name
        write_voxfile(path, grid)
        print(f"wrote {path} ({path.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
