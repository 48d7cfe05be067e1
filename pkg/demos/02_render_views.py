"""Render a handful of seeded views of one structure to PNG files.

Shows the rendering half of the pipeline: seeded rotation sampling, the
orthographic height-map march, and grayscale shading.
"""

import sys
from pathlib import Path

from vafm import (
    encode_png,
    generate_viewset,
    parse_pdb,
    render_heightmap,
    shade,
    voxelize_atoms,
)

HERE = Path(__file__).resolve().parent
DEFAULT_INPUT = HERE.parent / "tests" / "data" / "p2bb.pdb"


def main() -> None:
    source = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_INPUT
    out_dir = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("demo_out")
    out_dir.mkdir(parents=True, exist_ok=True)

    molecule = parse_pdb(source.read_text(), molecule_id=source.stem)
    grid = voxelize_atoms(molecule, 128)
    print(f"{source.stem}: {len(molecule.atoms)} atoms -> 128^3 grid")

    views = generate_viewset(molecule.id, global_seed=7, n=5)
    for view in views:
        heights = render_heightmap(grid, view.rotation, 224)
        image = shade(heights, mode="height-gray")
        path = out_dir / f"{molecule.id}_view_{view.view_index:02d}.png"
        path.write_bytes(encode_png(image))
        peak = heights.values.max()
        print(f"view {view.view_index}: peak height {peak:.2f} A -> {path}")


if __name__ == "__main__":
    main()
