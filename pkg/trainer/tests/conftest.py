"""Shared fixtures: a small generated dataset the trainer consumes.

The dataset builder is exercised strictly through its command line, so
these tests prove the trainer works from the published files alone.
"""

import subprocess
import sys

import numpy as np
import pytest

PROTEIN_IDS = ("w1aa", "w2bb", "w3cc", "w4dd", "w5ee")
GENERATE_ARGS = (
    "--seed", "17",
    "--target-res", "64",
    "--gt-res", "32",
    "--image-res", "224",
    "--views", "6",
    "--views-per-entry", "3",
    "--workers", "2",
)


def write_walk_pdb(path, seed: int, n_atoms: int = 48) -> None:
    """Write a random-walk chain as a minimal PDB file."""
    rng = np.random.default_rng(seed)
    steps = rng.normal(scale=2.2, size=(n_atoms, 3))
    positions = np.cumsum(steps, axis=0)
    elements = rng.choice(["C", "N", "O"], size=n_atoms)
    lines = []
    for i, (pos, elem) in enumerate(zip(positions, elements)):
        x, y, z = pos
        lines.append(
            f"ATOM  {i + 1:5d}  {elem:<3s}ALA A{i + 1:4d}    "
            f"{x:8.3f}{y:8.3f}{z:8.3f}  1.00  0.00          {elem:>2s}"
        )
    path.write_text("\n".join(lines) + "\nEND\n")


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """Generate a five-protein dataset once via the builder CLI."""
    root = tmp_path_factory.mktemp("trainer_data")
    src = root / "pdb"
    out = root / "dataset"
    src.mkdir()
    for i, pid in enumerate(PROTEIN_IDS):
        write_walk_pdb(src / f"{pid}.pdb", seed=100 + i)
    cmd = [
        sys.executable, "-m", "vafm", "generate",
        "--input", str(src), "--out", str(out), *GENERATE_ARGS,
    ]
    result = subprocess.run(cmd, capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    return out
