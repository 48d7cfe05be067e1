import numpy as np
import pytest

from vafm.molecule import AtomRecord, Molecule
from vafm.voxel import GridTransform, VoxelGrid

DATA_DIR_NAME = "data"


@pytest.fixture(scope="session")
def data_dir(request):
    return request.config.rootpath / "tests" / DATA_DIR_NAME


@pytest.fixture
def unit_grid():
    """Empty 16^3 grid with origin 0 and pitch 1 (voxel == world units)."""
    return VoxelGrid(
        values=np.zeros((16, 16, 16), dtype=np.uint8),
        transform=GridTransform(origin=np.zeros(3), pitch=1.0),
    )


def make_molecule(positions, radius=1.7, molecule_id="m"):
    atoms = [
        AtomRecord(serial=i + 1, element="C", position=tuple(map(float, p)),
                   vdw_radius=radius)
        for i, p in enumerate(positions)
    ]
    return Molecule(id=molecule_id, atoms=atoms)


def grid_from_array(values, pitch=1.0):
    arr = np.asarray(values, dtype=np.uint8)
    return VoxelGrid(values=arr, transform=GridTransform(origin=np.zeros(3), pitch=pitch))
