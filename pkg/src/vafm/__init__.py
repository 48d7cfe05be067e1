"""Virtual AFM imaging pipeline: structures to voxel grids to height-map views.

The package turns protein structures (.pdb) or triangle meshes (.obj) into a
deterministic image dataset: a 256^3 voxelization, a 32^3 ground-truth grid,
and 25 seeded orthographic height-map renders per structure, tied together by
a JSON Lines manifest.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateGeometry,
    EmptyStructure,
    InsufficientData,
    InvalidConfig,
    MalformedRecord,
    ManifestError,
    ShapeMismatch,
    VafmError,
    VoxFileError,
)
from .molecule import (
    Aabb,
    AtomRecord,
    Molecule,
    TriangleMesh,
    compute_aabb,
    parse_obj,
    parse_pdb,
    write_obj,
)
from .views import (
    Rotation,
    SplitMix64,
    ViewSpec,
    derive_seed,
    fnv1a64,
    generate_viewset,
    sample_rotation,
)
from .voxel import (
    GridTransform,
    VoxelGrid,
    downsample,
    fit_transform,
    rasterize_atoms,
    solid_fill,
    voxelize_atoms,
    voxelize_mesh,
)
from .render import (
    HeightMap,
    RgbImage,
    encode_png,
    render_heightmap,
    shade,
)
from .voxfile import (
    decode_voxfile,
    encode_voxfile,
    inspect_voxfile,
    read_voxfile,
    write_voxfile,
)
from .metrics import (
    EvalReport,
    SampleScore,
    batch_eval,
    bce,
    format_table,
    iou,
    iou_counts,
)
from .dataset import (
    ManifestEntry,
    ProteinSample,
    build_dataset,
    build_sample,
    expand_repetitions,
    load_manifest,
    read_manifest,
    save_manifest,
    split_dataset,
    write_manifest,
)
from .primitives import icosphere, unit_cube

__all__ = [
    "__version__",
    "Aabb",
    "AtomRecord",
    "DegenerateGeometry",
    "EmptyStructure",
    "EvalReport",
    "GridTransform",
    "HeightMap",
    "InsufficientData",
    "InvalidConfig",
    "MalformedRecord",
    "ManifestEntry",
    "ManifestError",
    "Molecule",
    "ProteinSample",
    "RgbImage",
    "Rotation",
    "SampleScore",
    "ShapeMismatch",
    "SplitMix64",
    "TriangleMesh",
    "VafmError",
    "ViewSpec",
    "VoxFileError",
    "VoxelGrid",
    "batch_eval",
    "bce",
    "build_dataset",
    "build_sample",
    "compute_aabb",
    "decode_voxfile",
    "derive_seed",
    "downsample",
    "encode_png",
    "encode_voxfile",
    "expand_repetitions",
    "fit_transform",
    "fnv1a64",
    "format_table",
    "generate_viewset",
    "icosphere",
    "inspect_voxfile",
    "iou",
    "iou_counts",
    "load_manifest",
    "parse_obj",
    "parse_pdb",
    "rasterize_atoms",
    "read_manifest",
    "read_voxfile",
    "render_heightmap",
    "sample_rotation",
    "save_manifest",
    "shade",
    "solid_fill",
    "split_dataset",
    "unit_cube",
    "voxelize_atoms",
    "voxelize_mesh",
    "write_manifest",
    "write_obj",
    "write_voxfile",
]
