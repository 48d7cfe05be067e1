"""Multi-view occupancy reconstruction trainer for virtual AFM datasets."""

from .data import Bundle, Entry, load_bundle, read_manifest
from .errors import AfmReconError, DataError, InvalidConfig, ShapeMismatch
from .model import Decoder, Encoder, Fusion, ModelConfig, ReconNet, Refiner
from .train import (
    TrainReport,
    evaluate,
    export_predictions,
    load_checkpoint,
    train,
    voxel_iou,
)
from .voxio import read_voxels, write_voxels

__all__ = [
    "AfmReconError",
    "Bundle",
    "DataError",
    "Decoder",
    "Encoder",
    "Entry",
    "Fusion",
    "InvalidConfig",
    "ModelConfig",
    "ReconNet",
    "Refiner",
    "ShapeMismatch",
    "TrainReport",
    "evaluate",
    "export_predictions",
    "load_bundle",
    "load_checkpoint",
    "read_manifest",
    "read_voxels",
    "train",
    "voxel_iou",
    "write_voxels",
]
