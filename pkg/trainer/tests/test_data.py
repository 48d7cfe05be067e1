"""Volume file IO and dataset loading against builder-generated files."""

import json
import struct
import zlib

import numpy as np
import pytest

from afmrecon import DataError, load_bundle, read_manifest, read_voxels, write_voxels


class TestVoxio:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        values = (rng.random((5, 6, 7)) < 0.4).astype(np.uint8)
        path = tmp_path / "v.afmv"
        write_voxels(path, values)
        back = read_voxels(path)
        assert back.dtype == np.uint8
        np.testing.assert_array_equal(back, values)

    def test_nonzero_values_written_as_ones(self, tmp_path):
        values = np.array([[[0, 2], [255, 1]]], dtype=np.uint8)
        path = tmp_path / "v.afmv"
        write_voxels(path, values)
        np.testing.assert_array_equal(read_voxels(path), values != 0)

    def test_reads_builder_output(self, dataset_dir):
        entries = read_manifest(dataset_dir / "manifest.jsonl")
        volume = read_voxels(dataset_dir / entries[0].voxel_path)
        assert volume.shape == (32, 32, 32)
        assert set(np.unique(volume)) <= {0, 1}
        assert volume.sum() > 0

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "v.afmv"
        write_voxels(path, np.ones((2, 2, 2), dtype=np.uint8))
        raw = bytearray(path.read_bytes())
        raw[0] = ord("X")
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError, match="magic"):
            read_voxels(path)

    def test_crc_mismatch(self, tmp_path):
        path = tmp_path / "v.afmv"
        write_voxels(path, np.ones((4, 4, 4), dtype=np.uint8))
        raw = bytearray(path.read_bytes())
        raw[-5] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError, match="CRC"):
            read_voxels(path)

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "v.afmv"
        path.write_bytes(b"AFMV\x01")
        with pytest.raises(DataError, match="header"):
            read_voxels(path)

    def test_zero_dimension(self, tmp_path):
        path = tmp_path / "v.afmv"
        header = struct.pack("<4sHHHH", b"AFMV", 1, 0, 4, 4)
        path.write_bytes(header + struct.pack("<I", zlib.crc32(b"")))
        with pytest.raises(DataError, match="dimension"):
            read_voxels(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "v.afmv"
        write_voxels(path, np.ones((2, 2, 2), dtype=np.uint8))
        raw = bytearray(path.read_bytes())
        raw[4:6] = struct.pack("<H", 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError, match="version"):
            read_voxels(path)

    def test_write_rejects_oversized_dims(self, tmp_path):
        values = np.zeros((1, 1, 70000), dtype=np.uint8)
        with pytest.raises(DataError, match="dimension"):
            write_voxels(tmp_path / "v.afmv", values)


class TestManifest:
    def test_reads_generated_manifest(self, dataset_dir):
        entries = read_manifest(dataset_dir / "manifest.jsonl")
        assert len(entries) == 20
        assert {e.split for e in entries} == {"train", "val"}
        by_pid = {}
        for e in entries:
            by_pid.setdefault(e.protein_id, []).append(e)
            assert len(e.view_paths) == len(e.view_indices) == 3
            assert e.voxel_path.endswith("voxel_32.afmv")
        assert all(len(group) == 4 for group in by_pid.values())

    def test_bad_json_line_reported(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        good = json.dumps(
            {
                "protein_id": "p", "split": "train", "repetition": 0,
                "view_indices": [0],
                "voxel_path": "p/voxel_32.afmv",
                "rotations_path": "p/rotations.json",
                "view_paths": ["p/views/view_00.png"],
            }
        )
        path.write_text(good + "\nnot json\n")
        with pytest.raises(DataError, match="manifest.jsonl:2"):
            read_manifest(path)

    def test_missing_key_reported(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text('{"protein_id": "p"}\n')
        with pytest.raises(DataError, match="split"):
            read_manifest(path)


class TestBundle:
    def test_loads_images_and_truths(self, dataset_dir):
        bundle = load_bundle(dataset_dir)
        assert len(bundle.entries) == 20
        img = bundle.images[0]
        assert img.shape == (3, 224, 224, 3)
        assert img.dtype == np.float32
        assert 0.0 <= img.min() and img.max() <= 1.0
        truth = bundle.truths[0]
        assert truth.shape == (32, 32, 32)
        assert truth.dtype == np.float32
        assert set(np.unique(truth)) <= {0.0, 1.0}

    def test_split_indices(self, dataset_dir):
        bundle = load_bundle(dataset_dir)
        train = bundle.indices_for("train")
        val = bundle.indices_for("val")
        assert len(train) == 16
        assert len(val) == 4
        assert set(train).isdisjoint(val)

    def test_truth_shared_across_repetitions(self, dataset_dir):
        bundle = load_bundle(dataset_dir)
        by_pid = {}
        for i, entry in enumerate(bundle.entries):
            by_pid.setdefault(entry.protein_id, []).append(i)
        reps = next(iter(by_pid.values()))
        first = bundle.truths[reps[0]]
        assert all(bundle.truths[i] is first for i in reps)

    def test_config_echoed(self, dataset_dir):
        bundle = load_bundle(dataset_dir)
        assert bundle.config["image_res"] == 224
        assert bundle.config["gt_res"] == 32
        assert bundle.views_per_entry == 3

    def test_missing_dataset(self, tmp_path):
        with pytest.raises(DataError, match="dataset_config.json"):
            load_bundle(tmp_path)

    def test_missing_view_file(self, dataset_dir, tmp_path):
        import shutil

        clone = tmp_path / "clone"
        shutil.copytree(dataset_dir, clone)
        entry = read_manifest(clone / "manifest.jsonl")[0]
        (clone / entry.view_paths[0]).unlink()
        with pytest.raises(DataError):
            load_bundle(clone)
