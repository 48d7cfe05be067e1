import json

import numpy as np
import pytest

from vafm.errors import InsufficientData, InvalidConfig, ManifestError
from vafm.dataset import (
    REPETITIONS,
    ManifestEntry,
    build_dataset,
    build_sample,
    expand_repetitions,
    load_structure,
    read_manifest,
    split_dataset,
    write_manifest,
)
from vafm.primitives import unit_cube
from vafm.voxfile import read_voxfile
from tests.conftest import make_molecule


class TestSplit:
    def test_ten_proteins_eight_two(self):
        ids = [f"p{i:02d}" for i in range(10)]
        assignment = split_dataset(ids, seed=0)
        counts = {"train": 0, "val": 0}
        for split in assignment.values():
            counts[split] += 1
        assert counts == {"train": 8, "val": 2}

    def test_deterministic(self):
        ids = [f"p{i}" for i in range(7)]
        assert split_dataset(ids, 3) == split_dataset(ids, 3)

    def test_input_order_irrelevant(self):
        ids = [f"p{i}" for i in range(9)]
        assert split_dataset(ids, 1) == split_dataset(list(reversed(ids)), 1)

    def test_seed_changes_assignment(self):
        ids = [f"p{i:02d}" for i in range(12)]
        different = any(
            split_dataset(ids, 0) != split_dataset(ids, s) for s in range(1, 6)
        )
        assert different

    def test_two_proteins_minimum(self):
        assignment = split_dataset(["a", "b"], 0)
        assert sorted(assignment.values()) == ["train", "val"]

    def test_single_protein_rejected(self):
        with pytest.raises(InsufficientData):
            split_dataset(["only"], 0)

    def test_never_assigns_test(self):
        ids = [f"p{i}" for i in range(50)]
        assert set(split_dataset(ids, 9).values()) <= {"train", "val"}

    def test_floor_rule(self):
        # 7 proteins: floor(0.8 * 7) = 5 train
        ids = [f"p{i}" for i in range(7)]
        values = list(split_dataset(ids, 0).values())
        assert values.count("train") == 5
        assert values.count("val") == 2

    def test_bad_fraction(self):
        with pytest.raises(InvalidConfig):
            split_dataset(["a", "b", "c"], 0, train_frac=1.0)


class TestExpandRepetitions:
    def test_four_entries_per_protein(self):
        assignment = {"aa": "train", "bb": "val"}
        entries = expand_repetitions(assignment, n_views=5, seed=0)
        assert len(entries) == 2 * REPETITIONS
        for pid in assignment:
            reps = [e.repetition for e in entries if e.protein_id == pid]
            assert reps == [0, 1, 2, 3]

    def test_view_indices_distinct_and_in_range(self):
        entries = expand_repetitions({"aa": "train"}, n_views=10, seed=1)
        for entry in entries:
            assert len(entry.view_indices) == 10
            assert len(set(entry.view_indices)) == 10
            assert all(0 <= i < 25 for i in entry.view_indices)

    def test_three_views(self):
        entries = expand_repetitions({"aa": "train"}, n_views=3, seed=1)
        assert all(len(e.view_indices) == 3 for e in entries)

    def test_repetitions_differ(self):
        entries = expand_repetitions({"aa": "train"}, n_views=5, seed=0)
        subsets = {e.view_indices for e in entries}
        assert len(subsets) > 1

    def test_deterministic_per_seed(self):
        a = expand_repetitions({"aa": "train", "bb": "val"}, n_views=5, seed=7)
        b = expand_repetitions({"aa": "train", "bb": "val"}, n_views=5, seed=7)
        assert a == b

    def test_independent_of_other_proteins(self):
        solo = expand_repetitions({"aa": "train"}, n_views=5, seed=7)
        pair = expand_repetitions({"aa": "train", "zz": "val"}, n_views=5, seed=7)
        aa_pair = [e for e in pair if e.protein_id == "aa"]
        assert solo == aa_pair

    def test_paths_follow_layout(self):
        entry = expand_repetitions({"aa": "train"}, n_views=2, seed=0)[0]
        assert entry.voxel_path == "aa/voxel_32.afmv"
        assert entry.rotations_path == "aa/rotations.json"
        assert all(p.startswith("aa/views/view_") for p in entry.view_paths)

    def test_views_out_of_range(self):
        with pytest.raises(InvalidConfig):
            expand_repetitions({"aa": "train"}, n_views=26, seed=0)
        with pytest.raises(InvalidConfig):
            expand_repetitions({"aa": "train"}, n_views=0, seed=0)


class TestManifestIo:
    def entries(self):
        return expand_repetitions({"aa": "train", "bb": "val"}, n_views=3, seed=5)

    def test_round_trip(self):
        entries = self.entries()
        assert read_manifest(write_manifest(entries)) == entries

    def test_one_json_object_per_line(self):
        text = write_manifest(self.entries())
        lines = [ln for ln in text.splitlines() if ln.strip()]
        assert len(lines) == 8
        for line in lines:
            json.loads(line)

    def test_key_order_fixed(self):
        first = write_manifest(self.entries()).splitlines()[0]
        keys = list(json.loads(first).keys())
        assert keys == [
            "protein_id", "split", "repetition", "view_indices",
            "voxel_path", "rotations_path", "view_paths",
        ]

    def test_bad_json_reports_line(self):
        text = write_manifest(self.entries())
        broken = text.splitlines()
        broken[2] = broken[2][:-1]  # drop closing brace
        with pytest.raises(ManifestError) as err:
            read_manifest("\n".join(broken))
        assert err.value.line == 3

    def test_missing_key_reports_line(self):
        entry = json.loads(write_manifest(self.entries()).splitlines()[0])
        del entry["split"]
        with pytest.raises(ManifestError) as err:
            read_manifest(json.dumps(entry))
        assert "split" in str(err.value)
        assert err.value.line == 1

    def test_blank_lines_ignored(self):
        text = write_manifest(self.entries())
        padded = "\n" + text.replace("\n", "\n\n")
        assert read_manifest(padded) == self.entries()


@pytest.fixture(scope="module")
def sample_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    mol = make_molecule(
        [(0.0, 0.0, 0.0), (4.0, 1.0, 0.0), (2.0, 3.0, 2.0)],
        radius=1.8, molecule_id="tri")
    sample = build_sample(
        mol, global_seed=11, out_dir=out,
        target_res=64, gt_res=16, image_res=64, n_views=4)
    return out, sample


class TestBuildSample:
    def test_layout(self, sample_dir):
        out, sample = sample_dir
        assert (out / "tri" / "voxel_16.afmv").is_file()
        assert (out / "tri" / "rotations.json").is_file()
        pngs = sorted((out / "tri" / "views").glob("view_*.png"))
        assert len(pngs) == 4
        assert sample.view_paths == [f"tri/views/view_{i:02d}.png" for i in range(4)]

    def test_voxel_file_valid(self, sample_dir):
        out, _ = sample_dir
        grid = read_voxfile(out / "tri" / "voxel_16.afmv")
        assert grid.dims == (16, 16, 16)
        assert grid.occupied_count > 0

    def test_rotations_json_content(self, sample_dir):
        out, _ = sample_dir
        data = json.loads((out / "tri" / "rotations.json").read_text())
        assert data["protein_id"] == "tri"
        assert data["global_seed"] == 11
        assert len(data["views"]) == 4
        quat = data["views"][0]["quaternion"]
        assert len(quat) == 4
        assert abs(sum(c * c for c in quat) - 1.0) < 1e-9

    def test_no_tmp_dir_left(self, sample_dir):
        out, _ = sample_dir
        assert not list(out.glob(".*.tmp"))

    def test_indivisible_gt_res(self, tmp_path):
        mol = make_molecule([(0.0, 0.0, 0.0)])
        with pytest.raises(InvalidConfig):
            build_sample(mol, 0, tmp_path, target_res=64, gt_res=7)

    def test_mesh_source(self, tmp_path):
        sample = build_sample(
            unit_cube(), 0, tmp_path, protein_id="box",
            target_res=32, gt_res=8, image_res=32, n_views=2)
        assert sample.protein_id == "box"
        grid = read_voxfile(tmp_path / "box" / "voxel_8.afmv")
        assert grid.occupied_count == 8**3


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    src = tmp_path_factory.mktemp("src")
    out = tmp_path_factory.mktemp("out")
    rng = np.random.default_rng(2)
    for i in range(3):
        coords = rng.normal(0, 2.5, (8, 3))
        lines = [
            f"ATOM  {j+1:>5}  C   ALA A{j+1:>4}    "
            f"{c[0]:8.3f}{c[1]:8.3f}{c[2]:8.3f}  1.00  0.00           C"
            for j, c in enumerate(coords)
        ]
        (src / f"m{i}.pdb").write_text("\n".join(lines) + "\n")
    result = build_dataset(
        sorted(src.glob("*.pdb")), out, global_seed=3,
        target_res=32, gt_res=8, image_res=32,
        n_views=6, views_per_entry=2, workers=1)
    return out, result


class TestBuildDataset:
    def test_all_built(self, built):
        out, result = built
        assert result.built == ["m0", "m1", "m2"]
        assert not result.failed
        assert len(result.entries) == 12

    def test_manifest_written(self, built):
        out, result = built
        entries = read_manifest((out / "manifest.jsonl").read_text())
        assert entries == result.entries

    def test_config_written(self, built):
        out, _ = built
        config = json.loads((out / "dataset_config.json").read_text())
        assert config["global_seed"] == 3
        assert config["gt_res"] == 8
        assert config["views_per_entry"] == 2
        assert "pipeline_version" in config

    def test_failure_isolated(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "ok1.pdb").write_text(
            "ATOM      1  C   ALA A   1       0.000   0.000   0.000"
            "  1.00  0.00           C\n")
        (src / "ok2.pdb").write_text(
            "ATOM      1  C   ALA A   1       1.000   0.000   0.000"
            "  1.00  0.00           C\n")
        (src / "bad.pdb").write_text("not a structure\n")
        result = build_dataset(
            sorted(src.glob("*.pdb")), tmp_path / "out", global_seed=0,
            target_res=16, gt_res=8, image_res=16, n_views=2,
            views_per_entry=1, workers=1)
        assert result.built == ["ok1", "ok2"]
        assert len(result.failed) == 1
        assert result.failed[0][0] == "bad"

    def test_single_protein_goes_to_train(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "solo.pdb").write_text(
            "ATOM      1  C   ALA A   1       0.000   0.000   0.000"
            "  1.00  0.00           C\n")
        messages = []
        result = build_dataset(
            sorted(src.glob("*.pdb")), tmp_path / "out", global_seed=0,
            target_res=16, gt_res=8, image_res=16, n_views=2,
            views_per_entry=1, workers=1, progress=messages.append)
        assert len(result.entries) == REPETITIONS
        assert all(e.split == "train" for e in result.entries)
        assert any("single" in m for m in messages)

    def test_views_per_entry_validated(self, tmp_path):
        with pytest.raises(InvalidConfig):
            build_dataset([], tmp_path, n_views=5, views_per_entry=6)


class TestLoadStructure:
    def test_pdb_by_suffix(self, data_dir):
        mol = load_structure(data_dir / "p1aa.pdb")
        assert mol.id == "p1aa"

    def test_obj_by_suffix(self, data_dir):
        mesh = load_structure(data_dir / "cube.obj")
        assert len(mesh.triangles) == 12

    def test_unknown_suffix(self, tmp_path):
        path = tmp_path / "thing.xyz"
        path.write_text("")
        with pytest.raises(InvalidConfig):
            load_structure(path)
