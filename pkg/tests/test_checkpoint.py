"""Checkpoint archive format, round trips, and corruption handling."""

import numpy as np
import pytest

from latentswap.checkpoint import (
    fingerprint,
    load_checkpoint,
    read_tensor_archive,
    save_checkpoint,
    write_tensor_archive,
)
from latentswap.errors import CheckpointError
from latentswap.model import encode

from conftest import random_image


class TestTensorArchive:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        tensors = {
            "a.w": rng.standard_normal((3, 4, 4, 2)).astype(np.float32),
            "b.bias": rng.standard_normal((7,)).astype(np.float32),
            "scalarish": np.float32(rng.standard_normal(())),
        }
        path = tmp_path / "t.bin"
        write_tensor_archive(path, tensors)
        back = read_tensor_archive(path)
        assert set(back) == set(tensors)
        for k in tensors:
            assert np.array_equal(back[k], np.asarray(tensors[k], dtype=np.float32))

    def test_truncation_names_tensor(self, tmp_path):
        path = tmp_path / "t.bin"
        write_tensor_archive(path, {"enc.w": np.ones((4, 4), np.float32)})
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(CheckpointError, match="enc.w"):
            read_tensor_archive(path)

    def test_unknown_dtype_rejected(self, tmp_path):
        path = tmp_path / "t.bin"
        write_tensor_archive(path, {"x": np.ones(2, np.float32)})
        raw = bytearray(path.read_bytes())
        raw[4 + 4 + 1] = 9  # dtype byte sits after count, name_len, name "x"
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="dtype"):
            read_tensor_archive(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "t.bin"
        write_tensor_archive(path, {"x": np.ones(2, np.float32)})
        path.write_bytes(path.read_bytes() + b"JUNK")
        with pytest.raises(CheckpointError, match="trailing"):
            read_tensor_archive(path)

    def test_float64_not_storable(self, tmp_path):
        with pytest.raises(CheckpointError):
            write_tensor_archive(tmp_path / "t.bin", {"x": np.ones(2, np.float64)})


class TestCheckpointDir:
    def save(self, tmp_path, model):
        return save_checkpoint(tmp_path / "ckpt", model, ["bangs", "smile"], 17,
                               loss_log_lines=["{}"])

    def test_roundtrip_bitwise(self, tmp_path, perturbed_model):
        ckpt = self.save(tmp_path, perturbed_model)
        loaded, manifest, _, _ = load_checkpoint(ckpt)
        assert manifest["iteration"] == 17
        assert manifest["attribute_names"] == ["bangs", "smile"]
        for p, q in zip(perturbed_model.all_parameters(), loaded.all_parameters()):
            assert p.name == q.name
            assert np.array_equal(p.data, q.data)

    def test_forward_identical_after_reload(self, tmp_path, perturbed_model):
        ckpt = self.save(tmp_path, perturbed_model)
        loaded, _, _, _ = load_checkpoint(ckpt)
        img = random_image(np.random.default_rng(3))
        z1 = encode(img, perturbed_model)
        z2 = encode(img, loaded)
        assert all(np.array_equal(a, b) for a, b in zip(z1.parts, z2.parts))

    def test_fingerprint_tracks_content(self, tmp_path, perturbed_model, tiny_model):
        c1 = self.save(tmp_path, perturbed_model)
        f1 = fingerprint(c1)
        assert f1 == fingerprint(c1)
        c2 = save_checkpoint(tmp_path / "other", tiny_model, ["bangs", "smile"], 17,
                             loss_log_lines=["{}"])
        assert f1 != fingerprint(c2)

    def test_attribute_count_mismatch(self, tmp_path, perturbed_model):
        ckpt = save_checkpoint(tmp_path / "ckpt", perturbed_model, ["a", "b", "c"], 0)
        with pytest.raises(CheckpointError, match="attribute names"):
            load_checkpoint(ckpt)

    def test_missing_tensor_named(self, tmp_path, perturbed_model):
        ckpt = self.save(tmp_path, perturbed_model)
        tensors = read_tensor_archive(ckpt / "encoder.bin")
        victim = next(iter(tensors))
        del tensors[victim]
        write_tensor_archive(ckpt / "encoder.bin", tensors)
        with pytest.raises(CheckpointError, match=victim):
            load_checkpoint(ckpt)

    def test_version_mismatch(self, tmp_path, perturbed_model):
        import json

        ckpt = self.save(tmp_path, perturbed_model)
        manifest = json.loads((ckpt / "manifest.json").read_text())
        manifest["format_version"] = 99
        (ckpt / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(CheckpointError, match="format_version"):
            load_checkpoint(ckpt)
