"""Checkpoint directory format.

A checkpoint is a directory holding:

  manifest.json        {format_version, model_config, attribute_names,
                        iteration, loss_history_path}
  encoder.bin          one tensor archive per network
  decoder.bin
  discriminator_1.bin
  discriminator_2.bin
  optimizer.bin        Adam moments for both parameter groups
  train_state.json     step counters, sampler cursors, RNG state, Adam t
  loss_log.jsonl       loss history up to `iteration` (the manifest points here)

Tensor archive layout (little-endian throughout):

  u32 tensor_count
  per tensor: u32 name_len | name utf-8 | u8 dtype (0 = f32) | u8 rank |
              u32 dims[rank] | f32 data[prod(dims)]
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .config import ModelConfig
from .errors import CheckpointError

FORMAT_VERSION = 1
ARCHIVES = (
    "encoder.bin",
    "decoder.bin",
    "discriminator_1.bin",
    "discriminator_2.bin",
    "optimizer.bin",
)


def write_tensor_archive(path, tensors):
    """Write an ordered {name: ndarray} mapping of float32 tensors."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            arr = np.asarray(arr)
            if arr.ndim:
                arr = np.ascontiguousarray(arr)  # keeps 0-d tensors rank 0
            if arr.dtype != np.float32:
                raise CheckpointError(f"tensor {name}: only float32 is storable, got {arr.dtype}")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<BB", 0, arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f4").tobytes())


def read_tensor_archive(path):
    path = Path(path)
    data = path.read_bytes()
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(data):
            raise CheckpointError(f"{path.name}: truncated while reading {what}")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    (count,) = struct.unpack("<I", take(4, "tensor count"))
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4, "name length"))
        name = take(name_len, "tensor name").decode("utf-8")
        dtype_code, rank = struct.unpack("<BB", take(2, f"{name} header"))
        if dtype_code != 0:
            raise CheckpointError(f"{path.name}: tensor {name} has unknown dtype {dtype_code}")
        dims = struct.unpack(f"<{rank}I", take(4 * rank, f"{name} dims"))
        n_items = int(np.prod(dims, dtype=np.int64)) if rank else 1
        raw = take(4 * n_items, f"tensor {name} data")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    if pos != len(data):
        raise CheckpointError(f"{path.name}: {len(data) - pos} trailing bytes after last tensor")
    return tensors


def _net_tensors(net):
    return {p.name: p.data for p in net.parameters()}


def save_checkpoint(ckpt_dir, model, attribute_names, iteration, g_opt=None, d_opt=None,
                    train_state=None, loss_log_lines=None):
    """Write a complete checkpoint directory; returns its path."""
    ckpt_dir = Path(ckpt_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "model_config": model.config.to_dict(),
        "attribute_names": list(attribute_names),
        "iteration": int(iteration),
        "loss_history_path": "loss_log.jsonl",
    }
    (ckpt_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    write_tensor_archive(ckpt_dir / "encoder.bin", _net_tensors(model.encoder))
    write_tensor_archive(ckpt_dir / "decoder.bin", _net_tensors(model.decoder))
    write_tensor_archive(ckpt_dir / "discriminator_1.bin", _net_tensors(model.d1))
    write_tensor_archive(ckpt_dir / "discriminator_2.bin", _net_tensors(model.d2))
    opt_tensors = {}
    if g_opt is not None:
        opt_tensors.update(g_opt.state_tensors("g"))
    if d_opt is not None:
        opt_tensors.update(d_opt.state_tensors("d"))
    write_tensor_archive(ckpt_dir / "optimizer.bin", opt_tensors)
    if train_state is not None:
        (ckpt_dir / "train_state.json").write_text(json.dumps(train_state, indent=2) + "\n")
    with open(ckpt_dir / "loss_log.jsonl", "w") as fh:
        for line in loss_log_lines or []:
            fh.write(line.rstrip("\n") + "\n")
    return ckpt_dir


def _load_into(net, tensors, archive_name):
    for p in net.parameters():
        if p.name not in tensors:
            raise CheckpointError(f"{archive_name}: missing tensor {p.name}")
        arr = tensors[p.name]
        if arr.shape != p.data.shape:
            raise CheckpointError(
                f"{archive_name}: tensor {p.name} has shape {arr.shape}, expected {p.data.shape}"
            )
        p.data = arr.astype(p.data.dtype, copy=True)
    extra = set(tensors) - {p.name for p in net.parameters()}
    if extra:
        raise CheckpointError(f"{archive_name}: unexpected tensors {sorted(extra)}")


def load_checkpoint(ckpt_dir):
    """Rebuild a ModelParams from a checkpoint directory.

    Returns (model, manifest, optimizer_tensors, train_state_dict).
    """
    from .model import ModelParams

    ckpt_dir = Path(ckpt_dir)
    manifest_path = ckpt_dir / "manifest.json"
    if not manifest_path.exists():
        raise CheckpointError(f"{ckpt_dir}: no manifest.json")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"manifest.json: format_version {manifest.get('format_version')} "
            f"unsupported (expected {FORMAT_VERSION})"
        )
    config = ModelConfig.from_dict(manifest["model_config"])
    names = manifest["attribute_names"]
    if len(names) != config.n_attributes:
        raise CheckpointError(
            f"manifest.json: {len(names)} attribute names but model_config says "
            f"n_attributes={config.n_attributes}"
        )
    model = ModelParams(config, seed=0)
    _load_into(model.encoder, read_tensor_archive(ckpt_dir / "encoder.bin"), "encoder.bin")
    _load_into(model.decoder, read_tensor_archive(ckpt_dir / "decoder.bin"), "decoder.bin")
    _load_into(model.d1, read_tensor_archive(ckpt_dir / "discriminator_1.bin"), "discriminator_1.bin")
    _load_into(model.d2, read_tensor_archive(ckpt_dir / "discriminator_2.bin"), "discriminator_2.bin")
    opt_tensors = read_tensor_archive(ckpt_dir / "optimizer.bin")
    state_path = ckpt_dir / "train_state.json"
    train_state = json.loads(state_path.read_text()) if state_path.exists() else None
    return model, manifest, opt_tensors, train_state


def fingerprint(ckpt_dir):
    """Content hash over the manifest and every tensor archive."""
    ckpt_dir = Path(ckpt_dir)
    h = hashlib.sha256()
    for name in ("manifest.json",) + ARCHIVES:
        path = ckpt_dir / name
        if path.exists():
            h.update(name.encode())
            h.update(path.read_bytes())
    return h.hexdigest()
