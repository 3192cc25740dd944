"""Checkpoint directories: ``manifest.json`` plus a little-endian float32 blob."""
from __future__ import annotations

import json
import os
import shutil
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ModelConfig
from .errors import CheckpointMismatch
from .model import init_params

FORMAT_VERSION = 1
_LE_F32 = np.dtype("<f4")


def expected_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    # cheap: init a throwaway model and read off the shapes
    return {k: v.shape for k, v in init_params(cfg, 0).items()}


def save_checkpoint(path, cfg: ModelConfig, params: dict, meta: Optional[dict] = None) -> Path:
    """Write atomically: the directory is assembled under a temp name and renamed."""
    path = Path(path)
    shapes = expected_shapes(cfg)
    if set(shapes) != set(params) or any(tuple(params[k].shape) != shapes[k] for k in shapes):
        raise CheckpointMismatch("parameters do not match the model config")
    index = []
    offset = 0
    blobs = []
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype=_LE_F32)
        index.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.size
    manifest = {"format_version": FORMAT_VERSION, "config": cfg.to_dict(), "tensors": index, "meta": meta or {}}
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=path.parent, prefix=f".{path.name}."))
    try:
        (tmp / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        (tmp / "weights.bin").write_bytes(b"".join(blobs))
        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return path


def load_checkpoint(path, expect: Optional[ModelConfig] = None) -> tuple[ModelConfig, dict, dict]:
    """Returns ``(config, params, meta)``. With ``expect`` given, any config
    difference raises ``CheckpointMismatch``."""
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointMismatch(f"unsupported checkpoint format {manifest.get('format_version')!r}")
    cfg = ModelConfig.from_dict(manifest["config"])
    if expect is not None and expect != cfg:
        raise CheckpointMismatch(f"checkpoint config {cfg} differs from expected {expect}")
    blob = np.frombuffer((path / "weights.bin").read_bytes(), dtype=_LE_F32)
    shapes = expected_shapes(cfg)
    params = {}
    for entry in manifest["tensors"]:
        name, shape, off = entry["name"], tuple(entry["shape"]), entry["offset"]
        if shapes.get(name) != shape:
            raise CheckpointMismatch(f"tensor {name} has shape {shape}, config implies {shapes.get(name)}")
        size = int(np.prod(shape))
        if off + size > blob.size:
            raise CheckpointMismatch(f"weights.bin is truncated at tensor {name}")
        params[name] = blob[off : off + size].reshape(shape).astype(np.float32)
    missing = set(shapes) - set(params)
    if missing:
        raise CheckpointMismatch(f"missing tensors: {sorted(missing)}")
    return cfg, params, manifest.get("meta", {})
