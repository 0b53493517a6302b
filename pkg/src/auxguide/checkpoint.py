"""Checkpoint format: ``manifest.json`` plus one raw little-endian float64 blob per tensor.

manifest.json::

    {"format": "auxguide-checkpoint", "version": 1, "kind": str, "config": {...},
     "tensors": [{"name": str, "shape": [int, ...], "dtype": "<f8", "file": str}, ...]}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT = "auxguide-checkpoint"
VERSION = 1


def save_checkpoint(directory: str | Path, kind: str, params: dict, config: dict) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype="<f8")
        fname = f"{name}.f64"
        (directory / fname).write_bytes(arr.tobytes())
        entries.append({"name": name, "shape": list(arr.shape), "dtype": "<f8", "file": fname})
    manifest = {"format": FORMAT, "version": VERSION, "kind": kind, "config": config, "tensors": entries}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory


def load_checkpoint(directory: str | Path, kind: str | None = None) -> tuple[dict, dict]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("format") != FORMAT:
        raise ValueError(f"{directory} is not an {FORMAT} directory")
    if kind is not None and manifest.get("kind") != kind:
        raise ValueError(f"expected a {kind!r} checkpoint, found {manifest.get('kind')!r}")
    params = {}
    for e in manifest["tensors"]:
        raw = (directory / e["file"]).read_bytes()
        params[e["name"]] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(e["shape"])
    return params, manifest["config"]
