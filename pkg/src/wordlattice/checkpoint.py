"""Deterministic named-tensor container.

A checkpoint is a JSON shape manifest followed by raw C-order buffers in
manifest order. Unlike zip-based containers the bytes depend only on the
tensor contents, so identical runs write identical files.
"""

from __future__ import annotations

import json

import numpy as np

MAGIC = b"WLTENSOR1\n"


def save_tensors(path, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    names = sorted(tensors)
    manifest = {
        "meta": meta or {},
        "tensors": [
            {
                "name": name,
                "dtype": str(tensors[name].dtype),
                "shape": list(tensors[name].shape),
            }
            for name in names
        ],
    }
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(json.dumps(manifest, sort_keys=True).encode("utf-8"))
        f.write(b"\n")
        for name in names:
            f.write(np.ascontiguousarray(tensors[name]).tobytes())


def load_tensors(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a tensor container")
        manifest = json.loads(f.readline().decode("utf-8"))
        tensors = {}
        for spec in manifest["tensors"]:
            shape = tuple(spec["shape"])
            dtype = np.dtype(spec["dtype"])
            n_bytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64))
            buf = f.read(n_bytes)
            if len(buf) != n_bytes:
                raise ValueError(f"{path}: truncated tensor {spec['name']}")
            tensors[spec["name"]] = np.frombuffer(buf, dtype=dtype).reshape(shape).copy()
    return tensors, manifest.get("meta", {})
