"""Self-describing checkpoint container.

Layout: magic ``PPCK``, format version (u32 LE), header length (u64 LE),
a JSON header (model spec, seed, named tensor table), then raw tensor
bytes, little-endian, in table order. Writing is fully deterministic:
identical parameters produce byte-identical files.
"""

import json
import struct

import numpy as np

from .errors import DataFormatError
from .models import ModelSpec, build_model

MAGIC = b"PPCK"
FORMAT_VERSION = 1


def save_checkpoint(path, model, seed=0, extra=None):
    tensors = []
    blobs = []
    for p in model.params():
        arr = np.ascontiguousarray(p.value, dtype=p.value.dtype.newbyteorder("<"))
        tensors.append({
            "name": p.name,
            "shape": list(arr.shape),
            "dtype": arr.dtype.str,
            "trainable": p.trainable,
            "nbytes": arr.nbytes,
        })
        blobs.append(arr.tobytes())
    header = {
        "format_version": FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "seed": int(seed),
        "tensors": tensors,
    }
    if extra:
        header["extra"] = extra
    payload = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQ", FORMAT_VERSION, len(payload)))
        f.write(payload)
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path):
    """Rebuild the model described by the checkpoint and restore all
    parameter tensors. Returns (model, header)."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise DataFormatError(f"bad checkpoint magic {magic!r}", path=path, offset=0)
        version, hlen = struct.unpack("<IQ", f.read(12))
        if version != FORMAT_VERSION:
            raise DataFormatError(f"unsupported checkpoint version {version}", path=path)
        header = json.loads(f.read(hlen).decode())
        model = build_model(ModelSpec.from_dict(header["spec"]))
        named = model.named_params()
        for t in header["tensors"]:
            raw = f.read(t["nbytes"])
            if len(raw) != t["nbytes"]:
                raise DataFormatError(
                    f"truncated tensor {t['name']}", path=path, offset=f.tell())
            arr = np.frombuffer(raw, dtype=np.dtype(t["dtype"])).reshape(t["shape"])
            p = named.get(t["name"])
            if p is None or list(p.value.shape) != t["shape"]:
                raise DataFormatError(
                    f"tensor {t['name']} with shape {t['shape']} does not match "
                    f"the rebuilt model", path=path)
            p.value = arr.copy()
            p.grad = np.zeros_like(p.value)
    return model, header
