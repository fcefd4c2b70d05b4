"""Dataset loading: MNIST IDX and CIFAR binary formats, stratified
subsampling, and per-channel normalization.

Images are loaded to float32 in [0, 1], laid out (N, C, H, W). Corruption
is always applied on the [0, 1] scale; mean/std normalization comes after.
"""

import os
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DataFormatError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

# Declared defaults; the harness config can override them.
NORMALIZATION = {
    "mnist": ((0.1307,), (0.3081,)),
    "cifar10": ((0.4914, 0.4822, 0.4465), (0.2470, 0.2435, 0.2616)),
    "cifar100": ((0.5071, 0.4865, 0.4409), (0.2673, 0.2564, 0.2762)),
}
DEFAULT_NORMALIZATION = ((0.5,), (0.5,))


@dataclass
class Dataset:
    images: np.ndarray            # (N, C, H, W) float32 in [0, 1]
    labels: np.ndarray            # (N,) int64
    name: str
    class_count: int

    def __len__(self):
        return len(self.labels)


def _read_exact(f, n, path, what):
    buf = f.read(n)
    if len(buf) != n:
        raise DataFormatError(f"truncated {what}: expected {n} bytes, got {len(buf)}",
                              path=path, offset=f.tell() - len(buf))
    return buf


def load_mnist_idx(images_path, labels_path, name="mnist", class_count=10):
    """Parse the big-endian IDX pair (images magic 0x803, labels 0x801)."""
    with open(images_path, "rb") as f:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, images_path, "IDX header"))
        if magic != IDX_IMAGES_MAGIC:
            raise DataFormatError(
                f"bad IDX image magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}",
                path=images_path, offset=0)
        raw = _read_exact(f, n * rows * cols, images_path, "image data")
        images = np.frombuffer(raw, dtype=np.uint8).reshape(n, 1, rows, cols)
    with open(labels_path, "rb") as f:
        magic, n_labels = struct.unpack(">II", _read_exact(f, 8, labels_path, "IDX header"))
        if magic != IDX_LABELS_MAGIC:
            raise DataFormatError(
                f"bad IDX label magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}",
                path=labels_path, offset=0)
        labels = np.frombuffer(_read_exact(f, n_labels, labels_path, "label data"),
                               dtype=np.uint8).astype(np.int64)
    if n != n_labels:
        raise DataFormatError(
            f"image count {n} does not match label count {n_labels}",
            path=labels_path)
    return Dataset(images.astype(np.float32) / 255.0, labels, name, class_count)


def load_cifar_binary(paths, class_count=10, name=None):
    """Parse CIFAR binary batches: per record 1 label byte (2 for
    CIFAR-100, coarse then fine) followed by 3072 channel-major pixels."""
    label_bytes = 1 if class_count <= 10 else 2
    record = label_bytes + 3 * 32 * 32
    all_images, all_labels = [], []
    for path in paths:
        size = os.path.getsize(path)
        if size % record != 0:
            raise DataFormatError(
                f"file size {size} is not a multiple of the {record}-byte record",
                path=path)
        with open(path, "rb") as f:
            raw = np.frombuffer(f.read(), dtype=np.uint8).reshape(-1, record)
        all_labels.append(raw[:, label_bytes - 1].astype(np.int64))  # fine label
        all_images.append(raw[:, label_bytes:].reshape(-1, 3, 32, 32))
    images = np.concatenate(all_images)
    labels = np.concatenate(all_labels)
    if labels.max(initial=0) >= class_count:
        raise DataFormatError(
            f"observed label {labels.max()} exceeds class_count {class_count}",
            path=paths[-1])
    return Dataset(images.astype(np.float32) / 255.0, labels,
                   name or ("cifar100" if class_count == 100 else "cifar10"),
                   class_count)


def subsample(ds, n_per_class, seed):
    """Deterministic stratified sample with exactly n_per_class examples
    of every class, in shuffled order."""
    rng = np.random.default_rng(seed)
    chosen = []
    for c in range(ds.class_count):
        idx = np.flatnonzero(ds.labels == c)
        if len(idx) < n_per_class:
            raise ConfigError(
                f"class {c} has only {len(idx)} examples, need {n_per_class}")
        chosen.append(rng.permutation(idx)[:n_per_class])
    order = rng.permutation(np.concatenate(chosen))
    return replace(ds, images=ds.images[order], labels=ds.labels[order])


def normalize(images, mean, std):
    """(pixel - mean)/std per channel; applied after any perturbation."""
    mean = np.asarray(mean, dtype=images.dtype)
    std = np.asarray(std, dtype=images.dtype)
    if np.any(std <= 0):
        raise ConfigError(f"std must be positive, got {std}")
    return (images - mean[:, None, None]) / std[:, None, None]


def denormalize(images, mean, std):
    mean = np.asarray(mean, dtype=images.dtype)
    std = np.asarray(std, dtype=images.dtype)
    return images * std[:, None, None] + mean[:, None, None]


def normalization_for(name):
    return NORMALIZATION.get(name, DEFAULT_NORMALIZATION)
