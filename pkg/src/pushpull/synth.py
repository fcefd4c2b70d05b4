"""Deterministic synthetic datasets for desk-scale runs.

These stand in for MNIST/CIFAR when the real binary files are not on
disk: a 10-class rendered-digit set (1x28x28) and a 10-class smooth color
pattern set (3x32x32). Generation is a pure function of the seed.
"""

import numpy as np

from .data import Dataset
from .pull import _resize_matrix_1d

# 5x7 glyph bitmaps for digits 0-9
_GLYPHS = [
    "01110 10001 10011 10101 11001 10001 01110",
    "00100 01100 00100 00100 00100 00100 01110",
    "01110 10001 00001 00110 01000 10000 11111",
    "11110 00001 00001 01110 00001 00001 11110",
    "00010 00110 01010 10010 11111 00010 00010",
    "11111 10000 11110 00001 00001 10001 01110",
    "00110 01000 10000 11110 10001 10001 01110",
    "11111 00001 00010 00100 01000 01000 01000",
    "01110 10001 10001 01110 10001 10001 01110",
    "01110 10001 10001 01111 00001 00010 01100",
]


def _glyph(d):
    rows = _GLYPHS[d].split()
    return np.array([[float(c) for c in row] for row in rows])


def bilinear_resize(img, out_h, out_w):
    """Corner-aligned separable bilinear resize of a 2-D array."""
    rh = _resize_matrix_1d(img.shape[0], out_h)
    rw = _resize_matrix_1d(img.shape[1], out_w)
    return rh @ img @ rw.T


def _smooth3(img):
    p = np.pad(img, 1)
    return (p[:-2, :-2] + p[:-2, 1:-1] + p[:-2, 2:]
            + p[1:-1, :-2] + p[1:-1, 1:-1] + p[1:-1, 2:]
            + p[2:, :-2] + p[2:, 1:-1] + p[2:, 2:]) / 9.0


def _render_digit(d, rng, side=28):
    h = rng.integers(14, 23)
    w = int(np.clip(h * 5 / 7 * rng.uniform(0.75, 1.25), 6, side - 2))
    glyph = bilinear_resize(_glyph(d), h, w)
    # cheap shear: per-row integer horizontal offset
    slope = rng.uniform(-0.2, 0.2)
    sheared = np.zeros_like(glyph)
    for r in range(h):
        off = int(round(slope * (r - h / 2)))
        sheared[r] = np.roll(glyph[r], off)
    img = np.zeros((side, side))
    # centered like MNIST, with small position jitter
    y0 = int(np.clip((side - h) // 2 + rng.integers(-3, 4), 0, side - h))
    x0 = int(np.clip((side - w) // 2 + rng.integers(-3, 4), 0, side - w))
    # near-saturated strokes, like handwritten digits scanned at 8 bits
    img[y0:y0 + h, x0:x0 + w] = sheared * rng.uniform(0.85, 1.0)
    return np.clip(_smooth3(img), 0.0, 1.0)


def synthetic_digits(n_per_class, seed=0, name="synth-digits"):
    """Rendered digits 0-9 with random scale, aspect, shear, position and
    stroke intensity; 1x28x28 images in [0, 1]."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for i in range(n_per_class):
        for d in range(10):
            images.append(_render_digit(d, rng)[None])
            labels.append(d)
    order = rng.permutation(len(labels))
    return Dataset(np.stack(images).astype(np.float32)[order],
                   np.array(labels, dtype=np.int64)[order], name, 10)


def synthetic_rgb(n_per_class, seed=0, name="synth-rgb", side=32):
    """Ten smooth color-pattern classes with per-image brightness, shift
    and texture jitter; 3xSxS images in [0, 1]."""
    rng = np.random.default_rng(seed)
    protos = []
    for c in range(10):
        crng = np.random.default_rng((seed, c))
        low = crng.uniform(0, 1, (3, 6, 6))
        protos.append(np.stack([bilinear_resize(ch, side, side) for ch in low]))
    images, labels = [], []
    for i in range(n_per_class):
        for c in range(10):
            img = protos[c] * rng.uniform(0.6, 1.0)
            img = np.roll(img, rng.integers(-4, 5, size=2), axis=(1, 2))
            img = img + rng.normal(0, 0.05, img.shape)
            images.append(np.clip(img, 0, 1))
            labels.append(c)
    order = rng.permutation(len(labels))
    return Dataset(np.stack(images).astype(np.float32)[order],
                   np.array(labels, dtype=np.int64)[order], name, 10)
