"""Derivation of the pull kernel from the push kernel.

The pull kernel is the push kernel inverted in polarity and spatially
upsampled by a factor ``h`` using corner-aligned bilinear interpolation.
The whole transform is linear in the push weights: for a given (kernel
size, h) it is one fixed matrix, whose transpose gives the exact adjoint
used during backpropagation.
"""

from functools import lru_cache

import numpy as np

from .errors import ConfigError


def pull_kernel_size(k, h):
    """Smallest odd integer >= round(k*h); round() is half-up."""
    if h < 1:
        raise ConfigError(f"upsample factor must be >= 1, got {h}")
    r = int(np.floor(k * h + 0.5))
    return r if r % 2 == 1 else r + 1


@lru_cache(maxsize=None)
def _resize_matrix_1d(src, dst):
    """(dst, src) corner-aligned bilinear interpolation weights."""
    m = np.zeros((dst, src))
    if src == 1:
        m[:, 0] = 1.0
        return m
    scale = (src - 1) / (dst - 1) if dst > 1 else 0.0
    for t in range(dst):
        s = t * scale if dst > 1 else (src - 1) / 2.0
        i0 = min(int(np.floor(s)), src - 1)
        i1 = min(i0 + 1, src - 1)
        f = s - i0
        m[t, i0] += 1.0 - f
        m[t, i1] += f
    return m


@lru_cache(maxsize=None)
def resize_matrix(src, dst):
    """(dst*dst, src*src) separable bilinear resize operator, row-major."""
    m1 = _resize_matrix_1d(src, dst)
    return np.kron(m1, m1)


def derive_pull(push, h):
    """Map a (Cout, Cin, k, k) push kernel to its (Cout, Cin, k', k') pull
    kernel.  For h == 1 this is exactly -push."""
    if h < 1:
        raise ConfigError(f"upsample factor must be >= 1, got {h}")
    cout, cin, k, k2 = push.shape
    kp = pull_kernel_size(k, h)
    mat = resize_matrix(k, kp)
    flat = push.reshape(cout * cin, k * k)
    pull = -(flat @ mat.T.astype(push.dtype))
    return pull.reshape(cout, cin, kp, kp)


def derive_pull_adjoint(grad_pull, k, h):
    """Adjoint of derive_pull: gradient w.r.t. the push kernel given the
    gradient w.r.t. the pull kernel."""
    cout, cin, kp, kp2 = grad_pull.shape
    mat = resize_matrix(k, kp)
    flat = grad_pull.reshape(cout * cin, kp * kp)
    grad_push = -(flat @ mat.astype(grad_pull.dtype))
    return grad_push.reshape(cout, cin, k, k)
