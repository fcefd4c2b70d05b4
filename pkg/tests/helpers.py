"""Shared test oracles: brute-force convolution and central finite
differences. These stay independent of the implementation paths they
check."""

import numpy as np


def conv2d_bruteforce(x, kernel, bias=None, padding=(0, 0), stride=(1, 1)):
    """Direct nested-loop cross-correlation with zero padding."""
    B, Cin, H, W = x.shape
    Cout, _, kh, kw = kernel.shape
    ph, pw = padding
    sh, sw = stride
    Ho = (H + 2 * ph - kh) // sh + 1
    Wo = (W + 2 * pw - kw) // sw + 1
    out = np.zeros((B, Cout, Ho, Wo), dtype=x.dtype)
    for b in range(B):
        for o in range(Cout):
            for y in range(Ho):
                for xx in range(Wo):
                    acc = 0.0
                    for i in range(Cin):
                        for dy in range(kh):
                            for dx in range(kw):
                                yy = y * sh + dy - ph
                                xx2 = xx * sw + dx - pw
                                if 0 <= yy < H and 0 <= xx2 < W:
                                    acc += x[b, i, yy, xx2] * kernel[o, i, dy, dx]
                    out[b, o, y, xx] = acc + (bias[o] if bias is not None else 0.0)
    return out


def finite_difference_grad(f, x, eps=1e-5):
    """Central finite differences of a scalar function w.r.t. every entry
    of x (float64)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * eps)
    return grad


def relative_error(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return np.abs(a - b).max() / denom
