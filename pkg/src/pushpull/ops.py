"""Differentiable array primitives: convolution, rectification, pooling, affine, loss.

All operations act on plain numpy arrays. 4-D activations are laid out
(batch, channels, height, width); 4-D kernels (out_ch, in_ch, kh, kw).
Forward functions return new arrays; the matching ``*_backward`` functions
return exact adjoints. Dtype follows the input (float32 for training,
float64 for gradient checking).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError


def _pair(v):
    if isinstance(v, (tuple, list)):
        return int(v[0]), int(v[1])
    return int(v), int(v)


def conv_output_size(size, k, pad, stride):
    return (size + 2 * pad - k) // stride + 1


def _im2col(x_padded, kh, kw, sh, sw):
    """Return window view (B, Ho, Wo, Cin, kh, kw) of the padded input."""
    win = sliding_window_view(x_padded, (kh, kw), axis=(2, 3))
    win = win[:, :, ::sh, ::sw]               # (B, Cin, Ho, Wo, kh, kw)
    return win.transpose(0, 2, 3, 1, 4, 5)


def conv2d(x, kernel, bias=None, padding=(0, 0), stride=(1, 1)):
    """Cross-correlation with zero padding (no kernel flip).

    out[b,o,y,x] = bias[o] + sum_{i,dy,dx} x[b,i,y*sh+dy-ph, x*sw+dx-pw] * kernel[o,i,dy,dx]
    """
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and kernel, got {x.shape} and {kernel.shape}")
    B, Cin, H, W = x.shape
    Cout, Cin_k, kh, kw = kernel.shape
    ph, pw = _pair(padding)
    sh, sw = _pair(stride)
    if Cin != Cin_k:
        raise ShapeError(f"conv2d channel mismatch: input has {Cin} channels, kernel expects {Cin_k}")
    if H + 2 * ph < kh or W + 2 * pw < kw:
        raise ShapeError(
            f"conv2d kernel {kh}x{kw} does not fit padded input {H + 2 * ph}x{W + 2 * pw}")
    if bias is not None and bias.shape != (Cout,):
        raise ShapeError(f"conv2d bias shape {bias.shape} does not match {Cout} output channels")

    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    win = _im2col(xp, kh, kw, sh, sw)         # (B, Ho, Wo, Cin, kh, kw)
    B_, Ho, Wo = win.shape[:3]
    cols = win.reshape(B, Ho * Wo, Cin * kh * kw)
    out = cols @ kernel.reshape(Cout, -1).T   # (B, Ho*Wo, Cout)
    out = out.transpose(0, 2, 1).reshape(B, Cout, Ho, Wo)
    if bias is not None:
        out = out + bias[None, :, None, None]
    return np.ascontiguousarray(out)


def conv2d_backward(grad_out, x, kernel, padding=(0, 0), stride=(1, 1)):
    """Adjoints of conv2d w.r.t. (input, kernel, bias).

    grad_out must have the forward output shape for (x, kernel, padding, stride).
    """
    B, Cin, H, W = x.shape
    Cout, _, kh, kw = kernel.shape
    ph, pw = _pair(padding)
    sh, sw = _pair(stride)
    Ho = conv_output_size(H, kh, ph, sh)
    Wo = conv_output_size(W, kw, pw, sw)
    if grad_out.shape != (B, Cout, Ho, Wo):
        raise ShapeError(
            f"conv2d_backward: grad_out shape {grad_out.shape} does not match "
            f"forward output shape {(B, Cout, Ho, Wo)}")

    grad_bias = grad_out.sum(axis=(0, 2, 3))

    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    win = _im2col(xp, kh, kw, sh, sw)                       # (B, Ho, Wo, Cin, kh, kw)
    cols = win.reshape(B * Ho * Wo, Cin * kh * kw)
    go = grad_out.transpose(0, 2, 3, 1).reshape(B * Ho * Wo, Cout)
    grad_kernel = (go.T @ cols).reshape(Cout, Cin, kh, kw)

    # grad wrt input: full correlation of the (zero-stuffed) output gradient
    # with the spatially flipped, channel-transposed kernel.
    Hs = (Ho - 1) * sh + 1
    Ws = (Wo - 1) * sw + 1
    gs = np.zeros((B, Cout, Hs, Ws), dtype=grad_out.dtype)
    gs[:, :, ::sh, ::sw] = grad_out
    k_flip = np.ascontiguousarray(kernel[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    gi_full = conv2d(gs, k_flip, padding=(kh - 1, kw - 1))  # (B, Cin, Hs+kh-1, Ws+kw-1)
    grad_xp = np.zeros((B, Cin, H + 2 * ph, W + 2 * pw), dtype=grad_out.dtype)
    grad_xp[:, :, : Hs + kh - 1, : Ws + kw - 1] = gi_full
    grad_input = grad_xp[:, :, ph:ph + H, pw:pw + W]
    return np.ascontiguousarray(grad_input), grad_kernel, grad_bias


def relu(x):
    return np.maximum(x, 0)


def relu_backward(grad_out, x):
    """Subgradient at 0 is taken as 0."""
    return grad_out * (x > 0)


def maxpool2d(x, window, stride=None, return_indices=False):
    """Max over non-padded windows; ties resolved to the first position in
    row-major scan order within each window."""
    wh, ww = _pair(window)
    sh, sw = _pair(stride if stride is not None else window)
    B, C, H, W = x.shape
    if wh > H or ww > W:
        raise ShapeError(f"maxpool2d window {wh}x{ww} larger than input {H}x{W}")
    win = sliding_window_view(x, (wh, ww), axis=(2, 3))[:, :, ::sh, ::sw]
    B_, C_, Ho, Wo = win.shape[:4]
    flat = win.reshape(B, C, Ho, Wo, wh * ww)
    arg = flat.argmax(axis=-1)                # first max in row-major order
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    if return_indices:
        return out, arg
    return out


def maxpool2d_backward(grad_out, x, window, stride=None, indices=None):
    """Route each output gradient to the argmax position of its window."""
    wh, ww = _pair(window)
    sh, sw = _pair(stride if stride is not None else window)
    B, C, H, W = x.shape
    if indices is None:
        _, indices = maxpool2d(x, window, stride, return_indices=True)
    Ho, Wo = indices.shape[2:]
    if grad_out.shape != (B, C, Ho, Wo):
        raise ShapeError(
            f"maxpool2d_backward: grad_out shape {grad_out.shape} != {(B, C, Ho, Wo)}")
    dy = indices // ww
    dx = indices % ww
    ys = np.arange(Ho)[None, None, :, None] * sh + dy
    xs = np.arange(Wo)[None, None, None, :] * sw + dx
    flat_idx = ys * W + xs                    # (B, C, Ho, Wo) into H*W
    grad_input = np.zeros((B, C, H * W), dtype=grad_out.dtype)
    bidx = np.arange(B)[:, None, None, None]
    cidx = np.arange(C)[None, :, None, None]
    np.add.at(grad_input, (bidx, cidx, flat_idx), grad_out)
    return grad_input.reshape(B, C, H, W)


def linear(x, weight, bias):
    """x:(B,F), weight:(O,F), bias:(O) -> (B,O)."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(
            f"linear: input {x.shape} incompatible with weight {weight.shape}")
    return x @ weight.T + bias


def linear_backward(grad_out, x, weight):
    grad_input = grad_out @ weight
    grad_weight = grad_out.T @ x
    grad_bias = grad_out.sum(axis=0)
    return grad_input, grad_weight, grad_bias


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood over the batch, with max-subtraction
    stabilization. Returns (loss, grad_logits)."""
    B, K = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (B,):
        raise ShapeError(f"labels shape {labels.shape} does not match batch size {B}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= K:
        raise ShapeError(f"labels must lie in [0, {K}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    sm = ez / ez.sum(axis=1, keepdims=True)
    nll = -(z[np.arange(B), labels] - np.log(ez.sum(axis=1)))
    loss = nll.mean()
    grad = sm.copy()
    grad[np.arange(B), labels] -= 1.0
    grad /= B
    return loss, grad
