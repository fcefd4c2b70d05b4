"""Trainable layers built on the primitives in :mod:`pushpull.ops`.

Each layer caches whatever its backward pass needs on ``self`` during
forward; the training loop is single-threaded so this is safe. Evaluation
may share layers read-only across workers as long as nobody calls
``backward`` concurrently.

The central piece is :class:`PushPull`: a first-layer replacement for a
plain convolution that subtracts a rectified response of the derived pull
kernel from the rectified response of the learned push kernel. Its only
trainable weights are the push kernel (and optional bias), so it has
exactly the parameter count of the convolution it replaces.
"""

from dataclasses import dataclass

import numpy as np

from . import ops
from .errors import ConfigError, ShapeError
from .optim import Parameter
from .pull import derive_pull, derive_pull_adjoint, pull_kernel_size


def kaiming_normal(rng, shape, fan_in):
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


class Layer:
    def params(self):
        return []

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def __call__(self, x, train=False):
        return self.forward(x, train)


class Conv2d(Layer):
    def __init__(self, in_ch, out_ch, kernel_size, stride=1, padding=0,
                 bias=True, rng=None, dtype=np.float32):
        rng = rng or np.random.default_rng(0)
        k = kernel_size
        fan_in = in_ch * k * k
        self.weight = Parameter(
            kaiming_normal(rng, (out_ch, in_ch, k, k), fan_in).astype(dtype))
        self.bias = Parameter(np.zeros(out_ch, dtype=dtype)) if bias else None
        self.stride = stride
        self.padding = padding
        self._x = None

    def params(self):
        return [self.weight] + ([self.bias] if self.bias is not None else [])

    def forward(self, x, train=False):
        self._x = x
        b = self.bias.value if self.bias is not None else None
        return ops.conv2d(x, self.weight.value, b,
                          padding=self.padding, stride=self.stride)

    def backward(self, grad):
        gi, gk, gb = ops.conv2d_backward(grad, self._x, self.weight.value,
                                         padding=self.padding, stride=self.stride)
        self.weight.grad += gk
        if self.bias is not None:
            self.bias.grad += gb
        return gi


@dataclass
class PushPullConfig:
    in_channels: int
    out_channels: int
    kernel_size: int = 5
    alpha: float = 1.0
    upsample_factor: float = 2.0
    stride: int = 1
    bias: bool = True

    def __post_init__(self):
        if self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be non-negative, got {self.alpha}")
        if self.upsample_factor < 1:
            raise ConfigError(
                f"upsample_factor must be >= 1, got {self.upsample_factor}")


class PushPull(Layer):
    """out = relu(push * x + bias) - alpha * relu(pull * x)

    where ``pull`` is recomputed from the push kernel on every forward pass
    (inversion + bilinear upsampling by the configured factor). Both paths
    use their own symmetric same-padding so the response maps align
    spatially for elementwise combination.
    """

    def __init__(self, config, rng=None, dtype=np.float32):
        rng = rng or np.random.default_rng(0)
        c = config
        fan_in = c.in_channels * c.kernel_size ** 2
        self.config = c
        self.push = Parameter(kaiming_normal(
            rng, (c.out_channels, c.in_channels, c.kernel_size, c.kernel_size),
            fan_in).astype(dtype))
        self.bias = Parameter(np.zeros(c.out_channels, dtype=dtype)) if c.bias else None
        self._ctx = None

    def params(self):
        return [self.push] + ([self.bias] if self.bias is not None else [])

    def forward(self, x, train=False):
        c = self.config
        if x.shape[1] != c.in_channels:
            raise ShapeError(
                f"push-pull layer expects {c.in_channels} input channels, got {x.shape[1]}")
        k = c.kernel_size
        kp = pull_kernel_size(k, c.upsample_factor)
        pull_kernel = derive_pull(self.push.value, c.upsample_factor)
        b = self.bias.value if self.bias is not None else None
        pre_push = ops.conv2d(x, self.push.value, b,
                              padding=(k - 1) // 2, stride=c.stride)
        if c.alpha == 0:
            self._ctx = (x, pre_push, None, pull_kernel)
            return ops.relu(pre_push)
        pre_pull = ops.conv2d(x, pull_kernel, None,
                              padding=(kp - 1) // 2, stride=c.stride)
        self._ctx = (x, pre_push, pre_pull, pull_kernel)
        return ops.relu(pre_push) - c.alpha * ops.relu(pre_pull)

    def backward(self, grad):
        if self._ctx is None:
            raise ShapeError("push-pull backward called without a saved forward context")
        x, pre_push, pre_pull, pull_kernel = self._ctx
        c = self.config
        k = c.kernel_size

        g_push = ops.relu_backward(grad, pre_push)
        gi, gk, gb = ops.conv2d_backward(g_push, x, self.push.value,
                                         padding=(k - 1) // 2, stride=c.stride)
        self.push.grad += gk
        if self.bias is not None:
            self.bias.grad += gb

        if pre_pull is not None:
            kp = pull_kernel.shape[-1]
            g_pull = ops.relu_backward(-c.alpha * grad, pre_pull)
            gi2, gk_pull, _ = ops.conv2d_backward(g_pull, x, pull_kernel,
                                                  padding=(kp - 1) // 2, stride=c.stride)
            self.push.grad += derive_pull_adjoint(gk_pull, k, c.upsample_factor)
            gi = gi + gi2
        return gi


class ReLU(Layer):
    def forward(self, x, train=False):
        self._x = x
        return ops.relu(x)

    def backward(self, grad):
        return ops.relu_backward(grad, self._x)


class MaxPool2d(Layer):
    def __init__(self, window=2, stride=None):
        self.window = window
        self.stride = stride if stride is not None else window

    def forward(self, x, train=False):
        out, idx = ops.maxpool2d(x, self.window, self.stride, return_indices=True)
        self._x, self._idx = x, idx
        return out

    def backward(self, grad):
        return ops.maxpool2d_backward(grad, self._x, self.window, self.stride,
                                      indices=self._idx)


class Flatten(Layer):
    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Linear(Layer):
    def __init__(self, in_features, out_features, rng=None, dtype=np.float32):
        rng = rng or np.random.default_rng(0)
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Parameter(
            rng.uniform(-bound, bound, (out_features, in_features)).astype(dtype))
        self.bias = Parameter(np.zeros(out_features, dtype=dtype))

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x, train=False):
        self._x = x
        return ops.linear(x, self.weight.value, self.bias.value)

    def backward(self, grad):
        gi, gw, gb = ops.linear_backward(grad, self._x, self.weight.value)
        self.weight.grad += gw
        self.bias.grad += gb
        return gi


class BatchNorm2d(Layer):
    """Per-channel batch normalization with running statistics.

    Running stats use momentum 0.9 (running = 0.9*running + 0.1*batch) and
    are stored as non-trainable parameters so checkpoints carry them.
    """

    def __init__(self, channels, eps=1e-5, momentum=0.9, dtype=np.float32):
        self.gamma = Parameter(np.ones(channels, dtype=dtype))
        self.beta = Parameter(np.zeros(channels, dtype=dtype))
        self.running_mean = Parameter(np.zeros(channels, dtype=dtype), trainable=False)
        self.running_var = Parameter(np.ones(channels, dtype=dtype), trainable=False)
        self.eps = eps
        self.momentum = momentum
        self._ctx = None

    def params(self):
        return [self.gamma, self.beta, self.running_mean, self.running_var]

    def forward(self, x, train=False):
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = self.momentum
            self.running_mean.value = (m * self.running_mean.value
                                       + (1 - m) * mean).astype(x.dtype)
            self.running_var.value = (m * self.running_var.value
                                      + (1 - m) * var).astype(x.dtype)
        else:
            mean = self.running_mean.value
            var = self.running_var.value
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        self._ctx = (xhat, inv_std, train)
        return self.gamma.value[None, :, None, None] * xhat \
            + self.beta.value[None, :, None, None]

    def backward(self, grad):
        xhat, inv_std, train = self._ctx
        self.gamma.grad += (grad * xhat).sum(axis=(0, 2, 3))
        self.beta.grad += grad.sum(axis=(0, 2, 3))
        scale = (self.gamma.value * inv_std)[None, :, None, None]
        if not train:
            return grad * scale
        n = grad.shape[0] * grad.shape[2] * grad.shape[3]
        g_mean = grad.mean(axis=(0, 2, 3))[None, :, None, None]
        gx_mean = (grad * xhat).sum(axis=(0, 2, 3))[None, :, None, None] / n
        return scale * (grad - g_mean - xhat * gx_mean)


class GlobalAvgPool(Layer):
    def forward(self, x, train=False):
        self._shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, grad):
        B, C, H, W = self._shape
        return np.broadcast_to(grad[:, :, None, None] / (H * W),
                               self._shape).astype(grad.dtype).copy()
