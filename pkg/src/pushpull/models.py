"""Model builders: the eight LeNet-5 variants (A-D and their push-pull
counterparts PA-PD) and WideResNet WRN-L-W with an optional push-pull
first layer.

Replacing the first convolution with a push-pull layer never changes the
trainable parameter count or the output shape; both properties are
asserted in the test suite for every spec pair.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .layers import (BatchNorm2d, Conv2d, Flatten, GlobalAvgPool, Layer,
                     Linear, MaxPool2d, PushPull, PushPullConfig, ReLU)


@dataclass
class ModelSpec:
    family: str                       # "lenet5" | "wideresnet"
    first_layer: str = "conv"         # "conv" | "pushpull"
    conv1_channels: int = 6
    conv2_channels: int = 16          # lenet only
    fc_widths: tuple = (128, 64, 10)  # lenet only
    depth: int = 16                   # wideresnet only
    widen_factor: int = 1             # wideresnet only
    pushpull: PushPullConfig | None = None
    num_classes: int = 10
    input_shape: tuple = (1, 28, 28)
    name: str = ""

    def __post_init__(self):
        if self.family not in ("lenet5", "wideresnet"):
            raise ConfigError(f"unknown model family {self.family!r}")
        if self.first_layer not in ("conv", "pushpull"):
            raise ConfigError(f"unknown first_layer {self.first_layer!r}")
        if self.family == "lenet5" and tuple(self.fc_widths)[-1] != self.num_classes:
            raise ConfigError(
                f"fc_widths {self.fc_widths} must end in num_classes {self.num_classes}")
        if self.family == "wideresnet" and (self.depth - 4) % 6 != 0:
            raise ConfigError(
                f"wideresnet depth must satisfy (L - 4) %% 6 == 0, got L={self.depth}")

    def to_dict(self):
        d = asdict(self)
        d["fc_widths"] = list(self.fc_widths)
        d["input_shape"] = list(self.input_shape)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("pushpull") is not None:
            d["pushpull"] = PushPullConfig(**d["pushpull"])
        d["fc_widths"] = tuple(d.get("fc_widths", (128, 64, 10)))
        d["input_shape"] = tuple(d.get("input_shape", (1, 28, 28)))
        return cls(**d)


class Model:
    """An ordered stack of layers with a flat parameter registry."""

    def __init__(self, layers, spec):
        self.layers = layers
        self.spec = spec
        self._named = []
        for i, layer in enumerate(layers):
            for j, p in enumerate(layer.params()):
                p.name = f"layer{i:02d}.param{j}"
                self._named.append(p)

    def params(self):
        return list(self._named)

    def named_params(self):
        return {p.name: p for p in self._named}

    def forward(self, x, train=False):
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def zero_grad(self):
        for p in self._named:
            p.zero_grad()


def parameter_count(model):
    return sum(p.value.size for p in model.params() if p.trainable)


def _first_layer(spec, in_ch, out_ch, kernel_size, bias, rng):
    if spec.first_layer == "pushpull":
        cfg = spec.pushpull or PushPullConfig(
            in_channels=in_ch, out_channels=out_ch,
            kernel_size=kernel_size, bias=bias)
        if (cfg.in_channels, cfg.out_channels) != (in_ch, out_ch):
            raise ConfigError(
                f"pushpull config channels {(cfg.in_channels, cfg.out_channels)} "
                f"do not match the architecture {(in_ch, out_ch)}")
        return [PushPull(cfg, rng=rng)]
    pad = (kernel_size - 1) // 2
    return [Conv2d(in_ch, out_ch, kernel_size, padding=pad, bias=bias, rng=rng),
            ReLU()]


def build_lenet(spec, rng=None):
    """conv1 5x5 (same padding) -> pool 2x2 -> conv 5x5 -> relu -> pool 2x2
    -> flatten -> fully-connected chain.  A push-pull first layer replaces
    conv1+relu; pooling then acts directly on its output."""
    if spec.family != "lenet5":
        raise ConfigError(f"build_lenet got family {spec.family!r}")
    rng = rng or np.random.default_rng(0)
    in_ch, h, w = spec.input_shape

    layers = _first_layer(spec, in_ch, spec.conv1_channels, 5, True, rng)
    layers.append(MaxPool2d(2))
    layers += [Conv2d(spec.conv1_channels, spec.conv2_channels, 5, rng=rng),
               ReLU(), MaxPool2d(2), Flatten()]

    side = ((h // 2) - 4) // 2          # same-pad conv, pool, valid 5x5 conv, pool
    feat = spec.conv2_channels * side * side
    widths = list(spec.fc_widths)
    for i, width in enumerate(widths):
        layers.append(Linear(feat, width, rng=rng))
        if i < len(widths) - 1:
            layers.append(ReLU())
        feat = width
    return Model(layers, spec)


class WideBasicBlock(Layer):
    """Pre-activation residual block: BN-ReLU-conv3x3 -> BN-ReLU-conv3x3,
    with a 1x1 projection shortcut when the shape changes."""

    def __init__(self, in_ch, out_ch, stride, rng):
        self.bn1 = BatchNorm2d(in_ch)
        self.relu1 = ReLU()
        self.conv1 = Conv2d(in_ch, out_ch, 3, stride=stride, padding=1,
                            bias=False, rng=rng)
        self.bn2 = BatchNorm2d(out_ch)
        self.relu2 = ReLU()
        self.conv2 = Conv2d(out_ch, out_ch, 3, padding=1, bias=False, rng=rng)
        self.shortcut = None
        if stride != 1 or in_ch != out_ch:
            self.shortcut = Conv2d(in_ch, out_ch, 1, stride=stride,
                                   bias=False, rng=rng)

    def params(self):
        subs = [self.bn1, self.conv1, self.bn2, self.conv2]
        if self.shortcut is not None:
            subs.append(self.shortcut)
        return [p for layer in subs for p in layer.params()]

    def forward(self, x, train=False):
        o = self.relu1.forward(self.bn1.forward(x, train), train)
        skip = self.shortcut.forward(o, train) if self.shortcut is not None else x
        y = self.conv1.forward(o, train)
        y = self.relu2.forward(self.bn2.forward(y, train), train)
        y = self.conv2.forward(y, train)
        return y + skip

    def backward(self, grad):
        g = self.conv2.backward(grad)
        g = self.bn2.backward(self.relu2.backward(g))
        g = self.conv1.backward(g)
        if self.shortcut is not None:
            g = g + self.shortcut.backward(grad)
            return self.bn1.backward(self.relu1.backward(g))
        return self.bn1.backward(self.relu1.backward(g)) + grad


def build_wideresnet(spec, rng=None):
    """WRN-L-W: 3x3 stem (16 channels, swappable for push-pull), three
    groups of (L-4)/6 pre-activation blocks at widths 16W/32W/64W with
    stride-2 entries into groups 2 and 3, then BN-ReLU-avgpool-fc."""
    if spec.family != "wideresnet":
        raise ConfigError(f"build_wideresnet got family {spec.family!r}")
    rng = rng or np.random.default_rng(0)
    in_ch = spec.input_shape[0]
    n = (spec.depth - 4) // 6
    w = spec.widen_factor

    layers = _first_layer(spec, in_ch, 16, 3, False, rng)
    if spec.first_layer == "conv":
        layers = layers[:1]             # stem conv is linear; blocks pre-activate

    ch = 16
    for width, stride in ((16 * w, 1), (32 * w, 2), (64 * w, 2)):
        for b in range(n):
            layers.append(WideBasicBlock(ch, width, stride if b == 0 else 1, rng))
            ch = width
    layers += [BatchNorm2d(ch), ReLU(), GlobalAvgPool(),
               Linear(ch, spec.num_classes, rng=rng)]
    return Model(layers, spec)


def build_model(spec, rng=None):
    if spec.family == "lenet5":
        return build_lenet(spec, rng)
    return build_wideresnet(spec, rng)


# Table of LeNet-5 configurations: (conv1, conv2, fc widths, push-pull?)
LENET_TABLE = {
    "A":  (6, 16, (128, 64, 10), False),
    "B":  (6, 8, (64, 32, 10), False),
    "C":  (4, 16, (128, 64, 10), False),
    "D":  (4, 8, (64, 32, 10), False),
    "PA": (6, 16, (128, 64, 10), True),
    "PB": (6, 8, (64, 32, 10), True),
    "PC": (4, 16, (128, 64, 10), True),
    "PD": (4, 8, (64, 32, 10), True),
}


def lenet_spec(name, alpha=1.0, upsample_factor=2.0, input_shape=(1, 28, 28)):
    if name not in LENET_TABLE:
        raise ConfigError(f"unknown LeNet configuration {name!r}; "
                          f"choose from {sorted(LENET_TABLE)}")
    conv1, conv2, fc, pp = LENET_TABLE[name]
    spec = ModelSpec(family="lenet5",
                     first_layer="pushpull" if pp else "conv",
                     conv1_channels=conv1, conv2_channels=conv2,
                     fc_widths=fc, input_shape=input_shape, name=name)
    if pp:
        spec.pushpull = PushPullConfig(
            in_channels=input_shape[0], out_channels=conv1, kernel_size=5,
            alpha=alpha, upsample_factor=upsample_factor)
    return spec


def wrn_spec(depth, widen_factor, pushpull=False, alpha=1.0,
             upsample_factor=2.0, num_classes=10, input_shape=(3, 32, 32)):
    name = f"WRN-{depth}-{widen_factor}" + ("-PP" if pushpull else "")
    spec = ModelSpec(family="wideresnet",
                     first_layer="pushpull" if pushpull else "conv",
                     depth=depth, widen_factor=widen_factor,
                     num_classes=num_classes, input_shape=input_shape,
                     name=name)
    if pushpull:
        spec.pushpull = PushPullConfig(
            in_channels=input_shape[0], out_channels=16, kernel_size=3,
            alpha=alpha, upsample_factor=upsample_factor, bias=False)
    return spec
