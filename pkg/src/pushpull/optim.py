"""Learnable parameters and plain SGD with momentum, weight decay and a
step learning-rate schedule."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


class Parameter:
    """A tensor with an accumulated gradient of identical shape.

    Non-trainable parameters (e.g. batch-norm running stats) are never
    touched by the optimizer.
    """

    def __init__(self, value, trainable=True, name=""):
        self.value = np.asarray(value)
        self.grad = np.zeros_like(self.value)
        self.trainable = trainable
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0

    def __repr__(self):
        return f"Parameter(name={self.name!r}, shape={self.value.shape}, trainable={self.trainable})"


@dataclass
class SgdConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0
    # list of (epoch, multiplier): from that epoch on, lr *= multiplier
    schedule: list = field(default_factory=list)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be non-negative, got {self.weight_decay}")

    def lr_at_epoch(self, epoch):
        lr = self.learning_rate
        for start, mult in sorted(self.schedule):
            if epoch >= start:
                lr *= mult
        return lr


class Sgd:
    """SGD with classical momentum: v <- m*v + (g + wd*w); w <- w - lr*v."""

    def __init__(self, params, config):
        self.params = list(params)
        self.config = config
        self._velocity = {}
        self.lr = config.learning_rate

    def set_epoch(self, epoch):
        self.lr = self.config.lr_at_epoch(epoch)

    def step(self):
        for p in self.params:
            if not p.trainable:
                continue
            g = p.grad
            if self.config.weight_decay:
                g = g + self.config.weight_decay * p.value
            if self.config.momentum:
                v = self._velocity.get(id(p))
                if v is None:
                    v = np.zeros_like(p.value)
                    self._velocity[id(p)] = v
                v *= self.config.momentum
                v += g
                g = v
            p.value = p.value - self.lr * g

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


def sgd_step(params, config, state=None):
    """One optimizer step over ``params``; returns the momentum state so
    callers can thread it through repeated calls."""
    opt = state if isinstance(state, Sgd) else Sgd(params, config)
    opt.step()
    return opt
