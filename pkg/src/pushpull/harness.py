"""Experiment orchestration: train a model spec from scratch, evaluate a
checkpoint over a perturbation grid, run the (h, alpha) sensitivity sweep,
and emit CSV reports.

Determinism contract: (config, seed) fully determines the trained weights
and every evaluation number. Evaluation noise is seeded per
(master seed, perturbation, image index), so results do not depend on
batching or scheduling.
"""

import csv
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import perturb
from .checkpoint import save_checkpoint
from .data import load_cifar_binary, load_mnist_idx, normalization_for, normalize, subsample
from .errors import ConfigError, TrainingDiverged
from .models import ModelSpec, build_model
from .optim import Sgd, SgdConfig
from .ops import softmax_cross_entropy
from .perturb import image_rng
from .synth import synthetic_digits, synthetic_rgb

log = logging.getLogger("pushpull")

DATA_ROOT_ENV = "PUSHPULL_DATA_ROOT"


@dataclass
class TrainConfig:
    model: ModelSpec
    dataset: str = "synth-digits"
    data_paths: dict = field(default_factory=dict)
    epochs: int = 5
    batch_size: int = 64
    sgd: SgdConfig = field(default_factory=SgdConfig)
    seed: int = 0
    subsample_per_class: int | None = 100
    test_per_class: int = 200        # synthetic test-set size
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")

    def to_dict(self):
        d = {
            "model": self.model.to_dict(),
            "dataset": self.dataset,
            "data_paths": dict(self.data_paths),
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "sgd": {
                "learning_rate": self.sgd.learning_rate,
                "momentum": self.sgd.momentum,
                "weight_decay": self.sgd.weight_decay,
                "schedule": [list(x) for x in self.sgd.schedule],
            },
            "seed": self.seed,
            "subsample_per_class": self.subsample_per_class,
            "test_per_class": self.test_per_class,
            "checkpoint_path": self.checkpoint_path,
        }
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["model"] = ModelSpec.from_dict(d["model"])
        sgd = d.get("sgd", {})
        if isinstance(sgd, dict):
            sgd = dict(sgd)
            sgd["schedule"] = [tuple(x) for x in sgd.get("schedule", [])]
            d["sgd"] = SgdConfig(**sgd)
        return cls(**d)

    def hash(self):
        d = self.to_dict()
        d.pop("checkpoint_path", None)    # output location, not an experiment parameter
        return hashlib.sha256(
            json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def data_root():
    return os.environ.get(DATA_ROOT_ENV, "data")


def load_datasets(config):
    """Return (train, test) datasets for the configured dataset name.

    Real datasets are read from config.data_paths or conventional file
    names under $PUSHPULL_DATA_ROOT; synthetic ones are generated from the
    config seed. Nothing is ever downloaded.
    """
    name = config.dataset
    root = data_root()
    paths = config.data_paths

    if name == "synth-digits":
        n = config.subsample_per_class or 100
        train = synthetic_digits(n, seed=(config.seed, 1))
        test = synthetic_digits(config.test_per_class, seed=(config.seed, 2))
        return train, test
    if name == "synth-rgb":
        n = config.subsample_per_class or 100
        train = synthetic_rgb(n, seed=(config.seed, 1))
        test = synthetic_rgb(config.test_per_class, seed=(config.seed, 2))
        return train, test

    if name == "mnist":
        train = load_mnist_idx(
            paths.get("train_images", os.path.join(root, "train-images-idx3-ubyte")),
            paths.get("train_labels", os.path.join(root, "train-labels-idx1-ubyte")))
        test = load_mnist_idx(
            paths.get("test_images", os.path.join(root, "t10k-images-idx3-ubyte")),
            paths.get("test_labels", os.path.join(root, "t10k-labels-idx1-ubyte")))
    elif name == "cifar10":
        train = load_cifar_binary(
            paths.get("train", [os.path.join(root, f"data_batch_{i}.bin")
                                for i in range(1, 6)]), 10)
        test = load_cifar_binary(paths.get("test", [os.path.join(root, "test_batch.bin")]), 10)
    elif name == "cifar100":
        train = load_cifar_binary(paths.get("train", [os.path.join(root, "train.bin")]), 100)
        test = load_cifar_binary(paths.get("test", [os.path.join(root, "test.bin")]), 100)
    else:
        raise ConfigError(f"unknown dataset {name!r}")

    if config.subsample_per_class:
        train = subsample(train, config.subsample_per_class, seed=config.seed)
    return train, test


def _batches(n, batch_size):
    for start in range(0, n, batch_size):
        yield np.arange(start, min(start + batch_size, n))


def train(config, train_ds=None):
    """Minibatch SGD on clean (unperturbed) training data.

    Returns (model, history); history holds per-epoch mean loss and
    training accuracy. Writes a checkpoint when config.checkpoint_path is
    set, and aborts with the last good checkpoint if the loss diverges.
    """
    if train_ds is None:
        train_ds, _ = load_datasets(config)
    rng = np.random.default_rng(config.seed)
    model = build_model(config.model, rng=rng)
    mean, std = normalization_for(train_ds.name)
    images = normalize(train_ds.images, mean, std)
    labels = train_ds.labels

    opt = Sgd(model.params(), config.sgd)
    history = []
    for epoch in range(config.epochs):
        opt.set_epoch(epoch)
        order = rng.permutation(len(labels))
        losses, correct = [], 0
        for batch in _batches(len(labels), config.batch_size):
            idx = order[batch]
            x, y = images[idx], labels[idx]
            logits = model.forward(x, train=True)
            loss, grad = softmax_cross_entropy(logits, y)
            if not np.isfinite(loss):
                ckpt = None
                if config.checkpoint_path:
                    ckpt = config.checkpoint_path + ".last-good"
                    save_checkpoint(ckpt, model, seed=config.seed)
                raise TrainingDiverged(epoch, int(batch[0]) // config.batch_size, ckpt)
            model.zero_grad()
            model.backward(grad)
            opt.step()
            losses.append(loss)
            correct += int((logits.argmax(axis=1) == y).sum())
        history.append({"epoch": epoch,
                        "loss": float(np.mean(losses)),
                        "accuracy": correct / len(labels)})
        log.info("epoch %d: loss %.4f, train acc %.4f",
                 epoch, history[-1]["loss"], history[-1]["accuracy"])

    if config.checkpoint_path:
        save_checkpoint(config.checkpoint_path, model, seed=config.seed,
                        extra={"history": history, "config_hash": config.hash()})
    return model, history


@dataclass
class EvalReport:
    model_id: str
    records: list                 # dicts: kind, param, accuracy, n, seed
    clean_accuracy: float | None
    master_seed: int
    config_hash: str = ""

    def accuracy_for(self, kind, param=None):
        for r in self.records:
            if r["kind"] == kind and (param is None or r["param"] == param):
                return r["accuracy"]
        raise KeyError(f"no record for ({kind}, {param})")


def evaluate(model, grid, test_ds, master_seed=0, batch_size=256,
             model_id=None, config_hash=""):
    """Accuracy per grid cell: perturb each test image with its own
    derived rng, normalize, forward, argmax."""
    c, h, w = model.spec.input_shape
    if test_ds.images.shape[1:] != (c, h, w):
        raise ConfigError(
            f"test images {test_ds.images.shape[1:]} do not match "
            f"model input shape {(c, h, w)}")
    mean, std = normalization_for(test_ds.name)
    records = []
    clean = None
    for spec in grid:
        if spec.kind == "none":
            images = test_ds.images
        else:
            images = np.stack([
                perturb.apply(test_ds.images[i], spec, image_rng(master_seed, spec, i))
                for i in range(len(test_ds))]).astype(np.float32)
        images = normalize(images, mean, std)
        correct = 0
        for batch in _batches(len(test_ds), batch_size):
            logits = model.forward(images[batch], train=False)
            correct += int((logits.argmax(axis=1) == test_ds.labels[batch]).sum())
        acc = correct / len(test_ds)
        records.append({"kind": spec.kind, "param": spec.param,
                        "accuracy": acc, "n": len(test_ds),
                        "seed": int(master_seed)})
        if spec.kind == "none":
            clean = acc
    return EvalReport(model_id or model.spec.name or model.spec.family,
                      records, clean, int(master_seed), config_hash)


_KIND_ORDER = {k: i for i, k in enumerate(perturb.KINDS)}


def report_csv(report, path):
    """Stable CSV: one row per grid cell, ordered by perturbation kind
    then ascending parameter."""
    rows = sorted(report.records,
                  key=lambda r: (_KIND_ORDER[r["kind"]], r["param"]))
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["model", "perturbation", "param", "accuracy", "n", "seed"])
        for r in rows:
            writer.writerow([report.model_id, r["kind"], repr(r["param"]),
                             f"{r['accuracy']:.4f}", r["n"], r["seed"]])


def read_report_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    records = [{"kind": r["perturbation"], "param": float(r["param"]),
                "accuracy": float(r["accuracy"]), "n": int(r["n"]),
                "seed": int(r["seed"])} for r in rows]
    model_id = rows[0]["model"] if rows else ""
    clean = next((r["accuracy"] for r in records if r["kind"] == "none"), None)
    seed = records[0]["seed"] if records else 0
    return EvalReport(model_id, records, clean, seed)


def sensitivity_sweep(base, h_values, alpha_values, grid, out_dir):
    """Train one push-pull model per (h, alpha) pair plus the conv
    baseline, evaluate all on the same grid, and write a matrix CSV."""
    os.makedirs(out_dir, exist_ok=True)
    pairs = []
    for h in h_values:
        for a in alpha_values:
            if (h, a) not in pairs:
                pairs.append((h, a))

    runs = [("baseline", None, None, _with_first_layer(base, None))]
    for h, a in pairs:
        runs.append((f"h{h}-a{a}", h, a, _with_first_layer(base, (h, a))))

    reports = []
    _, test_ds = load_datasets(base)
    for label, h, a, config in runs:
        model, _ = train(config)
        if h == 1:
            from .pull import derive_pull
            pp = model.layers[0]
            np.testing.assert_allclose(
                derive_pull(pp.push.value, 1.0), -pp.push.value)
        report = evaluate(model, grid, test_ds, master_seed=base.seed,
                          model_id=f"{base.model.name or base.model.family}-{label}",
                          config_hash=config.hash())
        report_csv(report, os.path.join(out_dir, f"{label}.csv"))
        reports.append((label, h, a, report))

    matrix_path = os.path.join(out_dir, "sensitivity.csv")
    with open(matrix_path, "w", newline="") as f:
        writer = csv.writer(f)
        params = [f"{s.kind}:{s.param!r}" for s in grid]
        writer.writerow(["model", "h", "alpha"] + params)
        for label, h, a, report in reports:
            accs = [f"{r['accuracy']:.4f}" for r in report.records]
            writer.writerow([label, "" if h is None else h,
                             "" if a is None else a] + accs)
    return reports


def _with_first_layer(base, pp):
    """Copy of base with the first layer set to conv (pp=None) or to a
    push-pull layer with the given (h, alpha)."""
    spec = ModelSpec.from_dict(base.model.to_dict())
    if pp is None:
        spec.first_layer = "conv"
        spec.pushpull = None
    else:
        h, a = pp
        spec.first_layer = "pushpull"
        out_ch = spec.conv1_channels if spec.family == "lenet5" else 16
        k = 5 if spec.family == "lenet5" else 3
        from .layers import PushPullConfig
        spec.pushpull = PushPullConfig(
            in_channels=spec.input_shape[0], out_channels=out_ch,
            kernel_size=k, alpha=a, upsample_factor=h,
            bias=spec.family == "lenet5")
    return replace(base, model=spec, checkpoint_path=None)
