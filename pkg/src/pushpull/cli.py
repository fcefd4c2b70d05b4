"""Command-line entry points.

Subcommands:
  train  --config cfg.yaml [--seed N] [--out ckpt]
  eval   --ckpt ckpt --grid "none;gaussian:0.1,0.2" --out report.csv
  sweep  --config cfg.yaml --h 1,1.5,2 --alpha 0.5,1,1.5 --out dir
  inspect --ckpt ckpt

The dataset root directory is taken from $PUSHPULL_DATA_ROOT; any flag
overrides the corresponding config-file value.
"""

import argparse
import logging
import sys

import yaml

from . import harness
from .checkpoint import load_checkpoint
from .errors import PushPullError
from .harness import TrainConfig, evaluate, load_datasets, report_csv, sensitivity_sweep
from .models import ModelSpec, build_model, parameter_count
from .perturb import parse_grid


def _load_config(path):
    with open(path) as f:
        raw = yaml.safe_load(f)
    return TrainConfig.from_dict(raw)


def _cmd_train(args):
    config = _load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.checkpoint_path = args.out
    model, history = harness.train(config)
    print(f"trained {config.model.name or config.model.family}: "
          f"final loss {history[-1]['loss']:.4f}, "
          f"train acc {history[-1]['accuracy']:.4f}")
    if config.checkpoint_path:
        print(f"checkpoint written to {config.checkpoint_path}")


def _cmd_eval(args):
    model, header = load_checkpoint(args.ckpt)
    grid = parse_grid(args.grid)
    config = TrainConfig(model=model.spec, dataset=args.dataset,
                         seed=header.get("seed", 0),
                         subsample_per_class=None,
                         test_per_class=args.test_per_class)
    _, test_ds = load_datasets(config)
    report = evaluate(model, grid, test_ds,
                      master_seed=args.seed if args.seed is not None
                      else header.get("seed", 0))
    report_csv(report, args.out)
    for r in report.records:
        print(f"{r['kind']:10s} {r['param']:<8g} accuracy {r['accuracy']:.4f}")
    print(f"report written to {args.out}")


def _cmd_sweep(args):
    config = _load_config(args.config)
    h_values = [float(v) for v in args.h.split(",")]
    alpha_values = [float(v) for v in args.alpha.split(",")]
    grid = parse_grid(args.grid)
    reports = sensitivity_sweep(config, h_values, alpha_values, grid, args.out)
    print(f"{len(reports)} runs written to {args.out}")


def _cmd_inspect(args):
    model, header = load_checkpoint(args.ckpt)
    spec = model.spec
    count = parameter_count(model)
    print(f"model: {spec.name or spec.family} (first layer: {spec.first_layer})")
    print(f"trainable parameters: {count}")
    if spec.first_layer == "pushpull":
        conv_spec = ModelSpec.from_dict(spec.to_dict())
        conv_spec.first_layer = "conv"
        conv_spec.pushpull = None
        conv_count = parameter_count(build_model(conv_spec))
        status = "equal" if conv_count == count else "MISMATCH"
        print(f"conv counterpart parameters: {conv_count} ({status})")
    for name, p in model.named_params().items():
        flag = "" if p.trainable else " (frozen)"
        print(f"  {name}: {tuple(p.value.shape)}{flag}")


def build_parser():
    parser = argparse.ArgumentParser(prog="pushpull")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="checkpoint output path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint over a perturbation grid")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--grid", required=True,
                   help="e.g. 'none;gaussian:0.1,0.2;poisson:0.5,1,2'")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--dataset", default="synth-digits")
    p.add_argument("--test-per-class", type=int, default=200,
                   help="synthetic test-set size per class")
    p.add_argument("--seed", type=int, help="master seed for evaluation noise")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="(h, alpha) sensitivity sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--h", default="1,1.5,2")
    p.add_argument("--alpha", default="0.5,1,1.5")
    p.add_argument("--grid", default="none;gaussian:0.1,0.2")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("inspect", help="print checkpoint parameter counts")
    p.add_argument("--ckpt", required=True)
    p.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s")
    try:
        args.func(args)
    except PushPullError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
