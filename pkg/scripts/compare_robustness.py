"""Train a conv baseline and its push-pull twin, then compare accuracy
under increasing perturbation strength.

Example:
    python scripts/compare_robustness.py --pair B PB --epochs 10 \
        --grid "none;gaussian:0.1,0.2;poisson:0.5,1,2" --out results/
"""

import argparse
import os

from pushpull.harness import TrainConfig, evaluate, load_datasets, report_csv, train
from pushpull.models import lenet_spec
from pushpull.optim import SgdConfig
from pushpull.perturb import parse_grid


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--pair", nargs=2, default=["B", "PB"],
                   metavar=("CONV", "PUSHPULL"),
                   help="LeNet configuration names, e.g. B PB")
    p.add_argument("--dataset", default="synth-digits")
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.03)
    p.add_argument("--decay-epoch", type=int, default=6,
                   help="epoch at which the learning rate is multiplied "
                        "by --decay-mult; negative disables the decay")
    p.add_argument("--decay-mult", type=float, default=1 / 3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", default="none;gaussian:0.1,0.2")
    p.add_argument("--out", default="results")
    return p.parse_args()


def main():
    args = parse_args()
    os.makedirs(args.out, exist_ok=True)
    grid = parse_grid(args.grid)
    reports = {}
    schedule = ([(args.decay_epoch, args.decay_mult)]
                if args.decay_epoch >= 0 else [])
    for name in args.pair:
        config = TrainConfig(model=lenet_spec(name), dataset=args.dataset,
                             epochs=args.epochs, batch_size=args.batch_size,
                             subsample_per_class=args.per_class,
                             seed=args.seed,
                             sgd=SgdConfig(learning_rate=args.lr,
                                           schedule=schedule))
        train_ds, test_ds = load_datasets(config)
        model, history = train(config, train_ds)
        print(f"{name}: final train loss {history[-1]['loss']:.4f}, "
              f"train acc {history[-1]['accuracy']:.4f}")
        report = evaluate(model, grid, test_ds, master_seed=args.seed)
        report_csv(report, os.path.join(args.out, f"{name}.csv"))
        reports[name] = report

    conv, pp = args.pair
    print(f"\n{'perturbation':<14}{'param':<8}{conv:>8}{pp:>8}{'delta':>8}")
    for rc, rp in zip(reports[conv].records, reports[pp].records):
        delta = rp["accuracy"] - rc["accuracy"]
        print(f"{rc['kind']:<14}{rc['param']:<8g}"
              f"{rc['accuracy']:>8.4f}{rp['accuracy']:>8.4f}{delta:>+8.4f}")


if __name__ == "__main__":
    main()
