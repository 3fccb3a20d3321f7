#!/usr/bin/env python3
"""Desk-scale training check: baseline vs 3-branch DCT revision.

Trains both models on a class-balanced 5000-image CIFAR-10 subset for 20
epochs (milestones 8/12/16) with seed 0 and verifies that each reaches
at least 50% test accuracy with the revision within 5 points of the
baseline.  Exits nonzero otherwise.  Expects the standard binary batches
(data_batch_1..5.bin, test_batch.bin).
"""

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from tpnet.data import load_cifar10  # noqa: E402
from tpnet.training import TrainConfig, train  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--data-dir", default="data/cifar-10-batches-bin")
    parser.add_argument("--out-dir", default="runs/desk-scale")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--subset", type=int, default=5000)
    args = parser.parse_args()

    data = load_cifar10(args.data_dir)
    accs = {}
    for variant in ("resnet20", "3c-dct"):
        t0 = time.monotonic()
        config = TrainConfig(variant=variant, epochs=args.epochs,
                             subset=args.subset, seed=args.seed,
                             data_dir=args.data_dir,
                             out_dir=f"{args.out_dir}/{variant}",
                             reproducible=True)
        result = train(config, data=data)
        accs[variant] = result.best_accuracy
        print(f"{variant}: best test accuracy {result.best_accuracy:.4f} "
              f"({time.monotonic() - t0:.0f}s, log at {result.log_path})")

    ok = (accs["resnet20"] >= 0.50 and accs["3c-dct"] >= 0.50
          and abs(accs["3c-dct"] - accs["resnet20"]) <= 0.05)
    print("desk-scale check:", "PASS" if ok else "FAIL",
          f"(baseline {accs['resnet20']:.4f}, 3c-dct {accs['3c-dct']:.4f})")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
