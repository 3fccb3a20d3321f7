#!/usr/bin/env python3
"""Write a small class-structured synthetic corpus in the CIFAR-10 binary
batch layout, for exercising the data/training pipeline without the real
dataset."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from tpnet.data import write_synthetic_dataset  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("out_dir")
    parser.add_argument("--train", type=int, default=640)
    parser.add_argument("--test", type=int, default=256)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    write_synthetic_dataset(args.out_dir, args.train, args.test, args.seed)
    print(f"wrote {args.train}+{args.test} synthetic records to {args.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
