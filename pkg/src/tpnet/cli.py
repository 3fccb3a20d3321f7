"""Command-line interface.

Subcommands: ``train``, ``eval``, ``count``, ``verify``, ``bench``.
Options can also come from a key=value config file (one pair per line,
``#`` comments allowed); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import pathlib
import sys
import time

import numpy as np
import torch

from .accounting import count_costs
from .checkpoint import load_checkpoint
from .data import class_histogram, load_cifar10
from .layers import NONLINEARITIES
from .models import VariantSpec, build_resnet20
from .training import TrainConfig, evaluate, train
from .verify import run_all


def _spec_from_args(args) -> VariantSpec:
    return VariantSpec.parse(args.variant, kind=args.kind, channels=args.channels,
                             nonlinearity=args.nonlinearity,
                             tp_shortcut=_tp_shortcut_value(args.tp_shortcut))


def _add_variant_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", default="resnet20",
                   help="resnet20, 1c-dct, 3c-dct, 1c-ht, 3c-ht, 3c-bwt, "
                        "resnet20+1c-dct-p, all-dct, or any <P>c-<kind>")
    p.add_argument("--kind", choices=["dct", "ht", "bwt"], default=None,
                   help="override the transform kind of the variant")
    p.add_argument("--channels", type=int, default=None,
                   help="override the perceptron branch count P")
    p.add_argument("--nonlinearity", choices=NONLINEARITIES, default=None)
    p.add_argument("--tp-shortcut", choices=["on", "off"], default=None,
                   help="force the in-layer shortcut on or off")


def _tp_shortcut_value(arg: str | None) -> bool | None:
    return None if arg is None else arg == "on"


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Turn `--config file` key=value pairs into parser defaults."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return argv
    defaults = {}
    for line in pathlib.Path(known.config).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"bad config line: {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        defaults[key.replace("-", "_")] = value
    for action in parser._actions:
        if action.dest in defaults:
            raw = defaults.pop(action.dest)
            if action.type is not None:
                action.default = action.type(raw)
            elif isinstance(action.default, bool) or isinstance(action, argparse._StoreTrueAction):
                action.default = raw.lower() in ("1", "true", "yes", "on")
            else:
                action.default = raw
    if defaults:
        raise SystemExit(f"unknown config keys: {sorted(defaults)}")
    return argv


def _build_train_parser(sub) -> argparse.ArgumentParser:
    p = sub.add_parser("train", help="train a variant on CIFAR-10")
    _add_variant_flags(p)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--milestones", default=None,
                   help="comma-separated decay epochs; default scales 82,122,163")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subset", type=int, default=None,
                   help="train on a class-balanced subset of this size")
    p.add_argument("--data-dir", default="data/cifar-10-batches-bin")
    p.add_argument("--out-dir", default="runs/latest")
    p.add_argument("--reproducible", action="store_true")
    return p


def _cmd_train(args) -> int:
    milestones = None
    if args.milestones:
        milestones = tuple(int(v) for v in str(args.milestones).split(","))
    config = TrainConfig(
        variant=args.variant, kind=args.kind, channels=args.channels,
        nonlinearity=args.nonlinearity,
        tp_shortcut=_tp_shortcut_value(args.tp_shortcut),
        epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
        momentum=args.momentum, weight_decay=args.weight_decay,
        milestones=milestones, seed=args.seed, subset=args.subset,
        data_dir=args.data_dir, out_dir=args.out_dir,
        reproducible=args.reproducible)
    result = train(config)
    print(f"best test accuracy: {result.best_accuracy:.4f}")
    print(f"log: {result.log_path}")
    print(f"checkpoint: {result.checkpoint_path}")
    return 0


def _cmd_eval(args) -> int:
    _, test = load_cifar10(args.data_dir)
    model = build_resnet20(_spec_from_args(args))
    meta = load_checkpoint(args.checkpoint, model)
    acc, loss = evaluate(model, test.images, test.labels, args.batch_size)
    print(f"checkpoint epoch {meta['epoch']} "
          f"(best recorded {meta['best_test_accuracy']:.4f})")
    print(f"test accuracy {acc:.4f}, test loss {loss:.4f}")
    return 0


def _cmd_count(args) -> int:
    report = count_costs(build_resnet20(_spec_from_args(args)))
    print(report.table())
    print()
    print(f"convention: {report.convention}")
    print(f"total parameters: {report.total_params}")
    print(f"total MACs: {report.total_macs} ({report.total_macs / 1e6:.2f}M)")
    print(f"total MACs (fast-transform convention): {report.total_macs_fast} "
          f"({report.total_macs_fast / 1e6:.2f}M)")
    print()
    print(report.to_csv())
    return 0


def _cmd_verify(_args) -> int:
    results = run_all()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def _cmd_bench(args) -> int:
    torch.manual_seed(0)
    x = torch.randn(args.batch_size, 3, 32, 32)
    for name in args.variants.split(","):
        model = build_resnet20(name.strip())
        model.eval()
        with torch.no_grad():
            for _ in range(args.warmup):
                model(x)
            t0 = time.monotonic()
            for _ in range(args.repeats):
                model(x)
            dt = (time.monotonic() - t0) / args.repeats
        print(f"{name.strip():>18}: {dt * 1000:8.2f} ms / batch of {args.batch_size}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = argparse.ArgumentParser(prog="tpnet")
    sub = parser.add_subparsers(dest="command", required=True)

    train_parser = _build_train_parser(sub)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test set")
    _add_variant_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data-dir", default="data/cifar-10-batches-bin")
    p.add_argument("--batch-size", type=int, default=512)

    p = sub.add_parser("count", help="parameter and MAC report for a variant")
    _add_variant_flags(p)

    sub.add_parser("verify", help="run the built-in property checks")

    p = sub.add_parser("bench", help="wall-clock forward timings")
    p.add_argument("--variants", default="resnet20,1c-dct,3c-dct,1c-ht,3c-ht,3c-bwt")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--warmup", type=int, default=3)

    if argv and argv[0] == "train":
        _apply_config_file(train_parser, argv)
    args = parser.parse_args(argv)
    handler = {
        "train": _cmd_train, "eval": _cmd_eval, "count": _cmd_count,
        "verify": _cmd_verify, "bench": _cmd_bench,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    raise SystemExit(main())
