"""SGD training loop, evaluation, and metrics logging.

The recipe: SGD with momentum 0.9 and coupled weight decay 1e-4,
mini-batch 128, initial learning rate 0.1 decayed by 10x at epochs
82/122/163 over 200 epochs.  When a shorter run is requested without
explicit milestones, the milestones scale proportionally (20 epochs
gives 8/12/16 -- the desk-scale configuration, together with a
class-balanced 5000-image training subset against the full test set).

Each epoch shuffles with a seed-derived permutation, keeps the final
partial batch, evaluates on the test set, appends a CSV row
(epoch, lr, train loss, train acc, test loss, test acc, seconds), and
checkpoints whenever the test accuracy improves.
"""

from __future__ import annotations

import pathlib
import random
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from .checkpoint import save_checkpoint
from .data import DataSplit, augment, balanced_subset, load_cifar10, normalize
from .models import VariantSpec, build_resnet20

LOG_HEADER = "epoch,lr,train_loss,train_acc,test_loss,test_acc,seconds"
REFERENCE_SCHEDULE = (200, (82, 122, 163))


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    variant: str = "resnet20"
    kind: str | None = None
    channels: int | None = None
    nonlinearity: str | None = None
    tp_shortcut: bool | None = None
    epochs: int = 200
    batch_size: int = 128
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    milestones: tuple[int, ...] | None = None
    lr_decay: float = 0.1
    seed: int = 0
    data_dir: str = "data/cifar-10-batches-bin"
    subset: int | None = None
    out_dir: str = "runs/latest"
    reproducible: bool = False
    eval_batch_size: int = 512

    def resolved_milestones(self) -> tuple[int, ...]:
        if self.milestones is not None:
            ms = tuple(m for m in self.milestones if 0 < m < self.epochs)
            if any(b <= a for a, b in zip(ms, ms[1:])):
                raise ValueError(f"milestones must increase strictly: {ms}")
            return ms
        ref_epochs, ref_ms = REFERENCE_SCHEDULE
        scaled = (round(m * self.epochs / ref_epochs) for m in ref_ms)
        return tuple(sorted({m for m in scaled if 0 < m < self.epochs}))

    def variant_spec(self) -> VariantSpec:
        return VariantSpec.parse(self.variant, kind=self.kind,
                                 channels=self.channels,
                                 nonlinearity=self.nonlinearity,
                                 tp_shortcut=self.tp_shortcut)


@dataclass
class TrainResult:
    log_rows: list[str]
    best_accuracy: float
    checkpoint_path: pathlib.Path
    log_path: pathlib.Path
    model: torch.nn.Module = field(repr=False, default=None)


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def lr_at_epoch(config: TrainConfig, epoch: int) -> float:
    """Learning rate used during ``epoch`` (1-based)."""
    passed = sum(1 for m in config.resolved_milestones() if epoch > m)
    return config.lr * config.lr_decay ** passed


def evaluate(model: torch.nn.Module, images: np.ndarray, labels: np.ndarray,
             batch_size: int = 512) -> tuple[float, float]:
    """Top-1 accuracy and mean cross entropy, eval mode, inputs in [0,1]."""
    model.eval()
    total_loss = 0.0
    correct = 0
    with torch.no_grad():
        for start in range(0, len(labels), batch_size):
            xb = torch.from_numpy(normalize(images[start:start + batch_size]))
            yb = torch.from_numpy(labels[start:start + batch_size])
            logits = model(xb)
            total_loss += torch.nn.functional.cross_entropy(
                logits, yb, reduction="sum").item()
            correct += (logits.argmax(1) == yb).sum().item()
    n = len(labels)
    return correct / n, total_loss / n


def _parameter_norm_table(model: torch.nn.Module) -> str:
    lines = ["parameter norms:"]
    for name, p in model.named_parameters():
        lines.append(f"  {name}: |w|={p.norm().item():.4e}"
                     + (f" |g|={p.grad.norm().item():.4e}" if p.grad is not None else ""))
    return "\n".join(lines)


def train(config: TrainConfig, data: tuple[DataSplit, DataSplit] | None = None,
          model: torch.nn.Module | None = None) -> TrainResult:
    if config.reproducible:
        torch.use_deterministic_algorithms(True)
    seed_everything(config.seed)
    if data is None:
        data = load_cifar10(config.data_dir)
    train_split, test_split = data
    if config.subset:
        train_split = balanced_subset(train_split, config.subset)
    if model is None:
        model = build_resnet20(config.variant_spec())

    out_dir = pathlib.Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "metrics.csv"
    ckpt_path = out_dir / "best.ckpt"
    optimizer = torch.optim.SGD(model.parameters(), lr=config.lr,
                                momentum=config.momentum,
                                weight_decay=config.weight_decay)
    milestones = config.resolved_milestones()

    rng = np.random.default_rng(config.seed)
    rows = [LOG_HEADER]
    best_acc = -1.0
    n = len(train_split)
    for epoch in range(1, config.epochs + 1):
        lr = config.lr * config.lr_decay ** sum(1 for m in milestones if epoch > m)
        for group in optimizer.param_groups:
            group["lr"] = lr
        model.train()
        t0 = time.monotonic()
        perm = rng.permutation(n)
        epoch_loss = 0.0
        epoch_correct = 0
        for batch_idx, start in enumerate(range(0, n, config.batch_size)):
            idx = perm[start:start + config.batch_size]
            xb = torch.from_numpy(augment(train_split.images[idx], rng))
            yb = torch.from_numpy(train_split.labels[idx])
            logits = model(xb)
            loss = torch.nn.functional.cross_entropy(logits, yb)
            if not torch.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {batch_idx}\n"
                    + _parameter_norm_table(model))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += loss.item() * len(idx)
            epoch_correct += (logits.argmax(1) == yb).sum().item()
        test_acc, test_loss = evaluate(model, test_split.images,
                                       test_split.labels, config.eval_batch_size)
        seconds = time.monotonic() - t0
        rows.append(f"{epoch},{lr:.6g},{epoch_loss / n:.6f},"
                    f"{epoch_correct / n:.6f},{test_loss:.6f},{test_acc:.6f},"
                    f"{seconds:.2f}")
        log_path.write_text("\n".join(rows) + "\n")
        if test_acc > best_acc:
            best_acc = test_acc
            save_checkpoint(ckpt_path, model, optimizer, epoch, best_acc)
    return TrainResult(rows, best_acc, ckpt_path, log_path, model)


def overfit_steps(model: torch.nn.Module, images: np.ndarray, labels: np.ndarray,
                  steps: int = 200, batch_size: int = 64, lr: float = 0.05,
                  momentum: float = 0.9, seed: int = 0) -> float:
    """Drive the model into the given samples; returns the final full-set loss.

    Learnability smoke test: no augmentation, no weight decay, constant
    learning rate.
    """
    seed_everything(seed)
    optimizer = torch.optim.SGD(model.parameters(), lr=lr, momentum=momentum)
    rng = np.random.default_rng(seed)
    x_all = torch.from_numpy(normalize(images))
    y_all = torch.from_numpy(labels)
    model.train()
    n = len(labels)
    for _ in range(steps):
        idx = rng.integers(0, n, size=min(batch_size, n))
        xb, yb = x_all[idx], y_all[idx]
        loss = torch.nn.functional.cross_entropy(model(xb), yb)
        if not torch.isfinite(loss):
            raise TrainingDiverged("non-finite loss during overfit test\n"
                                   + _parameter_norm_table(model))
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
    with torch.no_grad():
        model.train()
        final = torch.nn.functional.cross_entropy(model(x_all), y_all).item()
    return final
