"""Building blocks shared by the model graphs, plus a gradient checker.

Convolutions never carry a bias (they are always followed by batch norm);
3x3 convs pad by 1 so stride-1 preserves spatial size, 1x1 convs pad by 0.
Batch norm uses momentum 0.1 and epsilon 1e-5.
"""

from __future__ import annotations

import torch
from torch import nn


def conv3x3(cin: int, cout: int, stride: int = 1) -> nn.Conv2d:
    return nn.Conv2d(cin, cout, 3, stride=stride, padding=1, bias=False)


def conv1x1(cin: int, cout: int, stride: int = 1) -> nn.Conv2d:
    return nn.Conv2d(cin, cout, 1, stride=stride, padding=0, bias=False)


def batchnorm(channels: int) -> nn.BatchNorm2d:
    return nn.BatchNorm2d(channels, eps=1e-5, momentum=0.1)


def global_avg_pool(x: torch.Tensor) -> torch.Tensor:
    return x.mean(dim=(-2, -1))


def softmax_cross_entropy(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Batch-averaged cross entropy on raw logits."""
    if labels.min() < 0 or labels.max() >= logits.shape[-1]:
        raise ValueError("label out of range")
    return nn.functional.cross_entropy(logits, labels)


def init_weights(module: nn.Module) -> None:
    """Fan-in scaled uniform init for convs and linear, identity for BN."""
    for m in module.modules():
        if isinstance(m, nn.Conv2d):
            nn.init.kaiming_uniform_(m.weight, mode="fan_in", nonlinearity="relu")
            if m.bias is not None:
                nn.init.zeros_(m.bias)
        elif isinstance(m, nn.Linear):
            bound = 1.0 / (m.in_features ** 0.5)
            nn.init.uniform_(m.weight, -bound, bound)
            if m.bias is not None:
                nn.init.uniform_(m.bias, -bound, bound)
        elif isinstance(m, nn.BatchNorm2d):
            nn.init.ones_(m.weight)
            nn.init.zeros_(m.bias)


def grad_check(fn, inputs, eps: float = 1e-5, kink_distance=None) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``fn(*inputs)`` must return a scalar.  Gradients are taken with
    respect to every input with ``requires_grad`` set.  The error for a
    coordinate is |analytic - fd| / max(1, |analytic|); the max over all
    checked coordinates is returned.

    ``kink_distance(*inputs)``, when given, returns per-input tensors of
    distances to the nearest nondifferentiable point; coordinates within
    10*eps of a kink are skipped.
    """
    inputs = [t.detach().clone().requires_grad_(t.requires_grad) for t in inputs]
    out = fn(*inputs)
    grads = torch.autograd.grad(out, [t for t in inputs if t.requires_grad])
    grads = iter(grads)
    skip = None
    if kink_distance is not None:
        skip = [d.abs() < 10 * eps if d is not None else None
                for d in kink_distance(*inputs)]
    worst = 0.0
    for idx, tensor in enumerate(inputs):
        if not tensor.requires_grad:
            continue
        analytic = next(grads)
        flat = tensor.detach().reshape(-1)
        for coord in range(flat.numel()):
            if skip is not None and skip[idx] is not None and skip[idx].reshape(-1)[coord]:
                continue
            orig = flat[coord].item()
            flat[coord] = orig + eps
            hi = fn(*inputs).item()
            flat[coord] = orig - eps
            lo = fn(*inputs).item()
            flat[coord] = orig
            fd = (hi - lo) / (2 * eps)
            a = analytic.reshape(-1)[coord].item()
            worst = max(worst, abs(a - fd) / max(1.0, abs(a)))
    return worst
