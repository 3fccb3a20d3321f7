"""Parameter and multiply-accumulate accounting.

Parameters are counted exactly: K*K*Cin*Cout per conv (no biases), 2C
per batch norm, in*out+out for the classifier, and for a perceptron
layer the actual trainable tensors (2*P*N'^2 + P*C^2 in the default
configuration, N' the padded transform grid).

MACs follow the matrix-product transform convention: a 2D transform of a
C-channel HxW map costs H*W*(H+W)*C (2N^3C when square), a perceptron
layer pays one forward and one inverse transform (zero for the
multiplication-free HT) plus, per branch, N^2*C for scaling together
with thresholding and N^2*Cin*Cout for the 1x1 mixing.  Convolutions
cost K^2*Cin*Cout per output position.  Batch norm is counted at 2 ops
per element, activations and pooling at 1, matching common profiler
conventions; those terms cancel in every baseline-minus-revision delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .layers import TransformPerceptron2d
from .models import GlobalAvgPool
from .transforms import TransformKind

CONVENTIONS = ("matrix-product-transform", "fast-transform", "ht-free")


@dataclass(frozen=True)
class CostRow:
    name: str
    kind: str
    params: int
    macs: int
    macs_fast: int  # fast-transform convention for the transform terms


@dataclass(frozen=True)
class CostReport:
    rows: tuple[CostRow, ...]
    convention: str

    @property
    def total_params(self) -> int:
        return sum(r.params for r in self.rows)

    @property
    def total_macs(self) -> int:
        return sum(r.macs for r in self.rows)

    @property
    def total_macs_fast(self) -> int:
        return sum(r.macs_fast for r in self.rows)

    def table(self) -> str:
        width = max([len(r.name) for r in self.rows] + [5])
        lines = [f"{'layer':<{width}}  {'params':>10}  {'macs':>12}"]
        for r in self.rows:
            lines.append(f"{r.name:<{width}}  {r.params:>10}  {r.macs:>12}")
        lines.append(f"{'total':<{width}}  {self.total_params:>10}  {self.total_macs:>12}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        lines = ["layer,params,macs"]
        lines += [f"{r.name},{r.params},{r.macs}" for r in self.rows]
        lines.append(f"total,{self.total_params},{self.total_macs}")
        return "\n".join(lines)


def _fast_transform_macs(n: int, channels: int) -> int:
    # O(N^2 log N) 2D transform cost per channel.
    if n == 1:
        return 0
    terms = 2.5 * n * n * math.log2(n) + n * n / 3 - 6 * n + 62 / 3
    return round(terms * channels)


def _transform_pair_macs(layer: TransformPerceptron2d, cin: int) -> tuple[int, int]:
    """(matrix-product, fast) MACs for the forward+inverse transform pair."""
    if layer.kind is TransformKind.HT:
        return 0, 0
    th, tw = layer.transform_hw
    gh, gw = layer.grid_hw
    forward = th * tw * (th + tw) * cin
    inverse = gh * gw * (gh + gw) * layer.channels_out
    fast = _fast_transform_macs(th, cin) + _fast_transform_macs(gh, layer.channels_out)
    return forward + inverse, fast


def _tp_macs(layer: TransformPerceptron2d, cin: int) -> tuple[int, int]:
    gh, gw = layer.grid_hw
    per_branch = gh * gw * cin + gh * gw * cin * layer.channels_out
    pair, pair_fast = _transform_pair_macs(layer, cin)
    total = pair + layer.branches * per_branch
    return total, pair_fast + layer.branches * per_branch


def count_costs(model: nn.Module, input_shape=(1, 3, 32, 32)) -> CostReport:
    """Per-layer parameter and MAC report from a traced dummy forward."""
    records = []
    hooks = []
    counted = (nn.Conv2d, nn.BatchNorm2d, nn.Linear, nn.ReLU,
               TransformPerceptron2d, GlobalAvgPool)

    def register(name, module):
        def hook(mod, inputs, output):
            records.append((name, mod, tuple(inputs[0].shape), tuple(output.shape)))
        hooks.append(module.register_forward_hook(hook))

    for name, module in model.named_modules():
        if isinstance(module, counted):
            register(name, module)
    was_training = model.training
    model.eval()
    with torch.no_grad():
        model(torch.zeros(*input_shape))
    model.train(was_training)
    for h in hooks:
        h.remove()

    rows = []
    convention = "matrix-product-transform"
    for name, module, in_shape, out_shape in records:
        if isinstance(module, nn.Conv2d):
            kh, kw = module.kernel_size
            cout, hout, wout = out_shape[-3:]
            macs = kh * kw * module.in_channels * cout * hout * wout
            rows.append(CostRow(name, "conv", module.weight.numel()
                                + (module.bias.numel() if module.bias is not None else 0),
                                macs, macs))
        elif isinstance(module, nn.BatchNorm2d):
            numel = math.prod(out_shape[1:])
            rows.append(CostRow(name, "batchnorm", 2 * module.num_features,
                                2 * numel, 2 * numel))
        elif isinstance(module, nn.Linear):
            params = module.in_features * module.out_features + module.out_features
            rows.append(CostRow(name, "linear", params, params, params))
        elif isinstance(module, nn.ReLU):
            numel = math.prod(out_shape[1:])
            rows.append(CostRow(name, "relu", 0, numel, numel))
        elif isinstance(module, GlobalAvgPool):
            numel = math.prod(in_shape[1:])
            rows.append(CostRow(name, "pool", 0, numel, numel))
        elif isinstance(module, TransformPerceptron2d):
            params = sum(p.numel() for p in module.parameters())
            macs, fast = _tp_macs(module, in_shape[-3])
            rows.append(CostRow(name, "transform-perceptron", params, macs, fast))
            if module.kind is TransformKind.HT:
                convention = "ht-free"
    return CostReport(tuple(rows), convention)


def count_params(model: nn.Module) -> CostReport:
    return count_costs(model)


def count_macs(model: nn.Module, input_shape=(1, 3, 32, 32)) -> CostReport:
    return count_costs(model, input_shape)


def trainable_parameter_count(model: nn.Module) -> int:
    """Independent total from walking the parameter set."""
    return sum(p.numel() for p in model.parameters() if p.requires_grad)
