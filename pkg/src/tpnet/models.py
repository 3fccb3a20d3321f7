"""ResNet-20 for CIFAR-10 and its transform-perceptron revisions.

The baseline follows the classic CIFAR recipe: a 16-channel 3x3 stem,
three stages of three residual blocks at widths 16/32/64, downsampling
by stride-2 first convs at the stage transitions (with 1x1 projection
shortcuts carrying batch norm), global average pooling and a linear
classifier.  Blocks run conv-BN-ReLU-conv-BN-add-ReLU.

Revisions replace the second 3x3 conv of every block with a
TransformPerceptron2d of the chosen transform and branch count, keeping
the batch norm that follows.  The convs at odd positions stay, so
ordinary convolutions and transform-domain layers alternate.  Optional
extras: a single-branch DCT layer (plus BN) inserted before global
average pooling, and the everything-replaced ablation where both convs
of every block become single-branch DCT layers, downsampling ones via
truncated inverse DCT.  The stem conv and the projection shortcuts stay
convolutional in that ablation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import torch
from torch import nn

from .layers import NONLINEARITIES, TransformPerceptron2d
from .nn import batchnorm, conv1x1, conv3x3, global_avg_pool, init_weights
from .transforms import TransformKind

STAGE_WIDTHS = (16, 32, 64)
BLOCKS_PER_STAGE = 3
NUM_CLASSES = 10

VARIANT_NAMES = (
    "resnet20",
    "1c-dct", "3c-dct", "1c-ht", "3c-ht", "1c-bwt", "3c-bwt",
    "resnet20+1c-dct-p",
    "all-dct",
)


@dataclass(frozen=True)
class VariantSpec:
    """Which model to build; parsed from the CLI variant strings."""

    kind: TransformKind | None = None  # None: plain convolutional baseline
    branches: int = 1
    extra_tp_before_gap: bool = False
    replace_all: bool = False
    nonlinearity: str = "soft-threshold"
    tp_shortcut: bool | None = None

    def __post_init__(self):
        if self.branches < 1:
            raise ValueError("branches must be positive")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.replace_all and (self.kind is not TransformKind.DCT or self.branches != 1):
            raise ValueError("the all-replaced ablation is single-branch DCT only")
        if self.extra_tp_before_gap and self.replace_all:
            raise ValueError("extra_tp_before_gap and replace_all are exclusive")

    @property
    def name(self) -> str:
        if self.replace_all:
            return "all-dct"
        if self.kind is None:
            return "resnet20+1c-dct-p" if self.extra_tp_before_gap else "resnet20"
        return f"{self.branches}c-{self.kind.value}"

    @staticmethod
    def parse(variant: str, kind: str | None = None, channels: int | None = None,
              nonlinearity: str | None = None,
              tp_shortcut: bool | None = None) -> "VariantSpec":
        """Build a spec from a variant string plus optional flag overrides."""
        name = variant.strip().lower()
        revision = re.fullmatch(r"(\d+)c-(dct|ht|bwt)", name)
        if name == "resnet20":
            spec = VariantSpec()
        elif name == "resnet20+1c-dct-p":
            spec = VariantSpec(extra_tp_before_gap=True)
        elif name == "all-dct":
            spec = VariantSpec(kind=TransformKind.DCT, replace_all=True)
        elif revision:
            spec = VariantSpec(kind=TransformKind(revision.group(2)),
                               branches=int(revision.group(1)))
        else:
            raise ValueError(f"unknown variant {variant!r}")
        if kind is not None:
            if spec.kind is None:
                raise ValueError(f"variant {variant!r} takes no transform kind")
            spec = replace(spec, kind=TransformKind(kind.lower()))
        if channels is not None:
            if spec.kind is None or spec.replace_all:
                raise ValueError(f"variant {variant!r} takes no channel count")
            spec = replace(spec, branches=channels)
        if nonlinearity is not None:
            spec = replace(spec, nonlinearity=nonlinearity)
        if tp_shortcut is not None:
            spec = replace(spec, tp_shortcut=tp_shortcut)
        return spec


class GlobalAvgPool(nn.Module):
    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return global_avg_pool(x)


class BasicBlock(nn.Module):
    """Residual block V1 with an optionally transform-based second layer."""

    def __init__(self, cin: int, cout: int, stride: int, size_in: int,
                 spec: VariantSpec):
        super().__init__()
        size_out = size_in // stride
        if spec.replace_all:
            self.layer1 = TransformPerceptron2d(
                cin, cout, size=size_in, kind=TransformKind.DCT,
                nonlinearity=spec.nonlinearity, downsample=stride == 2)
        else:
            self.layer1 = conv3x3(cin, cout, stride)
        self.bn1 = batchnorm(cout)
        self.relu = nn.ReLU()
        if spec.kind is None:
            self.layer2 = conv3x3(cout, cout)
        else:
            self.layer2 = TransformPerceptron2d(
                cout, size=size_out, kind=spec.kind,
                branches=1 if spec.replace_all else spec.branches,
                nonlinearity=spec.nonlinearity, shortcut=spec.tp_shortcut)
        self.bn2 = batchnorm(cout)
        if stride != 1 or cin != cout:
            self.projection = nn.Sequential(conv1x1(cin, cout, stride), batchnorm(cout))
        else:
            self.projection = None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.relu(self.bn1(self.layer1(x)))
        out = self.bn2(self.layer2(out))
        shortcut = x if self.projection is None else self.projection(x)
        return self.relu(out + shortcut)


class ResNet20(nn.Module):
    def __init__(self, spec: VariantSpec = VariantSpec(), input_size: int = 32):
        super().__init__()
        self.spec = spec
        self.conv1 = conv3x3(3, STAGE_WIDTHS[0])
        self.bn1 = batchnorm(STAGE_WIDTHS[0])
        self.relu = nn.ReLU()
        stages = []
        cin, size = STAGE_WIDTHS[0], input_size
        for stage_idx, width in enumerate(STAGE_WIDTHS):
            blocks = []
            for block_idx in range(BLOCKS_PER_STAGE):
                stride = 2 if stage_idx > 0 and block_idx == 0 else 1
                blocks.append(BasicBlock(cin, width, stride, size, spec))
                size //= stride
                cin = width
            stages.append(nn.Sequential(*blocks))
        self.stage1, self.stage2, self.stage3 = stages
        if spec.extra_tp_before_gap:
            self.extra_tp = TransformPerceptron2d(
                STAGE_WIDTHS[-1], size=size, kind=TransformKind.DCT,
                nonlinearity=spec.nonlinearity, shortcut=spec.tp_shortcut)
            self.extra_bn = batchnorm(STAGE_WIDTHS[-1])
        else:
            self.extra_tp = None
            self.extra_bn = None
        self.pool = GlobalAvgPool()
        self.fc = nn.Linear(STAGE_WIDTHS[-1], NUM_CLASSES)
        init_weights(self)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.stage3(self.stage2(self.stage1(out)))
        if self.extra_tp is not None:
            out = self.extra_bn(self.extra_tp(out))
        return self.fc(self.pool(out))


def build_resnet20(spec: VariantSpec | str = VariantSpec(), input_size: int = 32) -> ResNet20:
    if isinstance(spec, str):
        spec = VariantSpec.parse(spec)
    return ResNet20(spec, input_size)


def list_replaceable_sites(model: ResNet20) -> list[str]:
    """Names of the block positions a revision replaces.

    For the standard revisions these are the nine second-position layers
    (one per block); the all-replaced ablation also takes the nine
    first-position layers.  The stem and the projection shortcuts are
    never replaced.
    """
    sites = []
    for name, module in model.named_modules():
        if isinstance(module, BasicBlock):
            if model.spec.replace_all:
                sites.append(f"{name}.layer1")
            sites.append(f"{name}.layer2")
    return sites


def conv3x3_sites(model: nn.Module) -> list[str]:
    """All 3x3 convolution sites in the graph (stem included)."""
    return [name for name, m in model.named_modules()
            if isinstance(m, nn.Conv2d) and m.kernel_size == (3, 3)]
