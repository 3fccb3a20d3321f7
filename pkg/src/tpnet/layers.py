"""Transform-domain perceptron layers.

A layer transforms the input to the chosen 2D transform domain once,
then for each of its P branches applies a trainable element-wise scaling
matrix (the convolution-theorem filter), a 1x1 channel-mixing
convolution, and a trainable nonlinearity (soft-thresholding by
default), sums the branches, and transforms back.  A single-branch layer
adds a shortcut connection; multi-branch layers do not, since the
parallel branches already carry the gradient.

Sizing: the scaling and threshold matrices live on the (padded)
transform grid.  HT/BWT layers zero-pad non-power-of-2 inputs before the
transform and truncate after the inverse, so the output spatial size
always equals the input's.  A downsampling layer (DCT only) keeps the
low-frequency quarter of the spectrum, processes at the reduced size,
and inverts at half resolution.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .transforms import TransformKind, pad_pow2, transform2d, truncate

NONLINEARITIES = (
    "soft-threshold",
    "relu-with-thresholds",
    "relu-plain",
    "leaky-relu",
    "silu",
)


def soft_threshold(x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
    """sign(x) * max(|x| - |t|, 0), elementwise; antisymmetric in x.

    Using |t| keeps the effective threshold non-negative without
    constraining the raw parameter.  Subgradients at the kink and at
    t = 0 are zero.
    """
    return torch.sign(x) * torch.relu(x.abs() - t.abs())


def scale(x: torch.Tensor, a: torch.Tensor) -> torch.Tensor:
    """Elementwise multiply by a spatial weight map shared over channels."""
    if x.shape[-2:] != a.shape[-2:]:
        raise ValueError(f"spatial mismatch: {tuple(x.shape[-2:])} vs {tuple(a.shape[-2:])}")
    return x * a


def _pow2_ceil(n: int) -> int:
    return 1 << max(n - 1, 0).bit_length() if n > 1 else 1


def _as_hw(size) -> tuple[int, int]:
    if isinstance(size, int):
        return size, size
    h, w = size
    return int(h), int(w)


def tp_parameter_shapes(channels_in: int, size, branches: int = 1,
                        kind: TransformKind = TransformKind.DCT,
                        channels_out: int | None = None,
                        nonlinearity: str = "soft-threshold",
                        downsample: bool = False) -> dict:
    """Exact parameter inventory of a layer configuration.

    For the default soft-threshold layer with C channels on an N x N
    grid this totals 2*P*N'^2 + P*C^2 where N' is the padded transform
    size.
    """
    channels_out = channels_in if channels_out is None else channels_out
    h, w = _as_hw(size)
    kind = TransformKind(kind)
    if kind is not TransformKind.DCT:
        h, w = _pow2_ceil(h), _pow2_ceil(w)
    if downsample:
        h, w = h // 2, w // 2
    shapes = {
        "scale": (branches, h, w),
        "mixing": (branches, channels_out, channels_in, 1, 1),
    }
    if nonlinearity != "relu-plain":
        shapes["threshold"] = (branches, h, w)
    else:
        shapes["mixing_bias"] = (branches, channels_out)
    shapes["total"] = sum(math.prod(s) for k, s in shapes.items() if k != "total")
    return shapes


class TransformPerceptron2d(nn.Module):
    """Perceptron layer operating in an orthogonal transform domain."""

    def __init__(self, channels_in: int, channels_out: int | None = None, *,
                 size, kind: TransformKind = TransformKind.DCT,
                 branches: int = 1, nonlinearity: str = "soft-threshold",
                 shortcut: bool | None = None, downsample: bool = False):
        super().__init__()
        kind = TransformKind(kind)
        channels_out = channels_in if channels_out is None else channels_out
        if branches < 1:
            raise ValueError("need at least one branch")
        if nonlinearity not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity {nonlinearity!r}")
        if downsample and kind is not TransformKind.DCT:
            raise ValueError("downsampling is only defined for the DCT layer")
        self.kind = kind
        self.branches = branches
        self.nonlinearity = nonlinearity
        self.downsample = downsample
        self.channels_in = channels_in
        self.channels_out = channels_out
        self.in_hw = _as_hw(size)
        h, w = self.in_hw
        if kind is not TransformKind.DCT:
            h, w = _pow2_ceil(h), _pow2_ceil(w)
        self.transform_hw = (h, w)
        if downsample:
            h, w = h // 2, w // 2
        self.grid_hw = (h, w)
        self.out_hw = self.in_hw if not downsample else (self.in_hw[0] // 2, self.in_hw[1] // 2)

        if shortcut is None:
            shortcut = branches == 1 and not downsample and channels_in == channels_out
        if shortcut and (downsample or channels_in != channels_out):
            raise ValueError("shortcut needs matching input/output shapes")
        self.shortcut = shortcut

        self.scale_weights = nn.Parameter(torch.ones(branches, h, w))
        if nonlinearity == "relu-plain":
            self.thresholds = None
            self.mixing_bias = nn.Parameter(torch.zeros(branches, channels_out))
        else:
            self.thresholds = nn.Parameter(torch.zeros(branches, h, w))
            self.mixing_bias = None
        mixing = torch.empty(branches, channels_out, channels_in, 1, 1)
        for i in range(branches):
            nn.init.kaiming_uniform_(mixing[i], mode="fan_in", nonlinearity="relu")
        self.mixing = nn.Parameter(mixing)

    def _apply_nonlinearity(self, z: torch.Tensor, i: int) -> torch.Tensor:
        if self.nonlinearity == "soft-threshold":
            return soft_threshold(z, self.thresholds[i])
        if self.nonlinearity == "relu-with-thresholds":
            return torch.relu(z - self.thresholds[i].abs())
        if self.nonlinearity == "relu-plain":
            return torch.relu(z)
        if self.nonlinearity == "leaky-relu":
            return nn.functional.leaky_relu(z - self.thresholds[i].abs(), 0.01)
        return nn.functional.silu(z - self.thresholds[i].abs())

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-3] != self.channels_in:
            raise ValueError(
                f"expected {self.channels_in} input channels, got {x.shape[-3]}")
        if tuple(x.shape[-2:]) != self.in_hw:
            raise ValueError(
                f"expected spatial size {self.in_hw}, got {tuple(x.shape[-2:])}")
        z = pad_pow2(x) if self.kind is not TransformKind.DCT else x
        spectrum = transform2d(z, self.kind)
        if self.downsample:
            gh, gw = self.grid_hw
            # Low-frequency quarter; the 1/4 keeps constants at the same
            # level through the reduced-size inverse.
            spectrum = spectrum[..., :gh, :gw] * 0.25
        acc = None
        for i in range(self.branches):
            branch = scale(spectrum, self.scale_weights[i])
            bias = None if self.mixing_bias is None else self.mixing_bias[i]
            branch = nn.functional.conv2d(branch, self.mixing[i], bias)
            branch = self._apply_nonlinearity(branch, i)
            acc = branch if acc is None else acc + branch
        y = transform2d(acc, self.kind, inverse=True)
        if tuple(y.shape[-2:]) != self.out_hw:
            y = truncate(y, *self.out_hw)
        if self.shortcut:
            y = y + x
        return y

    def extra_repr(self) -> str:
        return (f"{self.channels_in}->{self.channels_out}, kind={self.kind.value}, "
                f"branches={self.branches}, grid={self.grid_hw}, "
                f"nonlinearity={self.nonlinearity}, shortcut={self.shortcut}"
                + (", downsample" if self.downsample else ""))
