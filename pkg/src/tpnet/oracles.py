"""Brute-force reference implementations used for property testing.

Everything here favors obviousness over speed: explicit matrices, index
arithmetic, and nested loops.  The fast kernels in :mod:`tpnet.transforms`
and the layers built on them are checked against these.
"""

from __future__ import annotations

import numpy as np
import torch

from .transforms import (
    FilterBankSpec,
    TransformKind,
    analysis_step_matrix,
    dct_matrix,
    hadamard_matrix,
    idct_matrix,
)


def transform_matrix_1d(n: int, kind: TransformKind, inverse: bool = False,
                        bank: str = "bior13") -> np.ndarray:
    """Explicit n x n matrix of the 1D transform."""
    kind = TransformKind(kind)
    if kind is TransformKind.DCT:
        return idct_matrix(n) if inverse else dct_matrix(n)
    if kind is TransformKind.HT:
        return hadamard_matrix(n) / np.sqrt(n)
    spec = FilterBankSpec.for_length(n, bank)
    mat = np.eye(n)
    band = n
    for _ in range(spec.stages):
        # Block-diagonal: one analysis step per current band.  Bands stay
        # contiguous, each splitting into adjacent [low | high] halves.
        stage = np.zeros((n, n))
        block = analysis_step_matrix(band, spec.lowpass, spec.highpass)
        for b in range(n // band):
            stage[b * band:(b + 1) * band, b * band:(b + 1) * band] = block
        mat = stage @ mat
        band //= 2
    if inverse:
        mat = np.linalg.inv(mat)
    return mat


def matrix_oracle2d(x: torch.Tensor, kind: TransformKind, inverse: bool = False,
                    bank: str = "bior13") -> torch.Tensor:
    """2D transform via one explicit (H*W x H*W) Kronecker matrix.

    Reference route for :func:`tpnet.transforms.transform2d`; also the
    source of the matrix-product MAC convention (2N^3 per axis and
    channel when H = W = N).
    """
    h, w = x.shape[-2], x.shape[-1]
    mh = transform_matrix_1d(h, kind, inverse, bank)
    mw = transform_matrix_1d(w, kind, inverse, bank)
    big = torch.from_numpy(np.kron(mh, mw)).to(x.dtype)
    flat = x.reshape(*x.shape[:-2], h * w)
    return (flat @ big.T).reshape(x.shape)


def conv2d_reference(x: torch.Tensor, weight: torch.Tensor, stride: int = 1,
                     padding: int = 0) -> torch.Tensor:
    """Direct six-loop cross-correlation, the conv2d oracle."""
    b, cin, h, w = x.shape
    cout, cin_w, kh, kw = weight.shape
    assert cin == cin_w
    xp = torch.nn.functional.pad(x, (padding,) * 4)
    hout = (h + 2 * padding - kh) // stride + 1
    wout = (w + 2 * padding - kw) // stride + 1
    out = x.new_zeros(b, cout, hout, wout)
    for bi in range(b):
        for co in range(cout):
            for ci in range(cin):
                for i in range(hout):
                    for j in range(wout):
                        patch = xp[bi, ci, i * stride:i * stride + kh,
                                   j * stride:j * stride + kw]
                        out[bi, co, i, j] += (patch * weight[co, ci]).sum()
    return out


# ---------------------------------------------------------------------------
# Convolution-theorem oracles
# ---------------------------------------------------------------------------


def dyadic_convolve_oracle(a: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """Convolution under XOR index addition: y[n] = sum_m a[m] x[n^m]."""
    n = x.shape[-1]
    if a.shape[-1] != n:
        raise ValueError("length mismatch")
    if n & (n - 1):
        raise ValueError(f"dyadic convolution needs a power-of-2 length, got {n}")
    y = torch.zeros_like(x)
    for out_i in range(n):
        for m in range(n):
            y[..., out_i] = y[..., out_i] + a[..., m] * x[..., out_i ^ m]
    return y


def symmetric_convolve_oracle(a: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """Convolution of x with the symmetrically extended kernel built from a.

    The kernel extension follows the |N-1-k| index rule; the boundary
    convention closes both signals to half-sample-symmetric 2N-periodic
    sequences and convolves circularly.  The result is whole-sample
    symmetric, so the returned window has N+1 samples w[0..N] (sample j
    sits between input samples j-1 and j).  Its interval spectrum (see
    :func:`interval_spectrum`) equals the calibrated product of the
    type-II DCTs of a and x, which is the checkable form of the DCT
    convolution theorem.
    """
    n = x.shape[-1]
    if a.shape[-1] != n:
        raise ValueError("length mismatch")
    extended_kernel = torch.cat([a, torch.flip(a, dims=(-1,))], dim=-1)
    extended_x = torch.cat([x, torch.flip(x, dims=(-1,))], dim=-1)
    period = 2 * n
    z = torch.zeros_like(extended_x)
    for out_i in range(period):
        for m in range(period):
            z[..., out_i] = z[..., out_i] + extended_kernel[..., m] * extended_x[..., (out_i - m) % period]
    idx = [(j - 1) % period for j in range(n + 1)]
    return z[..., idx]


def interval_spectrum(w: torch.Tensor) -> torch.Tensor:
    """First-kind cosine spectrum of a whole-sample-symmetric window.

    For w of length N+1: F[k] = w[0] + (-1)^k w[N] + 2 sum_j w[j] cos(pi j k / N).
    """
    n = w.shape[-1] - 1
    k = torch.arange(n, dtype=w.dtype)
    out = w[..., :1] * torch.ones_like(k) + w[..., n:] * (-1.0) ** k
    for j in range(1, n):
        out = out + 2.0 * w[..., j:j + 1] * torch.cos(torch.pi * j * k / n)
    return out
