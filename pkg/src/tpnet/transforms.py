"""Forward and inverse 1D/2D transforms: type-II DCT, Hadamard, block wavelet.

Conventions
-----------
* DCT: the forward transform is the unnormalized type-II sum
  ``X[k] = sum_n x[n] cos(pi/N (n+1/2) k)``; the inverse carries the 1/N
  (DC) and 2/N (AC) weights.  The pair round-trips exactly.
* HT: symmetric sqrt(1/N) normalization on both directions, so the
  transform is its own inverse.  Computed with log2(N) butterfly stages
  (additions only, up to the final scale).
* BWT: a full M-stage two-channel subband decomposition of a length-2^M
  block.  Each stage filters every current band with the low-pass and
  high-pass filters under periodic (circular) extension and downsamples
  by 2.  Filters shorter than a band wrap around (taps fold mod the band
  length), which keeps every stage an invertible square map.  Synthesis
  filters are derived numerically from the per-stage analysis matrix.

All functions take torch tensors, operate on the trailing dimension(s),
preserve dtype, and are differentiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
import torch


class TransformKind(str, Enum):
    """Which 2D transform pair a perceptron layer uses."""

    DCT = "dct"
    HT = "ht"
    BWT = "bwt"


HAAR_LOWPASS = (1.0, 1.0)
HAAR_HIGHPASS = (-1.0, 1.0)
# Bior 1.3 analysis filters (unnormalized, low-pass DC gain 2).
BIOR13_LOWPASS = (-0.125, 0.125, 1.0, 1.0, 0.125, -0.125)
BIOR13_HIGHPASS = (-1.0, 1.0)


@dataclass(frozen=True)
class FilterBankSpec:
    """Two-channel analysis filter pair plus the decomposition depth."""

    lowpass: tuple[float, ...]
    highpass: tuple[float, ...]
    stages: int

    @staticmethod
    def haar(stages: int) -> "FilterBankSpec":
        return FilterBankSpec(HAAR_LOWPASS, HAAR_HIGHPASS, stages)

    @staticmethod
    def bior13(stages: int) -> "FilterBankSpec":
        return FilterBankSpec(BIOR13_LOWPASS, BIOR13_HIGHPASS, stages)

    @staticmethod
    def for_length(n: int, wavelet: str = "bior13") -> "FilterBankSpec":
        """Full-depth spec (stages = log2(n)) for an n-point transform."""
        if not _is_pow2(n):
            raise ValueError(f"transform length {n} is not a power of 2")
        stages = n.bit_length() - 1
        if wavelet == "bior13":
            return FilterBankSpec.bior13(stages)
        if wavelet == "haar":
            return FilterBankSpec.haar(stages)
        raise ValueError(f"unknown wavelet {wavelet!r}")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _require_pow2(n: int, what: str) -> None:
    if not _is_pow2(n):
        raise ValueError(f"{what} requires a power-of-2 length, got {n}")


# ---------------------------------------------------------------------------
# DCT
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _dct_matrix_np(n: int, orthonormal: bool) -> np.ndarray:
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    mat = np.cos(np.pi * (m + 0.5) * k / n)
    if orthonormal:
        mat = mat * np.sqrt(2.0 / n)
        mat[0] /= math.sqrt(2.0)
    return mat


def dct_matrix(n: int, orthonormal: bool = False) -> np.ndarray:
    """Type-II DCT matrix; rows are frequencies.

    The default is the unnormalized form used throughout; the orthonormal
    variant exists for energy (Parseval) arguments only.
    """
    if n < 1:
        raise ValueError("empty input")
    return _dct_matrix_np(n, orthonormal).copy()


def idct_matrix(n: int, orthonormal: bool = False) -> np.ndarray:
    """Inverse of :func:`dct_matrix` (1/N, 2/N weighted transpose)."""
    if n < 1:
        raise ValueError("empty input")
    c = _dct_matrix_np(n, orthonormal)
    if orthonormal:
        return c.T.copy()
    w = np.full(n, 2.0 / n)
    w[0] = 1.0 / n
    return (c.T * w[None, :]).copy()


@lru_cache(maxsize=None)
def _cached_torch_matrix(kind: str, n: int, dtype: torch.dtype) -> torch.Tensor:
    mat = dct_matrix(n) if kind == "dct" else idct_matrix(n)
    return torch.from_numpy(mat).to(dtype)


def dct1d(x: torch.Tensor, dim: int = -1) -> torch.Tensor:
    """Unnormalized type-II DCT along ``dim``."""
    n = x.shape[dim]
    if n < 1:
        raise ValueError("empty input")
    mat = _cached_torch_matrix("dct", n, x.dtype)
    return torch.movedim(torch.movedim(x, dim, -1) @ mat.T, -1, dim)


def idct1d(x: torch.Tensor, dim: int = -1) -> torch.Tensor:
    """Inverse of :func:`dct1d` (1/N DC weight, 2/N AC weights)."""
    n = x.shape[dim]
    if n < 1:
        raise ValueError("empty input")
    mat = _cached_torch_matrix("idct", n, x.dtype)
    return torch.movedim(torch.movedim(x, dim, -1) @ mat.T, -1, dim)


# ---------------------------------------------------------------------------
# Hadamard
# ---------------------------------------------------------------------------


def hadamard_matrix(n: int) -> np.ndarray:
    """Hadamard matrix in natural (Sylvester) order via the Kronecker recursion."""
    _require_pow2(n, "Hadamard matrix")
    h = np.array([[1.0]])
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]])
    while h.shape[0] < n:
        h = np.kron(h2, h)
    return h


def ht1d(x: torch.Tensor, dim: int = -1) -> torch.Tensor:
    """Hadamard transform along ``dim`` with sqrt(1/N) normalization.

    Self-inverse: applying it twice returns the input.  The butterfly
    needs only additions; the single multiplicative scale is applied at
    the end.
    """
    n = x.shape[dim]
    _require_pow2(n, "ht1d")
    y = torch.movedim(x, dim, -1).contiguous()
    lead = y.shape[:-1]
    y = y.reshape(-1, n)
    width = 1
    while width < n:
        y = y.reshape(-1, n // (2 * width), 2, width)
        a = y[:, :, 0, :]
        b = y[:, :, 1, :]
        y = torch.stack((a + b, a - b), dim=2).reshape(-1, n)
        width *= 2
    y = (y / math.sqrt(n)).reshape(*lead, n)
    return torch.movedim(y, -1, dim)


# ---------------------------------------------------------------------------
# Block wavelet transform
# ---------------------------------------------------------------------------


def _filter_anchor(length: int) -> int:
    # Aligns the principal {1, 1} taps of both Haar and Bior 1.3 low-pass
    # filters with samples (2i, 2i+1); high-pass filters anchor the same way.
    return length // 2 - 1


@lru_cache(maxsize=None)
def _band_indices(length: int, taps: int) -> torch.Tensor:
    i = torch.arange(length // 2)[:, None]
    k = torch.arange(taps)[None, :]
    return (2 * i + k - _filter_anchor(taps)) % length


def _analysis_step(band: torch.Tensor, filt: torch.Tensor) -> torch.Tensor:
    # band: (..., L) -> (..., L/2), circular extension, downsample by 2.
    length = band.shape[-1]
    idx = _band_indices(length, filt.numel()).to(band.device)
    return (band[..., idx] * filt).sum(-1)


def _synthesis_step(low: torch.Tensor, high: torch.Tensor,
                    s_lo: torch.Tensor, s_hi: torch.Tensor) -> torch.Tensor:
    # Upsample-by-2 and filter with the synthesis pair, circularly.
    length = 2 * low.shape[-1]
    out = low.new_zeros(*low.shape[:-1], length)
    idx_lo = _band_indices(length, s_lo.numel()).to(low.device)
    idx_hi = _band_indices(length, s_hi.numel()).to(low.device)
    for k in range(s_lo.numel()):
        out = out.index_add(-1, idx_lo[:, k], low * s_lo[k])
    for k in range(s_hi.numel()):
        out = out.index_add(-1, idx_hi[:, k], high * s_hi[k])
    return out


def analysis_step_matrix(length: int, lowpass, highpass) -> np.ndarray:
    """One filter-bank stage on a length-L band as an L x L matrix.

    Rows 0..L/2-1 produce the low band, rows L/2.. the high band.  Taps
    beyond the band fold circularly (mod L).
    """
    mat = np.zeros((length, length))
    for i in range(length // 2):
        for k, c in enumerate(lowpass):
            mat[i, (2 * i + k - _filter_anchor(len(lowpass))) % length] += c
        for k, c in enumerate(highpass):
            mat[length // 2 + i, (2 * i + k - _filter_anchor(len(highpass))) % length] += c
    return mat


@lru_cache(maxsize=None)
def derive_synthesis_filters(lowpass: tuple, highpass: tuple) -> tuple[tuple, tuple]:
    """Synthesis pair giving perfect reconstruction for the analysis pair.

    Computed once by inverting the per-stage analysis matrix at a size
    large enough that no tap folds; the inverse columns are shifted copies
    of two compact filters (length of the opposite analysis filter), which
    are extracted and returned.
    """
    taps_lo = len(highpass)
    taps_hi = len(lowpass)
    ref = 1
    while ref < 4 * max(taps_lo, taps_hi):
        ref *= 2
    inv = np.linalg.inv(analysis_step_matrix(ref, lowpass, highpass))
    s_lo = np.array([inv[(k - _filter_anchor(taps_lo)) % ref, 0] for k in range(taps_lo)])
    s_hi = np.array([inv[(k - _filter_anchor(taps_hi)) % ref, ref // 2] for k in range(taps_hi)])
    # The extraction is only valid if shifted copies of (s_lo, s_hi)
    # actually rebuild the whole inverse.
    rebuilt = np.zeros((ref, ref))
    for j in range(ref // 2):
        for k, c in enumerate(s_lo):
            rebuilt[(2 * j + k - _filter_anchor(taps_lo)) % ref, j] += c
        for k, c in enumerate(s_hi):
            rebuilt[(2 * j + k - _filter_anchor(taps_hi)) % ref, ref // 2 + j] += c
    if not np.allclose(rebuilt, inv, atol=1e-12):
        raise ValueError("analysis pair has no compact shift-invariant synthesis pair")
    return tuple(s_lo.tolist()), tuple(s_hi.tolist())


def _check_bwt_input(n: int, spec: FilterBankSpec) -> None:
    _require_pow2(n, "block wavelet transform")
    if not 0 <= spec.stages <= n.bit_length() - 1:
        raise ValueError(f"{spec.stages} stages invalid for length {n}")


def bwt1d(x: torch.Tensor, spec: FilterBankSpec, dim: int = -1) -> torch.Tensor:
    """Full-tree subband decomposition along ``dim``.

    Every current band is split into (low, high) at each stage, so after
    M stages the output is the concatenation of 2^M equal-length bands in
    depth-first, low-branch-first order (band 0 is the fully low-passed
    one).  With the Haar pair this computes the Hadamard transform up to
    a fixed per-band reordering and sign/scale.
    """
    n = x.shape[dim]
    _check_bwt_input(n, spec)
    h = torch.tensor(spec.lowpass, dtype=x.dtype, device=x.device)
    g = torch.tensor(spec.highpass, dtype=x.dtype, device=x.device)
    bands = [torch.movedim(x, dim, -1)]
    for _ in range(spec.stages):
        nxt = []
        for band in bands:
            nxt.append(_analysis_step(band, h))
            nxt.append(_analysis_step(band, g))
        bands = nxt
    return torch.movedim(torch.cat(bands, dim=-1), -1, dim)


def ibwt1d(x: torch.Tensor, spec: FilterBankSpec, dim: int = -1) -> torch.Tensor:
    """Inverse of :func:`bwt1d` (perfect reconstruction)."""
    n = x.shape[dim]
    _check_bwt_input(n, spec)
    s_lo, s_hi = derive_synthesis_filters(spec.lowpass, spec.highpass)
    s_lo = torch.tensor(s_lo, dtype=x.dtype, device=x.device)
    s_hi = torch.tensor(s_hi, dtype=x.dtype, device=x.device)
    y = torch.movedim(x, dim, -1)
    bands = list(torch.split(y, n >> spec.stages, dim=-1))
    for _ in range(spec.stages):
        bands = [
            _synthesis_step(bands[2 * i], bands[2 * i + 1], s_lo, s_hi)
            for i in range(len(bands) // 2)
        ]
    return torch.movedim(bands[0], -1, dim)


# ---------------------------------------------------------------------------
# 2D wrappers
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _axis_matrix(kind: TransformKind, n: int, inverse: bool, bank: str,
                 dtype: torch.dtype) -> torch.Tensor:
    """1D transform as an n x n matrix, derived from the kernels above."""
    if kind is TransformKind.DCT:
        return _cached_torch_matrix("idct" if inverse else "dct", n, dtype)
    with torch.no_grad():
        eye = torch.eye(n, dtype=dtype)
        if kind is TransformKind.HT:
            return ht1d(eye, dim=0)
        spec = FilterBankSpec.for_length(n, bank)
        return (ibwt1d if inverse else bwt1d)(eye, spec, dim=0)


def transform2d(x: torch.Tensor, kind: TransformKind, inverse: bool = False,
                bank: str = "bior13") -> torch.Tensor:
    """Separable 2D transform over the trailing (height, width) dims.

    Applied independently per leading index (channel/batch); each axis is
    one product with the cached 1D transform matrix, which is how the
    layers run it.  HT and BWT require power-of-2 spatial dims; pad with
    :func:`pad_pow2` first.
    """
    if x.ndim < 2:
        raise ValueError("transform2d needs at least 2 dims")
    kind = TransformKind(kind)
    if kind is TransformKind.HT and inverse:
        inverse = False  # self-inverse
    for n, what in ((x.shape[-1], "width"), (x.shape[-2], "height")):
        if kind is not TransformKind.DCT:
            _require_pow2(n, f"{kind.value} transform2d {what}")
        elif n < 1:
            raise ValueError("empty input")
    mh = _axis_matrix(kind, x.shape[-2], inverse, bank, x.dtype)
    mw = _axis_matrix(kind, x.shape[-1], inverse, bank, x.dtype)
    return mh @ x @ mw.T


def pad_pow2(x: torch.Tensor) -> torch.Tensor:
    """Zero-pad trailing (height, width) dims up to the next powers of 2."""
    h, w = x.shape[-2], x.shape[-1]
    ph = 1 << max(h - 1, 0).bit_length() if h > 1 else 1
    pw = 1 << max(w - 1, 0).bit_length() if w > 1 else 1
    if (ph, pw) == (h, w):
        return x
    return torch.nn.functional.pad(x, (0, pw - w, 0, ph - h))


def truncate(x: torch.Tensor, height: int, width: int) -> torch.Tensor:
    """Drop high-index rows/columns, inverse of :func:`pad_pow2`."""
    if height > x.shape[-2] or width > x.shape[-1]:
        raise ValueError(
            f"truncate target {height}x{width} larger than input "
            f"{x.shape[-2]}x{x.shape[-1]}"
        )
    return x[..., :height, :width]


def idct2_truncate(x: torch.Tensor, factor: int = 2) -> torch.Tensor:
    """Inverse 2D DCT keeping only the low-frequency block.

    Keeps coefficients [0:H/f, 0:W/f], rescales by 1/f^2 so that constant
    images reconstruct to the same constant at the reduced size, and
    applies the reduced-size inverse.
    """
    h, w = x.shape[-2], x.shape[-1]
    if h % factor or w % factor:
        raise ValueError(f"spatial dims {h}x{w} not divisible by {factor}")
    low = x[..., : h // factor, : w // factor] / (factor * factor)
    return transform2d(low, TransformKind.DCT, inverse=True)
