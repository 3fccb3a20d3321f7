#!/usr/bin/env python3
"""Regenerate src/tpnet/fixtures/transform_constants.txt.

Derives the filter-bank synthesis pairs by inverting the per-stage
analysis matrices, and calibrates the convolution-theorem scale factors
from the N=2 impulse cases solved with the brute-force oracles.  The
resulting values are frozen in the fixture file that the test suite
reads.
"""

import pathlib
import sys

import numpy as np
import torch

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from tpnet.oracles import (  # noqa: E402
    dyadic_convolve_oracle,
    interval_spectrum,
    symmetric_convolve_oracle,
)
from tpnet.transforms import (  # noqa: E402
    BIOR13_HIGHPASS,
    BIOR13_LOWPASS,
    HAAR_HIGHPASS,
    HAAR_LOWPASS,
    derive_synthesis_filters,
    dct1d,
    ht1d,
)

OUT = pathlib.Path(__file__).resolve().parents[1] / "src/tpnet/fixtures/transform_constants.txt"

HT_SIZES = (2, 4, 8, 16)


def calibrate_dct_scale() -> float:
    # Solve c from the N=2 impulse pair: interval_spectrum(symconv(a, x))
    # must equal c * DCT(a) * DCT(x) for the diagonalization to hold.
    a = torch.tensor([1.0, 0.0], dtype=torch.float64)
    x = torch.tensor([1.0, 0.0], dtype=torch.float64)
    lhs = interval_spectrum(symmetric_convolve_oracle(a, x))
    rhs = dct1d(a) * dct1d(x)
    scale = (lhs / rhs).numpy()
    if not np.allclose(scale, scale[0], atol=1e-12):
        raise RuntimeError(f"per-bin DCT factors disagree: {scale}")
    return float(scale[0])


def calibrate_ht_scale(n: int) -> float:
    a = torch.zeros(n, dtype=torch.float64)
    x = torch.zeros(n, dtype=torch.float64)
    a[0] = 1.0
    x[0] = 1.0
    lhs = ht1d(dyadic_convolve_oracle(a, x))
    rhs = ht1d(a) * ht1d(x)
    scale = (lhs / rhs).numpy()
    if not np.allclose(scale, scale[0], atol=1e-12):
        raise RuntimeError(f"per-bin HT factors disagree at N={n}: {scale}")
    return float(scale[0])


def main() -> None:
    haar_lo, haar_hi = derive_synthesis_filters(HAAR_LOWPASS, HAAR_HIGHPASS)
    bior_lo, bior_hi = derive_synthesis_filters(BIOR13_LOWPASS, BIOR13_HIGHPASS)
    lines = [
        "# Derived filter-bank synthesis coefficients and calibrated",
        "# convolution-theorem scale factors.  One value per line.",
        "# Generated by scripts/derive_fixture.py; regenerate rather than edit.",
        "#",
        "# Synthesis filters invert one analysis stage under periodic",
        "# extension; they anchor like the analysis filters (tap index",
        "# len//2-1 sits on the even output sample).",
        "# The theorem scales were calibrated on the N=2 impulse case:",
        "# interval_spectrum(symmetric_convolve_oracle(a, x)) ==",
        "#     dct_theorem_scale * dct1d(a) * dct1d(x)",
        "# ht1d(dyadic_convolve_oracle(a, x)) ==",
        "#     ht_theorem_scale(N) * ht1d(a) * ht1d(x)",
    ]

    def section(name, values):
        lines.append(f"# section: {name}")
        for v in values:
            lines.append(repr(float(v)))

    section("haar_synthesis_lowpass", haar_lo)
    section("haar_synthesis_highpass", haar_hi)
    section("bior13_synthesis_lowpass", bior_lo)
    section("bior13_synthesis_highpass", bior_hi)
    section("dct_theorem_scale", [calibrate_dct_scale()])
    lines.append(f"# section: ht_theorem_scales  (one per N in {HT_SIZES})")
    for n in HT_SIZES:
        lines.append(repr(calibrate_ht_scale(n)))

    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
