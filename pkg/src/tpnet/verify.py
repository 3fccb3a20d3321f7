"""Self-contained property checks behind the ``verify`` CLI subcommand.

Each check returns (name, passed, detail); the CLI prints one line per
check and exits nonzero if any fail.  The pytest suite covers the same
ground (and more); this module exists so a built artifact can be
sanity-checked without a test harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .accounting import count_costs
from .layers import TransformPerceptron2d, soft_threshold
from .models import build_resnet20
from .nn import grad_check
from .oracles import (
    dyadic_convolve_oracle,
    interval_spectrum,
    matrix_oracle2d,
    symmetric_convolve_oracle,
    transform_matrix_1d,
)
from .transforms import TransformKind, hadamard_matrix, ht1d, dct1d, transform2d

SIZES = (4, 8, 16, 32)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name, err, tol):
    return CheckResult(name, err <= tol, f"max err {err:.3e} (tol {tol:.0e})")


def check_round_trips() -> list[CheckResult]:
    out = []
    g = torch.Generator().manual_seed(0)
    for kind in TransformKind:
        worst64 = worst32 = 0.0
        for n in SIZES:
            x64 = torch.randn(3, n, n, dtype=torch.float64, generator=g)
            x32 = x64.float()
            worst64 = max(worst64, (transform2d(transform2d(x64, kind), kind, True)
                                    - x64).abs().max().item())
            worst32 = max(worst32, (transform2d(transform2d(x32, kind), kind, True)
                                    - x32).abs().max().item())
        out.append(_check(f"round-trip {kind.value} double", worst64, 1e-10))
        out.append(_check(f"round-trip {kind.value} single", worst32, 1e-5))
    return out


def check_oracle_equivalence() -> list[CheckResult]:
    out = []
    g = torch.Generator().manual_seed(1)
    for kind in TransformKind:
        worst = 0.0
        for n in SIZES:
            x = torch.randn(2, n, n, dtype=torch.float64, generator=g)
            for inverse in (False, True):
                worst = max(worst, (transform2d(x, kind, inverse)
                                    - matrix_oracle2d(x, kind, inverse)).abs().max().item())
        out.append(_check(f"oracle equivalence {kind.value}", worst, 1e-10))
    return out


def check_hadamard_recursion() -> CheckResult:
    worst = 0.0
    for n in (2, 4, 8, 16, 32):
        eye = torch.eye(n, dtype=torch.float64)
        butterfly = ht1d(eye, dim=0) * math.sqrt(n)
        worst = max(worst, np.abs(butterfly.numpy() - hadamard_matrix(n)).max())
    return _check("hadamard butterfly == kronecker recursion", worst, 1e-12)


def check_theorems() -> list[CheckResult]:
    g = torch.Generator().manual_seed(2)
    worst1 = 0.0
    for n in (2, 4, 8):
        pairs = [(torch.eye(n, dtype=torch.float64)[i], torch.eye(n, dtype=torch.float64)[j])
                 for i in range(n) for j in range(n)]
        pairs += [(torch.randn(n, dtype=torch.float64, generator=g),
                   torch.randn(n, dtype=torch.float64, generator=g)) for _ in range(100)]
        for a, x in pairs:
            lhs = interval_spectrum(symmetric_convolve_oracle(a, x))
            rhs = 4.0 * dct1d(a) * dct1d(x)
            worst1 = max(worst1, (lhs - rhs).abs().max().item())
    worst2 = 0.0
    for n in (2, 4, 8, 16):
        pairs = [(torch.eye(n, dtype=torch.float64)[i], torch.eye(n, dtype=torch.float64)[j])
                 for i in range(n) for j in range(n)]
        pairs += [(torch.randn(n, dtype=torch.float64, generator=g),
                   torch.randn(n, dtype=torch.float64, generator=g)) for _ in range(100)]
        for a, x in pairs:
            lhs = ht1d(dyadic_convolve_oracle(a, x))
            rhs = math.sqrt(n) * ht1d(a) * ht1d(x)
            worst2 = max(worst2, (lhs - rhs).abs().max().item())
    return [_check("dct convolution theorem (symmetric conv)", worst1, 1e-9),
            _check("ht convolution theorem (dyadic conv)", worst2, 1e-9)]


def check_gradients() -> list[CheckResult]:
    torch.manual_seed(3)
    out = []

    x = torch.randn(1, 2, 4, 4, dtype=torch.float64, requires_grad=True)
    w = torch.randn(3, 2, 3, 3, dtype=torch.float64, requires_grad=True)
    err = grad_check(lambda a, b: torch.nn.functional.conv2d(a, b, padding=1).pow(2).sum(),
                     [x, w])
    out.append(_check("grad conv2d 3x3", err, 1e-4))

    z = torch.randn(2, 3, 4, 4, dtype=torch.float64, requires_grad=True)
    t = (0.3 * torch.randn(4, 4, dtype=torch.float64)).requires_grad_(True)
    err = grad_check(lambda a, b: soft_threshold(a, b).pow(2).sum(), [z, t],
                     kink_distance=lambda a, b: [a.abs() - b.abs(), None])
    out.append(_check("grad soft-threshold", err, 1e-4))

    layer = TransformPerceptron2d(3, size=8, kind=TransformKind.DCT).double()
    with torch.no_grad():
        layer.thresholds.uniform_(0.2, 0.4)
    xin = torch.randn(1, 3, 8, 8, dtype=torch.float64, requires_grad=True)
    names = [n for n, _ in layer.named_parameters()]

    def layer_fn(a, *theta):
        return torch.func.functional_call(layer, dict(zip(names, theta)), (a,)).pow(2).sum()

    err = grad_check(layer_fn, [xin, *layer.parameters()])
    out.append(_check("grad transform-perceptron end-to-end", err, 1e-4))
    return out


def check_cost_reproduction() -> list[CheckResult]:
    targets = {
        "resnet20": 272474, "1c-dct": 151514, "1c-ht": 151514,
        "3c-dct": 199898, "3c-ht": 199898, "3c-bwt": 199898,
        "resnet20+1c-dct-p": 276826, "all-dct": 51034,
    }
    out = []
    reports = {name: count_costs(build_resnet20(name)) for name in targets}
    ok = all(reports[n].total_params == want for n, want in targets.items())
    out.append(CheckResult("parameter counts (published table)", ok,
                           ", ".join(f"{n}={reports[n].total_params}" for n in targets)))
    base = reports["resnet20"].total_macs
    deltas = {"1c-dct": 10530816, "1c-ht": 18788352}
    ok = all(base - reports[n].total_macs == want for n, want in deltas.items())
    out.append(CheckResult("mac deltas (closed form)", ok,
                           ", ".join(f"{n}=-{base - reports[n].total_macs}" for n in deltas)))
    macs_target = {"resnet20": 41.32e6, "1c-dct": 30.79e6, "3c-dct": 35.68e6,
                   "1c-ht": 22.53e6, "3c-ht": 27.42e6}
    rel = {n: abs(reports[n].total_macs - want) / want for n, want in macs_target.items()}
    out.append(CheckResult("mac totals within 0.5% of published", max(rel.values()) <= 0.005,
                           ", ".join(f"{n}:{v * 100:.2f}%" for n, v in rel.items())))
    return out


def run_all() -> list[CheckResult]:
    results = []
    results += check_round_trips()
    results += check_oracle_equivalence()
    results.append(check_hadamard_recursion())
    results += check_theorems()
    results += check_gradients()
    results += check_cost_reproduction()
    return results
