import math

import pytest
import torch
import torch.nn.functional as F

from tpnet.nn import (
    batchnorm,
    conv1x1,
    conv3x3,
    global_avg_pool,
    grad_check,
    softmax_cross_entropy,
)
from tpnet.oracles import conv2d_reference


def rand(*shape, seed=0):
    g = torch.Generator().manual_seed(seed)
    return torch.randn(*shape, dtype=torch.float64, generator=g)


class TestConv2d:
    @pytest.mark.parametrize("k,stride,padding", [(3, 1, 1), (3, 2, 1), (1, 1, 0)])
    def test_matches_six_loop_reference(self, k, stride, padding):
        x = rand(2, 3, 8, 8, seed=k)
        w = rand(4, 3, k, k, seed=k + 10)
        fast = F.conv2d(x, w, stride=stride, padding=padding)
        slow = conv2d_reference(x, w, stride=stride, padding=padding)
        assert (fast - slow).abs().max() < 1e-10

    def test_1x1_identity_permutation_kernel_permutes_channels(self):
        x = rand(1, 3, 4, 4)
        perm = [2, 0, 1]
        w = torch.zeros(3, 3, 1, 1, dtype=torch.float64)
        for out_c, in_c in enumerate(perm):
            w[out_c, in_c, 0, 0] = 1.0
        out = F.conv2d(x, w)
        assert torch.equal(out, x[:, perm])

    def test_3x3_centered_impulse_is_identity(self):
        x = rand(1, 2, 5, 5)
        w = torch.zeros(2, 2, 3, 3, dtype=torch.float64)
        for c in range(2):
            w[c, c, 1, 1] = 1.0
        assert torch.allclose(F.conv2d(x, w, padding=1), x)

    def test_gradients(self):
        x = rand(1, 2, 4, 4).requires_grad_(True)
        w = rand(2, 2, 3, 3, seed=5).requires_grad_(True)
        err = grad_check(lambda a, b: F.conv2d(a, b, padding=1).pow(2).sum(), [x, w])
        assert err <= 1e-4

    def test_layer_helpers_have_no_bias(self):
        assert conv3x3(4, 8).bias is None
        assert conv1x1(4, 8).bias is None


class TestBatchNorm:
    def test_identity_on_normalized_input(self):
        bn = batchnorm(3).double().train()
        x = rand(64, 3, 8, 8)
        x = (x - x.mean(dim=(0, 2, 3), keepdim=True)) / x.std(dim=(0, 2, 3),
                                                              unbiased=False, keepdim=True)
        out = bn(x)
        assert (out - x).abs().max() < 1e-4

    def test_training_mode_normalizes(self):
        bn = batchnorm(4).double().train()
        out = bn(3 * rand(32, 4, 8, 8, seed=2) + 1)
        assert out.mean(dim=(0, 2, 3)).abs().max() < 1e-10
        # the 1e-5 epsilon shifts the variance by about eps/sigma^2
        assert (out.var(dim=(0, 2, 3), unbiased=False) - 1).abs().max() < 1e-5

    def test_eval_before_stats_uses_identity_stats(self):
        bn = batchnorm(2).double().eval()
        x = rand(4, 2, 4, 4, seed=3)
        assert torch.allclose(bn(x), x / math.sqrt(1 + 1e-5), atol=1e-12)

    def test_channel_mismatch_rejected(self):
        bn = batchnorm(3)
        with pytest.raises(RuntimeError):
            bn(torch.zeros(1, 4, 2, 2))

    def test_gradients(self):
        x = rand(4, 2, 3, 3).requires_grad_(True)
        w = torch.ones(2, dtype=torch.float64).requires_grad_(True)
        b = torch.zeros(2, dtype=torch.float64).requires_grad_(True)

        def fn(a, weight, bias):
            out = F.batch_norm(a, None, None, weight, bias, training=True)
            return (out * rand(4, 2, 3, 3, seed=9)).sum()

        assert grad_check(fn, [x, w, b]) <= 1e-4


class TestActivations:
    def test_relu_values(self):
        assert F.relu(torch.tensor(-1.0)).item() == 0
        assert F.relu(torch.tensor(2.0)).item() == 2

    def test_leaky_relu_slope(self):
        assert F.leaky_relu(torch.tensor(-1.0), 0.01).item() == pytest.approx(-0.01)

    def test_silu_zero(self):
        assert F.silu(torch.tensor(0.0)).item() == 0


class TestHeadOps:
    def test_gap_of_constant(self):
        x = torch.full((2, 3, 4, 4), 1.25)
        assert torch.allclose(global_avg_pool(x), torch.full((2, 3), 1.25))

    def test_uniform_logits_loss_is_log_k(self):
        logits = torch.zeros(7, 10)
        labels = torch.arange(7) % 10
        assert softmax_cross_entropy(logits, labels).item() == pytest.approx(math.log(10))

    def test_label_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            softmax_cross_entropy(torch.zeros(2, 10), torch.tensor([0, 10]))

    def test_linear_plus_ce_gradients(self):
        x = rand(3, 5).requires_grad_(True)
        w = rand(4, 5, seed=1).requires_grad_(True)
        b = rand(4, seed=2).requires_grad_(True)
        labels = torch.tensor([0, 3, 1])

        def fn(a, weight, bias):
            return F.cross_entropy(F.linear(a, weight, bias), labels)

        assert grad_check(fn, [x, w, b]) <= 1e-4


class TestGradCheck:
    def test_linear_map_is_exact(self):
        x = rand(5).requires_grad_(True)
        w = rand(5, seed=4)
        assert grad_check(lambda a: (a * w).sum(), [x]) <= 1e-10

    def test_kink_skipping(self):
        # relu at exactly 0 would fail a naive check; the kink filter
        # skips it.
        x = torch.tensor([0.0, 1.0, -2.0], dtype=torch.float64, requires_grad=True)
        err = grad_check(lambda a: F.relu(a).sum(), [x],
                         kink_distance=lambda a: [a])
        assert err <= 1e-10


def test_forward_determinism():
    conv = conv3x3(3, 8).double()
    x = rand(2, 3, 8, 8)
    assert torch.equal(conv(x), conv(x))
