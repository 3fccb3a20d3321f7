import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from tpnet.layers import (
    NONLINEARITIES,
    TransformPerceptron2d,
    scale,
    soft_threshold,
    tp_parameter_shapes,
)
from tpnet.nn import grad_check
from tpnet.transforms import TransformKind, transform2d

KINDS = list(TransformKind)


def rand(*shape, seed=0, dtype=torch.float64):
    g = torch.Generator().manual_seed(seed)
    return torch.randn(*shape, dtype=dtype, generator=g)


def layer_fn(layer):
    names = [n for n, _ in layer.named_parameters()]

    def fn(x, *theta):
        return torch.func.functional_call(layer, dict(zip(names, theta)), (x,)).pow(2).sum()

    return fn


class TestSoftThreshold:
    def test_analytic_values(self):
        t = torch.tensor(0.5)
        assert soft_threshold(torch.tensor(1.2), t).item() == pytest.approx(0.7)
        assert soft_threshold(torch.tensor(-0.3), t).item() == 0.0
        assert soft_threshold(torch.tensor(-1.0), t).item() == pytest.approx(-0.5)

    def test_zero_threshold_is_identity(self):
        x = rand(3, 4, 4)
        assert torch.equal(soft_threshold(x, torch.zeros(4, 4, dtype=torch.float64)), x)

    @given(seed=st.integers(0, 2**16), tval=st.floats(0, 2))
    @settings(max_examples=30, deadline=None)
    def test_antisymmetry(self, seed, tval):
        x = rand(2, 5, 5, seed=seed)
        t = torch.full((5, 5), tval, dtype=torch.float64)
        assert torch.allclose(soft_threshold(-x, t), -soft_threshold(x, t))

    def test_negative_raw_threshold_acts_like_abs(self):
        x = rand(4, 4)
        t = torch.full((4, 4), -0.3, dtype=torch.float64)
        assert torch.equal(soft_threshold(x, t),
                           soft_threshold(x, t.abs()))

    def test_subgradients(self):
        x = torch.tensor([2.0, -2.0, 0.1], dtype=torch.float64, requires_grad=True)
        t = torch.tensor([0.5, -0.5, 0.5], dtype=torch.float64, requires_grad=True)
        soft_threshold(x, t).sum().backward()
        # dx: 1 outside the dead zone, 0 inside
        assert torch.equal(x.grad, torch.tensor([1.0, 1.0, 0.0], dtype=torch.float64))
        # dt: -sign(x)*sign(t) outside, 0 inside
        assert torch.equal(t.grad, torch.tensor([-1.0, -1.0, 0.0], dtype=torch.float64))

    def test_zero_threshold_gradient_is_zero(self):
        x = torch.tensor([1.5], dtype=torch.float64)
        t = torch.zeros(1, dtype=torch.float64, requires_grad=True)
        soft_threshold(x, t).sum().backward()
        assert t.grad.item() == 0.0

    def test_gradcheck_away_from_kinks(self):
        x = rand(2, 2, 4, 4, seed=5).requires_grad_(True)
        t = (0.25 + 0.1 * rand(4, 4, seed=6).abs()).requires_grad_(True)
        err = grad_check(lambda a, b: soft_threshold(a, b).pow(2).sum(), [x, t],
                         kink_distance=lambda a, b: [a.abs() - b.abs(), None])
        assert err <= 1e-4


class TestScale:
    def test_all_ones_identity(self):
        x = rand(2, 3, 4, 4)
        assert torch.equal(scale(x, torch.ones(4, 4, dtype=torch.float64)), x)

    def test_zero_weights(self):
        x = rand(2, 3, 4, 4)
        assert scale(x, torch.zeros(4, 4, dtype=torch.float64)).abs().max() == 0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            scale(rand(1, 1, 4, 4), torch.ones(3, 3))

    def test_gradients(self):
        x = rand(1, 2, 4, 4).requires_grad_(True)
        a = rand(4, 4, seed=2).requires_grad_(True)
        assert grad_check(lambda u, v: scale(u, v).pow(2).sum(), [x, a]) <= 1e-4


class TestLayerForward:
    @pytest.mark.parametrize("kind", KINDS)
    def test_identity_configuration_doubles_input(self, kind):
        # A=1, V=I, t=0, single branch: inverse(forward(x)) + x == 2x.
        layer = TransformPerceptron2d(3, size=8, kind=kind)
        with torch.no_grad():
            layer.mixing.zero_()
            for c in range(3):
                layer.mixing[0, c, c, 0, 0] = 1.0
        x = torch.randn(2, 3, 8, 8)
        assert (layer(x) - 2 * x).abs().max() < 1e-5

    def test_second_branch_zeroed_matches_single_branch(self):
        two = TransformPerceptron2d(4, size=8, branches=2)
        one = TransformPerceptron2d(4, size=8, branches=1, shortcut=False)
        with torch.no_grad():
            two.scale_weights[1].zero_()
            two.mixing[1].zero_()
            one.scale_weights.copy_(two.scale_weights[:1])
            one.mixing.copy_(two.mixing[:1])
            one.thresholds.copy_(two.thresholds[:1])
        x = torch.randn(2, 4, 8, 8)
        assert (two(x) - one(x)).abs().max() < 1e-6

    @pytest.mark.parametrize("kind", KINDS)
    def test_shape_preserved_non_pow2(self, kind):
        layer = TransformPerceptron2d(2, size=(12, 20), kind=kind)
        x = torch.randn(1, 2, 12, 20)
        assert layer(x).shape == x.shape

    def test_channel_mismatch_rejected(self):
        layer = TransformPerceptron2d(4, size=8)
        with pytest.raises(ValueError):
            layer(torch.randn(1, 3, 8, 8))

    def test_spatial_mismatch_rejected(self):
        layer = TransformPerceptron2d(4, size=8)
        with pytest.raises(ValueError):
            layer(torch.randn(1, 4, 16, 16))

    def test_channel_additivity(self):
        # Inverse-transforming the branch sum equals summing per-branch
        # inverses: transform linearity exercised in situ.
        layer = TransformPerceptron2d(3, size=8, branches=3, kind=TransformKind.DCT)
        with torch.no_grad():
            layer.scale_weights.normal_()
            layer.thresholds.uniform_(0.0, 0.3)
        x = torch.randn(2, 3, 8, 8)
        spectrum = transform2d(x, TransformKind.DCT)
        per_branch = []
        for i in range(3):
            z = torch.nn.functional.conv2d(spectrum * layer.scale_weights[i],
                                           layer.mixing[i])
            z = soft_threshold(z, layer.thresholds[i])
            per_branch.append(transform2d(z, TransformKind.DCT, inverse=True))
        assert (layer(x) - sum(per_branch)).abs().max() < 1e-5

    def test_soft_vs_plain_relu_differ_only_on_negatives(self):
        # With thresholds at zero the soft-threshold branch is the
        # identity, so the two nonlinearities differ by relu(z) - z,
        # supported on the negative entries.
        z = rand(2, 4, 6, 6, seed=8)
        zero_t = torch.zeros(6, 6, dtype=torch.float64)
        soft = soft_threshold(z, zero_t)
        plain = torch.relu(z)
        diff = soft - plain
        assert torch.equal(diff[z >= 0], torch.zeros_like(diff[z >= 0]))
        assert torch.equal(diff[z < 0], z[z < 0])

    def test_downsample_halves_spatial_dims(self):
        layer = TransformPerceptron2d(4, 8, size=16, downsample=True)
        out = layer(torch.randn(2, 4, 16, 16))
        assert out.shape == (2, 8, 8, 8)

    def test_downsample_non_dct_rejected(self):
        with pytest.raises(ValueError):
            TransformPerceptron2d(4, size=16, kind=TransformKind.HT, downsample=True)

    def test_shortcut_defaults(self):
        assert TransformPerceptron2d(4, size=8).shortcut
        assert not TransformPerceptron2d(4, size=8, branches=3).shortcut
        assert not TransformPerceptron2d(4, 8, size=8).shortcut
        assert TransformPerceptron2d(4, size=8, branches=3, shortcut=True).shortcut

    def test_invalid_shortcut_rejected(self):
        with pytest.raises(ValueError):
            TransformPerceptron2d(4, 8, size=8, shortcut=True)

    @pytest.mark.parametrize("nonlinearity", NONLINEARITIES)
    def test_all_nonlinearities_run_and_train(self, nonlinearity):
        layer = TransformPerceptron2d(3, size=8, nonlinearity=nonlinearity)
        out = layer(torch.randn(2, 3, 8, 8))
        out.sum().backward()
        assert all(p.grad is not None for p in layer.parameters())


class TestLayerGradients:
    def test_full_gradcheck_dct(self):
        layer = TransformPerceptron2d(4, size=8, kind=TransformKind.DCT).double()
        with torch.no_grad():
            layer.thresholds.uniform_(0.2, 0.4)
        x = rand(1, 4, 8, 8, seed=3).requires_grad_(True)
        assert grad_check(layer_fn(layer), [x, *layer.parameters()]) <= 1e-4

    @pytest.mark.parametrize("kind", [TransformKind.HT, TransformKind.BWT])
    def test_full_gradcheck_other_kinds(self, kind):
        layer = TransformPerceptron2d(2, size=4, kind=kind, branches=2).double()
        with torch.no_grad():
            layer.thresholds.uniform_(0.2, 0.4)
        x = rand(1, 2, 4, 4, seed=4).requires_grad_(True)
        assert grad_check(layer_fn(layer), [x, *layer.parameters()]) <= 1e-4

    def test_downsample_gradcheck(self):
        layer = TransformPerceptron2d(2, 4, size=8, downsample=True).double()
        with torch.no_grad():
            layer.thresholds.uniform_(0.2, 0.4)
        x = rand(1, 2, 8, 8, seed=5).requires_grad_(True)
        assert grad_check(layer_fn(layer), [x, *layer.parameters()]) <= 1e-4


class TestParameterShapes:
    def test_single_branch_counts(self):
        shapes = tp_parameter_shapes(16, 32, branches=1)
        assert shapes["total"] == 2304  # 2*32^2 + 16^2

    def test_three_branch_counts(self):
        shapes = tp_parameter_shapes(64, 8, branches=3)
        assert shapes["total"] == 12672  # 3*(2*8^2 + 64^2)

    def test_matches_conv_when_c_equals_n(self):
        c = n = 16
        assert tp_parameter_shapes(c, n, branches=3)["total"] == 9 * c * c

    def test_padded_dims_used_for_ht(self):
        shapes = tp_parameter_shapes(8, 20, branches=1, kind=TransformKind.HT)
        assert shapes["scale"] == (1, 32, 32)

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("branches", [1, 2, 3])
    def test_manifest_matches_module(self, kind, branches):
        size, cin = 12, 6
        layer = TransformPerceptron2d(cin, size=size, kind=kind, branches=branches)
        manifest = tp_parameter_shapes(cin, size, branches=branches, kind=kind)
        assert sum(p.numel() for p in layer.parameters()) == manifest["total"]

    def test_relu_plain_swaps_thresholds_for_bias(self):
        manifest = tp_parameter_shapes(16, 32, nonlinearity="relu-plain")
        assert "threshold" not in manifest and manifest["mixing_bias"] == (1, 16)
        layer = TransformPerceptron2d(16, size=32, nonlinearity="relu-plain")
        assert sum(p.numel() for p in layer.parameters()) == manifest["total"]
