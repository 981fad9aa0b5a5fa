"""Tests for the network layers, the loss and LoRA adapters."""

import math
from typing import Callable

import numpy as np
import pytest

from warm_freeze.config.models import ModelConfig
from warm_freeze.exceptions import (
    BackwardWithoutForwardError,
    LoraAttachmentError,
    ShapeMismatchError,
)
from warm_freeze.nn import (
    BatchNorm1d,
    Conv1d,
    Linear,
    LoraAdapter,
    Mode,
    NetworkModel,
    Parameter,
    adapter_param_count,
    build_network,
    cross_entropy,
)
from warm_freeze.nn.layers import GlobalAvgPool1d, Layer, ReLU

H = 1e-5


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denominator = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denominator == 0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denominator)


def numeric_gradient(loss: Callable[[], float], array: np.ndarray) -> np.ndarray:
    """Central differences of ``loss`` with respect to every entry of ``array``, in place."""
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + H
        plus = loss()
        array[index] = original - H
        minus = loss()
        array[index] = original
        grad[index] = (plus - minus) / (2 * H)
    return grad


def projected_loss(layer: Layer, x: np.ndarray, weights: np.ndarray, mode: Mode) -> float:
    return float(np.sum(layer.forward(x, mode) * weights))


def check_layer(layer: Layer, x: np.ndarray, rng: np.random.Generator, mode: Mode) -> None:
    """Gradcheck every parameter of ``layer`` and its input under a random linear loss."""
    out = layer.forward(x, mode)
    weights = rng.standard_normal(out.shape)
    for param in layer.parameters():
        param.zero_grad()
    layer.forward(x, mode)
    dx = layer.backward(weights)

    def loss() -> float:
        return projected_loss(layer, x, weights, mode)

    for name, param in layer.named_parameters():
        numeric = numeric_gradient(loss, param.data)
        assert param.grad is not None, name
        assert relative_error(param.grad, numeric) < 1e-5, name
    assert relative_error(dx, numeric_gradient(loss, x)) < 1e-5


def direct_conv(x: np.ndarray, weight: np.ndarray, stride: int) -> np.ndarray:
    """Straightforward same-padded 1D convolution by explicit loops."""
    n, c_in, length = x.shape
    c_out, _, k = weight.shape
    pad = k // 2
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    out_len = (length + 2 * pad - k) // stride + 1
    out = np.zeros((n, c_out, out_len))
    for b in range(n):
        for o in range(c_out):
            for t in range(out_len):
                out[b, o, t] = np.sum(weight[o] * padded[b, :, t * stride : t * stride + k])
    return out


def reference_logits(model: NetworkModel, x: np.ndarray) -> np.ndarray:
    """Eval-mode forward pass rebuilt from the model's raw weights."""

    def conv(layer: Conv1d, h: np.ndarray) -> np.ndarray:
        return direct_conv(h, layer.effective_weight(), layer.stride)

    def norm(layer: BatchNorm1d, h: np.ndarray) -> np.ndarray:
        scale = layer.gamma.data / np.sqrt(layer.running_var + layer.eps)
        shift = layer.beta.data - layer.running_mean * scale
        return h * scale[None, :, None] + shift[None, :, None]

    def relu(h: np.ndarray) -> np.ndarray:
        return np.maximum(h, 0.0)

    h = relu(norm(model.stem.body.bn, conv(model.stem.body.conv, x)))
    for block in model.blocks:
        out = relu(norm(block.bn1, conv(block.conv1, h)))
        out = norm(block.bn2, conv(block.conv2, out))
        if block.downsample is not None:
            h = norm(block.downsample.bn, conv(block.downsample.conv, h))
        h = relu(out + h)
    pooled = h.mean(axis=2)
    return pooled @ model.head.fc.weight.data.T + model.head.fc.bias.data


class TestGradcheck:
    """Backprop against central finite differences (h = 1e-5)."""

    @pytest.mark.parametrize("stride", [1, 2])
    def test_conv1d(self, rng: np.random.Generator, stride: int) -> None:
        """Test convolution weight and input gradients."""
        layer = Conv1d(3, 4, 3, stride, rng)
        check_layer(layer, rng.standard_normal((2, 3, 11)), rng, Mode.TRAIN)

    def test_conv1d_with_lora(self, rng: np.random.Generator) -> None:
        """Test adapter gradients through a convolution with a non-zero b."""
        layer = Conv1d(3, 4, 3, 1, rng)
        layer.lora = LoraAdapter(layer.weight.shape, 2, rng)
        layer.lora.b.data[:] = rng.standard_normal(layer.lora.b.shape)
        check_layer(layer, rng.standard_normal((2, 3, 9)), rng, Mode.TRAIN)

    @pytest.mark.parametrize("mode", [Mode.TRAIN, Mode.EVAL])
    def test_batchnorm(self, rng: np.random.Generator, mode: Mode) -> None:
        """Test batch-norm gradients with batch and running statistics."""
        layer = BatchNorm1d(3)
        layer.running_mean[:] = rng.standard_normal(3)
        layer.running_var[:] = rng.uniform(0.5, 2.0, 3)
        layer.gamma.data[:] = rng.uniform(0.5, 1.5, 3)
        check_layer(layer, rng.standard_normal((4, 3, 5)), rng, mode)

    def test_linear(self, rng: np.random.Generator) -> None:
        """Test fully connected gradients."""
        check_layer(Linear(5, 3, rng), rng.standard_normal((4, 5)), rng, Mode.TRAIN)

    def test_relu_and_pool(self, rng: np.random.Generator) -> None:
        """Test ReLU (inputs away from the kink) and global pooling gradients."""
        x = rng.uniform(0.1, 1.0, (2, 3, 6)) * rng.choice([-1.0, 1.0], (2, 3, 6))
        check_layer(ReLU(), x, rng, Mode.TRAIN)
        check_layer(GlobalAvgPool1d(), rng.standard_normal((2, 3, 6)), rng, Mode.TRAIN)

    def test_whole_network(self, toy_model_config: ModelConfig, rng: np.random.Generator) -> None:
        """Test every trainable parameter of a 2-block, 8-channel network under cross-entropy."""
        config = toy_model_config.model_copy(update={"input_length": 16})
        model = build_network(config, seed=3)
        x = rng.standard_normal((2, 1, 16))
        y = np.array([0, 1])

        model.zero_grad()
        _, d_logits = cross_entropy(model.forward(x, Mode.TRAIN), y)
        model.backward(d_logits)

        def loss() -> float:
            return cross_entropy(model.forward(x, Mode.TRAIN), y)[0]

        for name, param in model.trainable_parameters():
            analytic = param.grad.copy()
            assert relative_error(analytic, numeric_gradient(loss, param.data)) < 1e-5, name


class TestForward:
    """Tests for network forward passes."""

    def test_matches_reference_implementation(self, toy_model: NetworkModel) -> None:
        """Test eval-mode logits against a loop-based re-implementation."""
        rng = np.random.default_rng(8)
        for norm in (b.bn1 for b in toy_model.blocks):
            norm.running_mean[:] = rng.standard_normal(norm.channels) * 0.1
            norm.running_var[:] = rng.uniform(0.5, 2.0, norm.channels)
        x = rng.standard_normal((3, 1, 32))
        np.testing.assert_allclose(
            toy_model.forward(x, Mode.EVAL), reference_logits(toy_model, x), rtol=0, atol=1e-10
        )

    def test_strided_network_matches_reference(self) -> None:
        """Test a network with strided stem and projection shortcuts."""
        config = ModelConfig(
            width_scale=1.0,
            stem_channels=4,
            stem_kernel=5,
            stem_stride=2,
            block_channels=[4, 8],
            input_length=20,
        )
        model = build_network(config, seed=1)
        assert model.blocks[1].downsample is not None
        x = np.random.default_rng(2).standard_normal((2, 1, 20))
        np.testing.assert_allclose(
            model.forward(x), reference_logits(model, x), rtol=0, atol=1e-10
        )

    def test_zero_head_gives_zero_logits(self, toy_model: NetworkModel, toy_split) -> None:
        """Test that a zeroed head yields all-zero logits."""
        toy_model.head.fc.weight.data[:] = 0.0
        toy_model.head.fc.bias.data[:] = 0.0
        assert np.all(toy_model.forward(toy_split.x) == 0.0)

    def test_duplicate_rows_identical(self, toy_model: NetworkModel, toy_split) -> None:
        """Test per-example independence in eval mode."""
        x = np.concatenate([toy_split.x[:1], toy_split.x[:1], toy_split.x[1:3]])
        logits = toy_model.forward(x, Mode.EVAL)
        assert np.array_equal(logits[0], logits[1])

    def test_wrong_shape_rejected(self, toy_model: NetworkModel) -> None:
        """Test that the input must be (n, 1, input_length)."""
        with pytest.raises(ShapeMismatchError, match="Expected batch"):
            toy_model.forward(np.zeros((2, 1, 31)))

    def test_frozen_block_uses_running_statistics(
        self, toy_model: NetworkModel, toy_split
    ) -> None:
        """Test that frozen blocks never update batch-norm statistics in train mode."""
        toy_model.set_group_trainable(1, False)
        before = toy_model.blocks[1].bn1.running_mean.copy()
        toy_model.forward(toy_split.x, Mode.TRAIN)
        assert np.array_equal(toy_model.blocks[1].bn1.running_mean, before)
        assert not np.array_equal(toy_model.blocks[0].bn1.running_mean, np.zeros(8))


class TestBackward:
    """Tests for gradient flow rules."""

    def test_backward_without_forward(self, toy_model: NetworkModel) -> None:
        """Test that backward() needs a cached forward pass."""
        with pytest.raises(BackwardWithoutForwardError):
            toy_model.backward(np.zeros((2, 2)))

    def test_zeroed_path_has_zero_gradient(self, toy_model: NetworkModel, toy_split) -> None:
        """Test that parameters behind a zeroed head get exactly zero gradient."""
        toy_model.head.fc.weight.data[:] = 0.0
        _, d_logits = cross_entropy(toy_model.forward(toy_split.x, Mode.TRAIN), toy_split.y)
        toy_model.backward(d_logits)
        for name, param in toy_model.base_parameters():
            if not name.startswith("head."):
                assert np.all(param.grad == 0.0), name

    def test_lora_zero_b_gradients(self, toy_model: NetworkModel, toy_split) -> None:
        """Test that with b = 0 the gradient of a vanishes while b's does not."""
        toy_model.attach_lora([1], 2, np.random.default_rng(0))
        _, d_logits = cross_entropy(toy_model.forward(toy_split.x, Mode.TRAIN), toy_split.y)
        toy_model.backward(d_logits)
        lora = toy_model.blocks[1].lora
        assert lora is not None
        assert np.all(lora.a.grad == 0.0)
        assert np.any(lora.b.grad != 0.0)
        assert toy_model.blocks[1].conv2.weight.grad is None

    def test_frozen_parameter_keeps_no_gradient(self) -> None:
        """Test that accumulate() ignores frozen parameters."""
        param = Parameter(np.ones(3), trainable=False)
        param.accumulate(np.ones(3))
        assert param.grad is None


class TestCrossEntropy:
    """Tests for the loss."""

    def test_uniform_logits(self) -> None:
        """Test that logits [0, 0] cost ln 2."""
        loss, _ = cross_entropy(np.zeros((1, 2)), np.array([0]))
        assert loss == pytest.approx(math.log(2.0), abs=1e-15)

    def test_confident_logits(self) -> None:
        """Test that a confident correct prediction costs almost nothing."""
        loss, _ = cross_entropy(np.array([[100.0, -100.0]]), np.array([0]))
        assert loss < 1e-10

    def test_matches_log_sum_exp(self, rng: np.random.Generator) -> None:
        """Test loss and gradient against a direct log-sum-exp computation."""
        logits = rng.standard_normal((10, 2)) * 3
        labels = rng.integers(0, 2, 10)
        loss, grad = cross_entropy(logits, labels)

        lse = np.logaddexp(logits[:, 0], logits[:, 1])
        expected = math.fsum(lse - logits[np.arange(10), labels]) / 10
        probs = np.exp(logits - lse[:, None])
        onehot = np.eye(2)[labels]
        assert loss == pytest.approx(expected, abs=1e-12)
        np.testing.assert_allclose(grad, (probs - onehot) / 10, rtol=0, atol=1e-12)

    def test_label_out_of_range(self) -> None:
        """Test that labels must index a class."""
        with pytest.raises(ShapeMismatchError, match="Labels"):
            cross_entropy(np.zeros((2, 2)), np.array([0, 2]))


class TestLora:
    """Tests for adapter construction and attachment."""

    def test_adapter_count(self) -> None:
        """Test r * (c_out + c_in * k) for a 32-channel conv at rank 4."""
        assert adapter_param_count(32, 32, 3, 4) == 512
        adapter = LoraAdapter((32, 32, 3), 4, np.random.default_rng(0))
        assert adapter.param_count == 512
        assert adapter.scaling == 1.0

    def test_attach_keeps_output(self, toy_model: NetworkModel, toy_split) -> None:
        """Test that attaching zero-initialised adapters leaves logits unchanged."""
        before = toy_model.forward(toy_split.x)
        toy_model.attach_lora([0, 1], 4, np.random.default_rng(1))
        np.testing.assert_allclose(toy_model.forward(toy_split.x), before, rtol=0, atol=1e-12)
        assert toy_model.lora_ranks() == {0: 4, 1: 4}
        assert not toy_model.group_trainable(0)

    def test_attach_all_desk_blocks(self, desk_model: NetworkModel) -> None:
        """Test that adapters on all eight blocks keep the forward finite and deterministic."""
        desk_model.attach_lora(range(8), 4, np.random.default_rng(2))
        x = np.random.default_rng(3).standard_normal((2, 1, 300))
        first = desk_model.forward(x)
        assert np.all(np.isfinite(first))
        assert np.array_equal(first, desk_model.forward(x))

    def test_double_attach_rejected(self, toy_model: NetworkModel) -> None:
        """Test that a block cannot carry two adapters."""
        toy_model.attach_lora([1], 2, np.random.default_rng(0))
        with pytest.raises(LoraAttachmentError, match="already has"):
            toy_model.attach_lora([1], 2, np.random.default_rng(0))

    def test_bad_rank_rejected(self, toy_model: NetworkModel) -> None:
        """Test that the rank must be positive."""
        with pytest.raises(LoraAttachmentError, match="rank"):
            toy_model.attach_lora([0], 0, np.random.default_rng(0))

    def test_bad_index_rejected(self, toy_model: NetworkModel) -> None:
        """Test that block indices must exist."""
        with pytest.raises(LoraAttachmentError, match="outside"):
            toy_model.attach_lora([5], 1, np.random.default_rng(0))

    def test_alpha_sets_scaling(self) -> None:
        """Test scaling = alpha / r."""
        adapter = LoraAdapter((4, 4, 3), 4, np.random.default_rng(0), alpha=8.0)
        assert adapter.scaling == 2.0

    def test_even_kernel_rejected(self, rng: np.random.Generator) -> None:
        """Test that same padding requires an odd kernel."""
        with pytest.raises(ShapeMismatchError, match="odd"):
            Conv1d(2, 2, 4, 1, rng)
