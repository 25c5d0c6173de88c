# tests/test_ald_block.py
from __future__ import annotations

import numpy as np
import pytest

from src.ald.block import ald_backward, ald_forward, ald_init
from src.domain.errors import DimensionError, StaleCacheError
from src.domain.types import FusionMode
from src.numerics.activations import sigmoid
from src.numerics.conv import conv2d, conv2d_backward, conv2d_forward
from src.numerics.dense import fully_connected
from src.numerics.pooling import global_avg_pool
from src.numerics.softmax_kernel import softmax_normalize


def test_init_gives_gaussian_kernel_and_is_deterministic():
    a = ald_init(3, 11)
    b = ald_init(3, 11)
    for k, v in a.params().items():
        np.testing.assert_array_equal(v, b.params()[k])
    kernel = a.kernel()
    r = np.arange(5) - 2
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / 2.0)
    g /= g.sum()
    for ch in range(3):
        np.testing.assert_allclose(kernel[ch, 0], g, atol=1e-9)
    assert kernel[0, 0, 2, 2] == pytest.approx(0.1621, abs=1e-4)


def test_saturated_weight_equals_main_branch():
    rng = np.random.default_rng(0)
    block = ald_init(2, 1)
    block.fc_b = np.full(2, -1e6)
    x = rng.standard_normal((1, 2, 8, 8))
    y, _ = ald_forward(block, x)
    orig = conv2d(x, block.main_w, stride=2, padding="zero", pad=1)
    assert np.abs(y - orig).max() <= 1e-6


def test_constant_input_with_zero_main_branch():
    block = ald_init(3, 2)
    block.main_w = np.zeros_like(block.main_w)
    y, cache = ald_forward(block, np.full((2, 3, 9, 7), 0.4))
    expected = cache.weights[:, :, None, None] * 0.4
    np.testing.assert_allclose(y, np.broadcast_to(expected, y.shape), atol=1e-12)


def test_forward_matches_composition_of_numerics_ops():
    rng = np.random.default_rng(5)
    block = ald_init(2, 3)
    block.sconv_logits = block.sconv_logits + rng.standard_normal(block.sconv_logits.shape)
    x = rng.standard_normal((1, 2, 8, 8))
    y, _ = ald_forward(block, x)

    orig = conv2d(x, block.main_w, stride=2, padding="zero", pad=1)
    low = conv2d(x, softmax_normalize(block.sconv_logits), 2, "reflect", 2, groups=2)
    d = np.concatenate([global_avg_pool(orig)[:, :, 0, 0], global_avg_pool(low)[:, :, 0, 0]], 1)
    w = sigmoid(fully_connected(d, block.fc_w, block.fc_b))
    np.testing.assert_allclose(y, orig + w[:, :, None, None] * low, atol=1e-12)
    assert y.shape == (1, 2, 4, 4)


def test_convex_fusion_blends_branches():
    block = ald_init(1, 4, FusionMode.CONVEX)
    block.fc_b = np.full(1, 1e6)
    block.main_w = np.zeros_like(block.main_w)
    y, _ = ald_forward(block, np.full((1, 1, 6, 6), 0.25))
    np.testing.assert_allclose(y, 0.25, atol=1e-9)


def test_backward_zero_cotangent():
    rng = np.random.default_rng(1)
    block = ald_init(2, 5)
    y, cache = ald_forward(block, rng.standard_normal((1, 2, 6, 6)))
    gx, grads = ald_backward(block, cache, np.zeros_like(y))
    assert not gx.any()
    assert all(not g.any() for g in grads.values())


def test_backward_dead_branch_equals_main_backward():
    rng = np.random.default_rng(2)
    block = ald_init(2, 6)
    block.fc_b = np.full(2, -1e6)
    x = rng.standard_normal((1, 2, 8, 8))
    y, cache = ald_forward(block, x)
    g = rng.standard_normal(y.shape)
    gx, _ = ald_backward(block, cache, g)
    _, main_cache = conv2d_forward(x, block.main_w, stride=2, padding="zero", pad=1)
    gx_main, _ = conv2d_backward(g, main_cache)
    np.testing.assert_allclose(gx, gx_main, atol=1e-9)


def test_backward_rejects_stale_cache():
    block = ald_init(1, 7)
    y, cache = ald_forward(block, np.ones((1, 1, 6, 6)))
    block.touch()
    with pytest.raises(StaleCacheError):
        ald_backward(block, cache, np.ones_like(y))
    other = ald_init(1, 7)
    with pytest.raises(StaleCacheError):
        ald_backward(other, cache, np.ones_like(y))


def test_forward_shape_errors():
    block = ald_init(2, 8)
    with pytest.raises(DimensionError):
        ald_forward(block, np.zeros((1, 3, 8, 8)))
    with pytest.raises(DimensionError):
        ald_forward(block, np.zeros((1, 2, 4, 8)))
