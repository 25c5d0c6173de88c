# tests/test_dsl_losses.py
from __future__ import annotations

import numpy as np
import pytest

from src.ald.losses import loss_ds, loss_total, loss_tv
from src.domain.config import DSLConfig
from src.domain.errors import ConfigError, ContractViolation, DimensionError
from src.numerics.gradcheck import grad_check


def test_loss_ds_hand_values():
    a = [np.ones((1, 1, 2, 2))]
    assert loss_ds(a, [x.copy() for x in a])[0] == 0.0
    value, g_low, g_well = loss_ds(a, [np.zeros((1, 1, 2, 2))])
    assert value == 4.0
    np.testing.assert_array_equal(g_low[0], -2.0 * np.ones((1, 1, 2, 2)))
    np.testing.assert_array_equal(g_well[0], 2.0 * np.ones((1, 1, 2, 2)))


def test_loss_ds_mismatch_names_layer():
    with pytest.raises(DimensionError, match="層 1"):
        loss_ds([np.zeros((1, 1, 2, 2))] * 2, [np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 3, 3))])
    with pytest.raises(DimensionError):
        loss_ds([np.zeros((1, 1, 2, 2))], [])


def test_loss_ds_gradient_finite_difference():
    rng = np.random.default_rng(0)
    fw = rng.standard_normal((1, 2, 3, 3))
    fl = rng.standard_normal((1, 2, 3, 3))
    _, g_low, _ = loss_ds([fw], [fl])
    report = grad_check(lambda fl: loss_ds([fw], [fl])[0], {"fl": fl}, {"fl": g_low[0]})
    assert report.passed


def test_loss_tv_hand_values():
    assert loss_tv([np.full((1, 1, 3, 3), 5.0)])[0] == 0.0
    f = np.array([[0.0, 1.0], [0.0, 1.0]]).reshape(1, 1, 2, 2)
    assert loss_tv([f])[0] == 2.0


def test_loss_tv_gradient_finite_difference():
    rng = np.random.default_rng(1)
    f = rng.standard_normal((2, 1, 4, 3))
    _, grads = loss_tv([f])
    report = grad_check(lambda f: loss_tv([f])[0], {"f": f}, {"f": grads[0]})
    assert report.passed


def test_loss_tv_degenerate():
    with pytest.raises(DimensionError):
        loss_tv([np.zeros((1, 1, 1, 4))])


def test_loss_total_weighted_sum():
    cfg = DSLConfig()
    assert loss_total(1, 2, 3, 4, cfg) == pytest.approx(6.04, abs=1e-12)
    assert loss_total(0, 0, 0, 0, cfg) == 0.0
    no_dsl = DSLConfig(alpha=0.5, beta=0.0, gamma=0.0)
    assert loss_total(1, 2, 3, 4, no_dsl) == 2.0


def test_loss_total_rejects_negative_or_non_finite():
    with pytest.raises(ContractViolation):
        loss_total(1, -1, 0, 0, DSLConfig())
    with pytest.raises(ContractViolation):
        loss_total(float("nan"), 0, 0, 0, DSLConfig())


def test_dsl_config_rejects_negative_weight():
    with pytest.raises(ConfigError):
        DSLConfig(beta=-1.0)


def test_normalized_losses_are_scale_invariant():
    rng = np.random.default_rng(2)
    fw = rng.standard_normal((1, 2, 3, 3))
    fl = fw + 0.2 * rng.standard_normal(fw.shape)
    ds = loss_ds([fw], [fl], normalize=True)[0]
    tv = loss_tv([fl], normalize=True)[0]
    for s in (0.1, 7.0):
        assert loss_ds([s * fw], [s * fl], normalize=True)[0] == pytest.approx(ds, rel=1e-9)
        assert loss_tv([s * fl], normalize=True)[0] == pytest.approx(tv, rel=1e-9)
    # 生の和は二乗でスケールする
    assert loss_ds([7 * fw], [7 * fl])[0] == pytest.approx(49 * loss_ds([fw], [fl])[0])


def test_normalized_loss_ds_hand_value():
    fw = np.array([3.0, 4.0]).reshape(1, 1, 1, 2)
    fl = np.array([3.0, 6.0]).reshape(1, 1, 1, 2)
    total, g_low, g_well = loss_ds([fw], [fl], normalize=True)
    assert total == pytest.approx(4.0 / 25.0)
    np.testing.assert_allclose(g_low[0].ravel(), [0.0, 4.0 / 25.0])
    # -2 diff / E - 2 fw sq / E²
    np.testing.assert_allclose(
        g_well[0].ravel(), [-24.0 / 625.0, -4.0 / 25.0 - 32.0 / 625.0]
    )


def test_normalized_gradients_have_no_component_along_scaling():
    rng = np.random.default_rng(3)
    fw = rng.standard_normal((2, 2, 3, 3))
    fl = fw + 0.5 * rng.standard_normal(fw.shape)
    _, g_low, g_well = loss_ds([fw], [fl], normalize=True)
    assert float(np.sum(g_low[0] * fl) + np.sum(g_well[0] * fw)) == pytest.approx(0.0, abs=1e-12)
    _, g_tv = loss_tv([fl], normalize=True)
    assert float(np.sum(g_tv[0] * fl)) == pytest.approx(0.0, abs=1e-12)


def test_normalized_loss_ds_gradient_finite_difference():
    rng = np.random.default_rng(4)
    fw = rng.standard_normal((1, 2, 3, 3))
    fl = rng.standard_normal((1, 2, 3, 3))
    _, g_low, g_well = loss_ds([fw], [fl], normalize=True)
    report = grad_check(
        lambda fw, fl: loss_ds([fw], [fl], normalize=True)[0],
        {"fw": fw, "fl": fl},
        {"fw": g_well[0], "fl": g_low[0]},
    )
    assert report.passed, report


def test_normalized_loss_tv_gradient_finite_difference():
    rng = np.random.default_rng(5)
    f = rng.standard_normal((2, 1, 4, 3))
    _, grads = loss_tv([f], normalize=True)
    report = grad_check(lambda f: loss_tv([f], normalize=True)[0], {"f": f}, {"f": grads[0]})
    assert report.passed, report


def test_normalized_losses_on_zero_features_stay_finite():
    z = np.zeros((1, 1, 2, 2))
    total, g_low, g_well = loss_ds([z], [z], normalize=True)
    assert total == 0.0
    assert np.all(g_low[0] == 0.0) and np.all(g_well[0] == 0.0)
    assert loss_tv([z], normalize=True)[0] == 0.0
