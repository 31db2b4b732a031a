import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rateless.errors import ConfigError, DimensionError, DomainError
from rateless.losses import SsimConfig, mse, mse_db, neg_ssim_loss, ssim, ssim_per_image

SHAPE = (12, 12, 1)
SMALL = SsimConfig(window="gaussian", size=5, sigma=1.0)


def test_mse_examples():
    value, grad = mse([[0.0, 0.0]], [[1.0, 1.0]])
    assert value == 1.0
    np.testing.assert_array_equal(grad, [[1.0, 1.0]])
    value, grad = mse([[0.3, 0.7]], [[0.3, 0.7]])
    assert value == 0.0 and not grad.any()
    with pytest.raises(DimensionError):
        mse(np.zeros((2, 3)), np.zeros((3, 2)))


def test_mse_gradient(rng):
    x, y = rng.random((3, 4)), rng.random((3, 4))
    _, grad = mse(x, y)
    h = 1e-6
    for idx in np.ndindex(y.shape):
        e = np.zeros_like(y)
        e[idx] = h
        numeric = (mse(x, y + e)[0] - mse(x, y - e)[0]) / (2 * h)
        assert abs(numeric - grad[idx]) <= 1e-6 * max(abs(grad[idx]), 1e-3)


def test_mse_db_values():
    assert mse_db(1.0) == 0.0
    assert mse_db(0.1) == pytest.approx(-10.0)
    assert mse_db(0.5) == pytest.approx(-3.0103, abs=1e-4)
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            mse_db(bad)


@given(st.floats(1e-12, 1e6), st.floats(1e-12, 1e6))
def test_mse_db_increasing(a, b):
    if a < b:
        assert mse_db(a) < mse_db(b) or np.isclose(a, b, rtol=1e-15)


def test_config_constants():
    cfg = SsimConfig()
    assert cfg.c1 == pytest.approx(1e-4) and cfg.c2 == pytest.approx(9e-4)
    assert cfg.kernel().sum() == pytest.approx(1.0)
    assert SsimConfig.uniform8().kernel().tolist() == [0.125] * 8
    with pytest.raises(ConfigError):
        SsimConfig(window="box")


def test_ssim_identity(rng):
    x = rng.random((3, 144))
    index, grad = ssim(x, x, SHAPE)
    assert abs(index - 1.0) <= 1e-9
    assert np.max(np.abs(grad)) <= 1e-9
    assert neg_ssim_loss(x, x, SHAPE)[0] == pytest.approx(-1.0, abs=1e-9)


def test_ssim_constant_images():
    index, _ = ssim(np.zeros((1, 144)), np.ones((1, 144)), SHAPE)
    assert index == pytest.approx(1e-4 / (1 + 1e-4), rel=1e-9)


def test_ssim_window_too_large():
    with pytest.raises(ConfigError):
        ssim(np.zeros((1, 64)), np.zeros((1, 64)), (8, 8, 1))


def test_ssim_color_is_channel_mean(rng):
    x, y = rng.random((2, 12 * 12 * 3)), rng.random((2, 12 * 12 * 3))
    per_channel = [
        ssim_per_image(x.reshape(2, 144, 3)[:, :, c], y.reshape(2, 144, 3)[:, :, c], SHAPE, SMALL)
        for c in range(3)
    ]
    combined = ssim_per_image(x, y, (12, 12, 3), SMALL)
    np.testing.assert_allclose(combined, np.mean(per_channel, axis=0), rtol=1e-12)


@pytest.mark.parametrize("cfg", [SsimConfig(), SsimConfig.uniform8(), SMALL])
def test_ssim_gradient(cfg, rng):
    x, y = rng.random((2, 144)), rng.random((2, 144))
    _, grad = ssim(x, y, SHAPE, cfg)
    h = 1e-5
    numeric = np.zeros_like(y)
    for idx in np.ndindex(y.shape):
        e = np.zeros_like(y)
        e[idx] = h
        numeric[idx] = (ssim(x, y + e, SHAPE, cfg)[0] - ssim(x, y - e, SHAPE, cfg)[0]) / (2 * h)
    assert np.max(np.abs(numeric - grad)) <= 1e-4 * np.max(np.abs(numeric))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["random", "inverse", "noisy"]))
def test_ssim_symmetric_and_bounded(seed, kind):
    r = np.random.default_rng(seed)
    a = r.random((2, 144))
    b = {"random": r.random((2, 144)), "inverse": 1 - a, "noisy": np.clip(a + 0.1 * r.normal(size=a.shape), 0, 1)}[kind]
    ab, ba = ssim(a, b, SHAPE)[0], ssim(b, a, SHAPE)[0]
    assert abs(ab - ba) <= 1e-12
    assert -1.0 <= ab <= 1.0
    loss = neg_ssim_loss(a, b, SHAPE)[0]
    assert -1.0 <= loss <= 1.0
