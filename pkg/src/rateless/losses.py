"""Distortion measures with analytic gradients: MSE and (negative) SSIM."""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from rateless.errors import ConfigError, DimensionError, DomainError

WINDOWS = ("gaussian", "uniform")


def _same_shape(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x, y


def mse(x, x_recon):
    """Mean of squared differences over every entry, and its gradient w.r.t. ``x_recon``."""
    x, y = _same_shape(x, x_recon)
    diff = y - x
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def mse_db(value):
    if not value > 0:
        raise DomainError(f"MSE must be positive to express in dB, got {value}")
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class SsimConfig:
    """Gaussian 11x11 (sigma 1.5) by default; ``window="uniform"`` gives an 8x8 box."""

    window: str = "gaussian"
    size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.window not in WINDOWS:
            raise ConfigError(f"unknown SSIM window {self.window!r}")
        if self.size < 1:
            raise ConfigError("window size must be positive")

    @classmethod
    def uniform8(cls):
        return cls(window="uniform", size=8)

    @property
    def c1(self):
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self):
        return (self.k2 * self.dynamic_range) ** 2

    def kernel(self):
        if self.window == "uniform":
            return np.full(self.size, 1.0 / self.size)
        r = np.arange(self.size) - (self.size - 1) / 2.0
        k = np.exp(-(r * r) / (2.0 * self.sigma**2))
        return k / k.sum()


@lru_cache(maxsize=32)
def _band(length, cfg):
    """Matrix that applies the 1-D window at every valid offset: (length - size + 1, length)."""
    k = cfg.kernel()
    out = length - cfg.size + 1
    band = np.zeros((out, length))
    for i in range(out):
        band[i, i : i + cfg.size] = k
    return band


def _as_images(a, shape):
    h, w, c = shape
    a = np.asarray(a, dtype=np.float64)
    # (batch, channels, h, w) so the filters act on the trailing two axes
    return a.reshape(-1, h, w, c).transpose(0, 3, 1, 2)


def _ssim_parts(x, y, shape, cfg):
    h, w, _ = shape
    if cfg.size > h or cfg.size > w:
        raise ConfigError(f"{cfg.size}x{cfg.size} SSIM window does not fit a {h}x{w} image")
    gh, gw = _band(h, cfg), _band(w, cfg)

    def filt(a):
        return gh @ a @ gw.T

    mu_x, mu_y = filt(x), filt(y)
    sxx = filt(x * x) - mu_x * mu_x
    syy = filt(y * y) - mu_y * mu_y
    sxy = filt(x * y) - mu_x * mu_y
    a1 = 2.0 * mu_x * mu_y + cfg.c1
    a2 = 2.0 * sxy + cfg.c2
    b1 = mu_x * mu_x + mu_y * mu_y + cfg.c1
    b2 = sxx + syy + cfg.c2
    smap = (a1 * a2) / (b1 * b2)
    return smap, (gh, gw, mu_x, mu_y, a1, a2, b1, b2)


def ssim_map(x, y, shape, cfg=SsimConfig()):
    """Local SSIM values, shape (batch, channels, valid_h, valid_w)."""
    return _ssim_parts(_as_images(x, shape), _as_images(y, shape), shape, cfg)[0]


def ssim_per_image(x, y, shape, cfg=SsimConfig()):
    smap = ssim_map(x, y, shape, cfg)
    return smap.reshape(smap.shape[0], -1).mean(axis=1)


def ssim(x, x_recon, shape, cfg=SsimConfig()):
    """Mean SSIM over images, channels and valid window positions.

    Returns ``(index, grad)`` where ``grad`` is d(index)/d(x_recon) with the
    same shape as ``x_recon``.
    """
    x, y = _same_shape(x, x_recon)
    xi, yi = _as_images(x, shape), _as_images(y, shape)
    smap, (gh, gw, mu_x, mu_y, a1, a2, b1, b2) = _ssim_parts(xi, yi, shape, cfg)
    index = float(smap.mean())

    weight = smap / smap.size
    d_mu_y = weight * (2.0 * mu_x / a1 - 2.0 * mu_y / b1 - 2.0 * mu_x / a2 + 2.0 * mu_y / b2)
    d_sxy = weight * (2.0 / a2)
    d_syy = weight * (-1.0 / b2)

    def adj(a):
        return gh.T @ a @ gw

    g = adj(d_mu_y) + xi * adj(d_sxy) + 2.0 * yi * adj(d_syy)
    g = g.transpose(0, 2, 3, 1).reshape(y.shape)
    return index, g


def neg_ssim_loss(x, x_recon, shape, cfg=SsimConfig()):
    index, grad = ssim(x, x_recon, shape, cfg)
    return -index, -grad
