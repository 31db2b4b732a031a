"""Fully-connected auto-encoder with hand-written forward and backward passes.

Encoder:  z  = W2 relu(W1 x + b1) + b2                (linear latent layer)
Decoder:  x' = act(V2 relu(V1 z + c1) + c2)           (act = sigmoid | linear)

Batches are row-major: one sample per row.
"""

from dataclasses import dataclass, fields

import numpy as np

from rateless.errors import ConfigError, ConsistencyError, DimensionError

BLOCKS = ("enc_W1", "enc_b1", "enc_W2", "enc_b2", "dec_W1", "dec_b1", "dec_W2", "dec_b2")


@dataclass(frozen=True)
class AEConfig:
    input_dim: int
    hidden_dim: int
    latent_dim: int
    output_activation: str = "sigmoid"
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.latent_dim <= self.input_dim:
            raise ConfigError(f"latent_dim must be in [1, {self.input_dim}], got {self.latent_dim}")
        if self.hidden_dim < 1:
            raise ConfigError(f"hidden_dim must be positive, got {self.hidden_dim}")
        if self.output_activation not in ("sigmoid", "linear"):
            raise ConfigError(f"unknown output activation {self.output_activation!r}")

    def block_shapes(self):
        n, h, m = self.input_dim, self.hidden_dim, self.latent_dim
        return {
            "enc_W1": (h, n),
            "enc_b1": (h,),
            "enc_W2": (m, h),
            "enc_b2": (m,),
            "dec_W1": (h, m),
            "dec_b1": (h,),
            "dec_W2": (n, h),
            "dec_b2": (n,),
        }


@dataclass
class AEParams:
    enc_W1: np.ndarray
    enc_b1: np.ndarray
    enc_W2: np.ndarray
    enc_b2: np.ndarray
    dec_W1: np.ndarray
    dec_b1: np.ndarray
    dec_W2: np.ndarray
    dec_b2: np.ndarray

    def __post_init__(self):
        # in-place optimiser kernels need contiguous float64 storage
        for name in BLOCKS:
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))

    def blocks(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self):
        return AEParams(**{k: v.copy() for k, v in self.blocks().items()})

    def zeros_like(self):
        return AEParams(**{k: np.zeros_like(v) for k, v in self.blocks().items()})

    def check(self, config):
        for name, shape in config.block_shapes().items():
            got = getattr(self, name).shape
            if got != shape:
                raise ConsistencyError(f"{name} has shape {got}, config expects {shape}")


@dataclass
class ForwardCache:
    x: np.ndarray
    enc_pre: np.ndarray
    enc_hidden: np.ndarray
    mask: np.ndarray
    z_masked: np.ndarray
    dec_pre: np.ndarray
    dec_hidden: np.ndarray
    x_recon: np.ndarray


def init_params(config, rng):
    """He-normal weights (std sqrt(2 / fan_in)), zero biases."""
    blocks = {}
    for name, shape in config.block_shapes().items():
        if len(shape) == 1:
            blocks[name] = np.zeros(shape)
        else:
            blocks[name] = rng.normal(shape) * np.sqrt(2.0 / shape[1])
    return AEParams(**blocks)


def _relu(a):
    return np.maximum(a, 0.0)


def _sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def _check_cols(x, cols, what):
    if x.ndim != 2 or x.shape[1] != cols:
        raise DimensionError(f"{what} has shape {x.shape}, expected (batch, {cols})")


def _encode(params, x):
    enc_pre = x @ params.enc_W1.T + params.enc_b1
    enc_hidden = _relu(enc_pre)
    return enc_pre, enc_hidden, enc_hidden @ params.enc_W2.T + params.enc_b2


def _decode(params, config, z):
    dec_pre = z @ params.dec_W1.T + params.dec_b1
    dec_hidden = _relu(dec_pre)
    out = dec_hidden @ params.dec_W2.T + params.dec_b2
    if config.output_activation == "sigmoid":
        out = _sigmoid(out)
    return dec_pre, dec_hidden, out


def encode(params, config, x_batch):
    x = np.asarray(x_batch, dtype=np.float64)
    _check_cols(x, config.input_dim, "input batch")
    return _encode(params, x)[2]


def decode(params, config, z_batch):
    z = np.asarray(z_batch, dtype=np.float64)
    _check_cols(z, config.latent_dim, "latent batch")
    return _decode(params, config, z)[2]


def forward_train(params, config, x_batch, mask):
    """Encode, multiply the latent code by ``mask`` (no rescaling), decode."""
    x = np.asarray(x_batch, dtype=np.float64)
    _check_cols(x, config.input_dim, "input batch")
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (x.shape[0], config.latent_dim):
        raise DimensionError(f"mask has shape {mask.shape}, expected {(x.shape[0], config.latent_dim)}")
    enc_pre, enc_hidden, z = _encode(params, x)
    z_masked = z * mask
    dec_pre, dec_hidden, x_recon = _decode(params, config, z_masked)
    cache = ForwardCache(x, enc_pre, enc_hidden, mask, z_masked, dec_pre, dec_hidden, x_recon)
    return x_recon, cache


def backward(params, config, cache, d_loss_d_xrecon):
    """Reverse-mode gradients of the loss through ``forward_train``.

    The ReLU subgradient at 0 is taken as 0.
    """
    g = np.asarray(d_loss_d_xrecon, dtype=np.float64)
    if g.shape != cache.x_recon.shape or cache.enc_hidden.shape[1] != params.enc_W1.shape[0]:
        raise ConsistencyError(
            f"cache/gradient mismatch: gradient {g.shape}, reconstruction {cache.x_recon.shape}"
        )
    if config.output_activation == "sigmoid":
        g = g * cache.x_recon * (1.0 - cache.x_recon)
    grads = {}
    grads["dec_W2"] = g.T @ cache.dec_hidden
    grads["dec_b2"] = g.sum(axis=0)
    d_hidden = (g @ params.dec_W2) * (cache.dec_pre > 0)
    grads["dec_W1"] = d_hidden.T @ cache.z_masked
    grads["dec_b1"] = d_hidden.sum(axis=0)
    d_z = (d_hidden @ params.dec_W1) * cache.mask
    grads["enc_W2"] = d_z.T @ cache.enc_hidden
    grads["enc_b2"] = d_z.sum(axis=0)
    d_hidden = (d_z @ params.enc_W2) * (cache.enc_pre > 0)
    grads["enc_W1"] = d_hidden.T @ cache.x
    grads["enc_b1"] = d_hidden.sum(axis=0)
    return AEParams(**grads)


class AutoEncoder:
    """Bundle of parameters and config exposing ``encode``/``decode``."""

    def __init__(self, params, config):
        params.check(config)
        self.params = params
        self.config = config

    @property
    def latent_dim(self):
        return self.config.latent_dim

    @property
    def input_dim(self):
        return self.config.input_dim

    def encode(self, x):
        return encode(self.params, self.config, x)

    def decode(self, z):
        return decode(self.params, self.config, z)
