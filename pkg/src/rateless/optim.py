"""Adam, the mini-batch training loop with early stopping, and SSIM fine-tuning."""

import csv
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from rateless import _core, losses
from rateless.errors import ConfigError, ConsistencyError, InputError, TrainingError
from rateless.evaluate import average_loss
from rateless.linalg import Rng
from rateless.model import AutoEncoder, backward, forward_train, init_params
from rateless.regularizers import sample_mask

log = logging.getLogger(__name__)

LOSSES = ("mse", "neg_ssim")
VALIDATION_MODES = ("full", "rate_averaged")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 100
    max_epochs: int = 500
    patience: int = 20
    loss: str = "mse"
    seed: int = 0
    validation_fraction: float = 0.1
    validation_mode: str = "full"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    ssim: losses.SsimConfig = field(default_factory=losses.SsimConfig)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.patience < 1:
            raise ConfigError("patience must be at least 1")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be non-negative")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must lie in (0, 1)")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        if self.validation_mode not in VALIDATION_MODES:
            raise ConfigError(f"unknown validation mode {self.validation_mode!r}")


@dataclass
class TrainHistory:
    loss: str
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    best_epoch: int = 0

    @property
    def epochs(self):
        return len(self.train_loss)

    @property
    def best_val_loss(self):
        return self.val_loss[self.best_epoch - 1] if self.best_epoch else float("nan")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_loss", "val_loss"])
            for i, (tr, va) in enumerate(zip(self.train_loss, self.val_loss), start=1):
                writer.writerow([i, repr(tr), repr(va)])


def adam_step(params, grads, moment1, moment2, t, cfg):
    """One bias-corrected Adam update, applied in place. Returns the three updated sets."""
    if t < 1:
        raise ConfigError("Adam step count starts at 1")
    b1, b2 = cfg.beta1, cfg.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    for name, g in grads.blocks().items():
        p = getattr(params, name)
        _core.adam_update(
            p.reshape(-1),
            np.ascontiguousarray(g).reshape(-1),
            getattr(moment1, name).reshape(-1),
            getattr(moment2, name).reshape(-1),
            cfg.learning_rate, b1, b2, bc1, bc2, cfg.eps,
        )
    return params, moment1, moment2


def _check_finite(grads, epoch):
    for name, g in grads.blocks().items():
        if not np.all(np.isfinite(g)):
            finite = np.abs(g[np.isfinite(g)])
            peak = finite.max() if finite.size else float("nan")
            raise TrainingError(f"non-finite gradient in block {name} at epoch {epoch} (max finite |g| = {peak:g})")


def _loss_and_grad(kind, x, recon, shape, cfg):
    if kind == "mse":
        return losses.mse(x, recon)
    return losses.neg_ssim_loss(x, recon, shape, cfg.ssim)


def _eval_rates(M, mode):
    if mode == "full":
        return [M]
    return sorted({M, max(M // 2, 1), max(M // 4, 1)}, reverse=True)


def validation_loss(params, config, images, shape, tcfg):
    """Mask-free loss on held-out rows; averaged over several truncations in ``rate_averaged`` mode."""
    model = AutoEncoder(params, config)
    values = [
        average_loss(model, images, shape, tcfg.loss, L, tcfg.ssim)
        for L in _eval_rates(config.latent_dim, tcfg.validation_mode)
    ]
    return float(np.mean(values))


def split_indices(n, tcfg):
    """Deterministic (train, validation) index split."""
    perm = Rng(tcfg.seed, 1).permutation(n)
    n_val = min(max(1, int(round(tcfg.validation_fraction * n))), n - 1)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def train(config, schedule, data, tcfg, params=None):
    """Mini-batch Adam with a fresh dropout mask per batch and early stopping.

    Returns the parameters of the best validation epoch and the history.
    When ``params`` is given training starts from (a copy of) them.
    """
    if len(data) == 0:
        raise InputError("cannot train on an empty dataset")
    if len(data) < 2:
        raise InputError("need at least two samples to hold out a validation row")
    if data.dim != config.input_dim:
        raise ConsistencyError(f"data has {data.dim} features, model expects {config.input_dim}")
    if schedule.latent_dim != config.latent_dim:
        raise ConsistencyError(f"schedule is for {schedule.latent_dim} latents, model has {config.latent_dim}")

    train_idx, val_idx = split_indices(len(data), tcfg)
    images = data.images
    val_images = images[val_idx]
    params = init_params(config, Rng(config.seed, 2)) if params is None else params.copy()
    params.check(config)
    moment1, moment2 = params.zeros_like(), params.zeros_like()
    mask_rng = Rng(tcfg.seed, 3)

    history = TrainHistory(loss=tcfg.loss)
    best_params = params.copy()
    best_val = np.inf
    since_best = 0
    step = 0
    for epoch in range(1, tcfg.max_epochs + 1):
        tic = time.perf_counter()
        order = train_idx[Rng(tcfg.seed, 4, epoch).permutation(train_idx.size)]
        running = 0.0
        for start in range(0, order.size, tcfg.batch_size):
            batch = order[start : start + tcfg.batch_size]
            x = images[batch]
            mask = sample_mask(schedule, batch.size, mask_rng)
            recon, cache = forward_train(params, config, x, mask)
            value, d_recon = _loss_and_grad(tcfg.loss, x, recon, data.shape, tcfg)
            grads = backward(params, config, cache, d_recon)
            _check_finite(grads, epoch)
            step += 1
            adam_step(params, grads, moment1, moment2, step, tcfg)
            running += value * batch.size
        val = validation_loss(params, config, val_images, data.shape, tcfg)
        history.train_loss.append(running / order.size)
        history.val_loss.append(val)
        history.seconds.append(time.perf_counter() - tic)
        log.info("epoch %d  train %.6g  val %.6g", epoch, history.train_loss[-1], val)
        if val < best_val:
            best_val = val
            best_params = params.copy()
            history.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= tcfg.patience:
                break
    return best_params, history


def fine_tune_ssim(pretrained, config, schedule, data, tcfg):
    """Continue training from ``pretrained`` with negative SSIM as the loss."""
    return train(config, schedule, data, replace(tcfg, loss="neg_ssim"), params=pretrained)
