"""Rate sweeps over the survivor dimensionality L, a linear probe, and exports.

A "model" here is anything with ``encode``, ``decode`` and ``latent_dim``:
both :class:`rateless.model.AutoEncoder` and :class:`rateless.pca.PCAModel`
qualify.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from rateless import _core, losses
from rateless.errors import DimensionError, DomainError, InputError, RatelessError
from rateless.linalg import Rng

REPORTING_GRID = (64, 54, 44, 34, 24, 14, 4)
METRICS = ("mse", "ssim", "probe")
CSV_HEADER = ["model", "dataset", "loss", "schedule", "L", "mse", "mse_db", "ssim", "probe_acc"]


class DegenerateInputError(RatelessError, ValueError):
    pass


def truncate_latent(z_batch, L):
    """Keep the first ``L`` latent columns and zero the rest."""
    z = np.asarray(z_batch, dtype=np.float64)
    M = z.shape[-1]
    if not 1 <= L <= M:
        raise DomainError(f"L must lie in [1, {M}], got {L}")
    out = z.copy()
    out[..., L:] = 0.0
    return out


def reconstruct(model, x, L=None):
    z = model.encode(x)
    if L is not None and L < model.latent_dim:
        z = truncate_latent(z, L)
    return model.decode(z)


def average_loss(model, images, shape, kind, L=None, ssim_cfg=losses.SsimConfig(), chunk=1000):
    """Per-pixel MSE, mean SSIM, or negative mean SSIM over ``images``.

    Rows are processed in fixed chunks so the result is reproducible bit for bit.
    """
    total = 0.0
    for start in range(0, images.shape[0], chunk):
        x = images[start : start + chunk]
        recon = reconstruct(model, x, L)
        if kind == "mse":
            total += float(np.mean((recon - x) ** 2)) * x.shape[0]
        elif kind in ("ssim", "neg_ssim"):
            total += float(np.sum(losses.ssim_per_image(x, recon, shape, ssim_cfg)))
        else:
            raise InputError(f"unknown loss kind {kind!r}")
    value = total / images.shape[0]
    return -value if kind == "neg_ssim" else value


def linear_probe(latents_train, labels_train, latents_test, labels_test, num_classes,
                 epochs=30, lr=0.01, lam=1e-4, seed=0):
    """Test accuracy of a one-vs-rest linear hinge-loss classifier trained by SGD.

    Features are standardised with the training mean and standard deviation.
    """
    xtr = np.asarray(latents_train, dtype=np.float64)
    xte = np.asarray(latents_test, dtype=np.float64)
    ytr = np.ascontiguousarray(labels_train, dtype=np.int64)
    yte = np.asarray(labels_test, dtype=np.int64)
    if xtr.ndim != 2 or xte.ndim != 2 or xtr.shape[1] != xte.shape[1]:
        raise DimensionError(f"train latents {xtr.shape} and test latents {xte.shape} are not compatible")
    if xtr.shape[0] != ytr.size or xte.shape[0] != yte.size:
        raise DimensionError("latent and label counts differ")
    if np.unique(ytr).size < 2:
        raise DegenerateInputError("the probe needs at least two classes in the training labels")
    mu = xtr.mean(axis=0)
    sd = xtr.std(axis=0)
    sd[sd == 0.0] = 1.0
    xtr = np.ascontiguousarray((xtr - mu) / sd)
    xte = (xte - mu) / sd
    orders = np.stack([Rng(seed, 5, e).permutation(xtr.shape[0]) for e in range(epochs)]).astype(np.int64)
    w = np.zeros((num_classes, xtr.shape[1]))
    b = np.zeros(num_classes)
    _core.hinge_sgd(xtr, ytr, np.ascontiguousarray(orders), w, b, float(lr), float(lam))
    predicted = np.argmax(xte @ w.T + b, axis=1)
    return float(np.mean(predicted == yte))


@dataclass
class SweepResult:
    model_id: str
    rows: list
    metadata: dict = field(default_factory=dict)

    def csv_rows(self):
        meta = self.metadata
        for row in self.rows:
            yield [
                self.model_id,
                meta.get("dataset", ""),
                meta.get("loss", ""),
                meta.get("schedule", ""),
                row["L"],
                *(_fmt(row.get(k)) for k in ("mse", "mse_db", "ssim", "probe_acc")),
            ]

    def column(self, name):
        return [row.get(name) for row in self.rows]


def _fmt(value):
    return "" if value is None else repr(float(value))


def write_sweep_csv(results, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for result in results:
            writer.writerows(result.csv_rows())


def read_sweep_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def sweep(model, data, Ls, metrics=("mse", "ssim"), probe_data=None, ssim_cfg=losses.SsimConfig(),
          model_id="model", metadata=None, probe_seed=0):
    """Evaluate ``model`` on ``data`` (the test split) at every L in ``Ls``.

    ``probe`` needs ``probe_data``: the labelled split the probe is trained on.
    """
    Ls = sorted(set(int(L) for L in Ls))
    if not Ls:
        raise InputError("empty list of survivor dimensionalities")
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise InputError(f"unknown metrics {sorted(unknown)}")
    M = model.latent_dim
    if Ls[0] < 1 or Ls[-1] > M:
        raise DomainError(f"every L must lie in [1, {M}], got {Ls}")
    if "probe" in metrics:
        if probe_data is None:
            raise InputError("the probe metric needs labelled training data")
        z_train = model.encode(probe_data.images)
        z_test = model.encode(data.images)
        n_classes = max(probe_data.num_classes, data.num_classes)
    rows = []
    for L in Ls:
        row = {"L": L}
        if "mse" in metrics:
            row["mse"] = average_loss(model, data.images, data.shape, "mse", L)
            row["mse_db"] = losses.mse_db(row["mse"]) if row["mse"] > 0 else float("-inf")
        if "ssim" in metrics:
            row["ssim"] = average_loss(model, data.images, data.shape, "ssim", L, ssim_cfg)
        if "probe" in metrics:
            row["probe_acc"] = linear_probe(z_train[:, :L], probe_data.labels, z_test[:, :L], data.labels,
                                            n_classes, seed=probe_seed)
        rows.append(row)
    return SweepResult(model_id, rows, dict(metadata or {}))


def _tiles(model, data, Ls, sample_indices):
    idx = np.asarray(sample_indices, dtype=np.int64)
    if idx.size == 0 or idx.min() < 0 or idx.max() >= len(data):
        raise InputError(f"sample indices must lie in [0, {len(data)})")
    x = data.images[idx]
    rows = [x] + [reconstruct(model, x, L) for L in Ls]
    h, w, c = data.shape
    grid = np.stack(rows).reshape(len(rows), idx.size, h, w, c)
    # (row, h, col, w, c) -> picture of shape (rows*h, cols*w, c)
    return grid.transpose(0, 2, 1, 3, 4).reshape(len(rows) * h, idx.size * w, c)


def export_reconstructions(model, data, Ls, sample_indices, path):
    """Write originals (top row) and reconstructions at each L as a binary PGM/PPM."""
    picture = _tiles(model, data, Ls, sample_indices)
    pixels = np.clip(np.rint(picture * 255.0), 0, 255).astype(np.uint8)
    height, width, channels = pixels.shape
    magic = b"P5" if channels == 1 else b"P6"
    if channels not in (1, 3):
        raise DimensionError(f"cannot write {channels}-channel images as PNM")
    try:
        with open(path, "wb") as fh:
            fh.write(magic + b"\n%d %d\n255\n" % (width, height))
            fh.write(pixels.tobytes())
    except OSError as exc:
        raise RatelessError(f"cannot write image grid {path}: {exc}") from exc
    return pixels


def read_pnm(path):
    """Parse a binary PGM/PPM written by :func:`export_reconstructions`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, dims, maxval, body = raw.split(b"\n", 3)
    width, height = map(int, dims.split())
    channels = 1 if magic == b"P5" else 3
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width, channels)


def export_latent_scatter(model, data, path):
    """CSV with the first two latent coordinates and the label of every row of ``data``."""
    if model.latent_dim < 2:
        raise DimensionError(f"scatter needs at least two latents, model has {model.latent_dim}")
    z = model.encode(data.images)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["z1", "z2", "label"])
        for (z1, z2), label in zip(z[:, :2], data.labels):
            writer.writerow([repr(float(z1)), repr(float(z2)), int(label)])
