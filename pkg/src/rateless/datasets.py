"""Dataset loading: IDX (MNIST family), CIFAR binary batches, synthetic Gaussians.

All image loaders return pixels as ``byte / 255`` flattened in (h, w, c)
order, so ``images[i].reshape(shape)`` recovers the picture.
"""

import gzip
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from rateless.errors import ConsistencyError, DomainError, FormatError, InputError

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
CIFAR_PIXELS = 32 * 32 * 3


class TruncatedFileError(FormatError):
    pass


class SpecError(DomainError):
    pass


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray
    labels: np.ndarray
    shape: tuple
    name: str = "data"
    # synthetic Gaussian data is not confined to [0, 1]
    unclamped: bool = False

    def __post_init__(self):
        images = np.ascontiguousarray(self.images, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if images.ndim != 2:
            raise FormatError(f"images must be 2-D, got shape {images.shape}")
        if int(np.prod(self.shape)) != images.shape[1]:
            raise ConsistencyError(f"shape {self.shape} does not match {images.shape[1]} columns")
        if labels.shape != (images.shape[0],):
            raise ConsistencyError(f"{labels.shape[0]} labels for {images.shape[0]} images")
        if not self.unclamped and images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise FormatError("pixel values outside [0, 1]")
        images.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))

    def __len__(self):
        return self.images.shape[0]

    @property
    def dim(self):
        return self.images.shape[1]

    @property
    def num_classes(self):
        return int(self.labels.max()) + 1 if len(self) else 0

    def take(self, indices, name=None):
        indices = np.asarray(indices)
        return Dataset(self.images[indices], self.labels[indices], self.shape, name or self.name, self.unclamped)

    def head(self, count):
        return self.take(np.arange(min(int(count), len(self))))


def _read_bytes(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_idx(raw, expected_magic, path):
    if len(raw) < 8:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes is too short for an IDX header")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != expected_magic:
        raise FormatError(f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedFileError(f"{path}: header needs {header} bytes, file has {len(raw)}")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    need = int(np.prod(dims))
    body = raw[header:]
    if len(body) < need:
        raise TruncatedFileError(f"{path}: expected {need} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8, count=need).reshape(dims), count


def load_idx(image_path, label_path, name="idx"):
    """Read an IDX image file and its label file (plain or gzip-compressed)."""
    images, n_img = _parse_idx(_read_bytes(image_path), IDX_IMAGE_MAGIC, image_path)
    labels, n_lab = _parse_idx(_read_bytes(label_path), IDX_LABEL_MAGIC, label_path)
    if n_img != n_lab:
        raise ConsistencyError(f"{n_img} images in {image_path} but {n_lab} labels in {label_path}")
    h, w = images.shape[1:]
    flat = images.reshape(n_img, h * w).astype(np.float64) / 255.0
    return Dataset(flat, labels.astype(np.int64), (h, w, 1), name)


def write_idx(images, labels, image_path, label_path):
    """Write uint8 images (n, h, w) and labels (n,) as uncompressed IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, h, w = images.shape
    with open(image_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, h, w))
        fh.write(images.tobytes())
    with open(label_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABEL_MAGIC, len(labels)))
        fh.write(labels.tobytes())


def load_cifar(batch_paths, coarse_labels=False, variant="cifar10", name=None):
    """Read CIFAR binary batches.

    CIFAR-10 records are 1 label byte + 3072 channel-planar pixels; CIFAR-100
    records carry a coarse and a fine label byte first. Fine labels are
    returned unless ``coarse_labels`` is set.
    """
    if variant not in ("cifar10", "cifar100"):
        raise InputError(f"unknown CIFAR variant {variant!r}")
    n_label = 1 if variant == "cifar10" else 2
    record = n_label + CIFAR_PIXELS
    images, labels = [], []
    for path in batch_paths:
        raw = _read_bytes(path)
        if len(raw) % record:
            raise FormatError(f"{path}: {len(raw)} bytes is not a multiple of the {record}-byte record size")
        rows = np.frombuffer(raw, dtype=np.uint8).reshape(-1, record)
        if variant == "cifar10":
            labels.append(rows[:, 0])
        else:
            labels.append(rows[:, 0] if coarse_labels else rows[:, 1])
        planar = rows[:, n_label:].reshape(-1, 3, 32, 32)
        images.append(planar.transpose(0, 2, 3, 1).reshape(-1, CIFAR_PIXELS))
    if not images:
        raise InputError("no CIFAR batch files given")
    flat = np.concatenate(images).astype(np.float64) / 255.0
    return Dataset(flat, np.concatenate(labels).astype(np.int64), (32, 32, 3), name or variant)


@dataclass(frozen=True)
class GaussianSpec:
    eigenvalues: tuple
    mean: tuple = None
    rotation_seed: int = 0
    dim: int = field(init=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        if lam.ndim != 1 or lam.size == 0:
            raise SpecError("eigenvalues must be a non-empty list")
        if np.any(lam < 0):
            raise SpecError(f"negative eigenvalue {lam.min():g}")
        if np.any(np.diff(lam) > 0):
            bad = int(np.argmax(np.diff(lam) > 0))
            raise SpecError(f"eigenvalues not sorted descending at index {bad + 1}: {lam[bad]:g} < {lam[bad + 1]:g}")
        mean = np.zeros(lam.size) if self.mean is None else np.asarray(self.mean, dtype=np.float64)
        if mean.shape != lam.shape:
            raise SpecError(f"mean has length {mean.size}, expected {lam.size}")
        object.__setattr__(self, "eigenvalues", tuple(lam.tolist()))
        object.__setattr__(self, "mean", tuple(mean.tolist()))
        object.__setattr__(self, "dim", int(lam.size))

    def basis(self):
        """Seeded random orthogonal matrix whose columns are the eigenvectors."""
        from rateless.linalg import Rng

        g = Rng(self.rotation_seed).normal((self.dim, self.dim))
        q, r = np.linalg.qr(g)
        return q * np.sign(np.diag(r))

    def covariance(self):
        phi = self.basis()
        return (phi * np.asarray(self.eigenvalues)) @ phi.T


def harmonic_spectrum(n):
    """Eigenvalues 1/1, 1/2, ..., 1/n."""
    return tuple(1.0 / k for k in range(1, n + 1))


def synth_gaussian(spec, count, rng, name="synth"):
    if count < 1:
        raise InputError("count must be at least 1")
    phi = spec.basis()
    eps = rng.normal((int(count), spec.dim))
    x = np.asarray(spec.mean) + (eps * np.sqrt(np.asarray(spec.eigenvalues))) @ phi.T
    return Dataset(x, np.zeros(int(count), dtype=np.int64), (1, spec.dim, 1), name, unclamped=True)


_IDX_FAMILY = ("mnist", "fmnist", "kmnist")


def _find(data_dir, names):
    for candidate in names:
        for suffix in ("", ".gz"):
            path = os.path.join(data_dir, candidate + suffix)
            if os.path.exists(path):
                return path
    raise FileNotFoundError(f"none of {list(names)} found in {data_dir}")


def load_named(dataset, data_dir, split="train", coarse_labels=False):
    """Load a standard dataset from ``data_dir`` by its usual file names.

    ``svhn-like`` expects SVHN converted to CIFAR-10 record layout in
    ``train_batch.bin`` / ``test_batch.bin``.
    """
    if split not in ("train", "test"):
        raise InputError(f"split must be 'train' or 'test', got {split!r}")
    if dataset in _IDX_FAMILY:
        prefix = "train" if split == "train" else "t10k"
        img = _find(data_dir, [f"{prefix}-images-idx3-ubyte", f"{prefix}-images.idx3-ubyte"])
        lab = _find(data_dir, [f"{prefix}-labels-idx1-ubyte", f"{prefix}-labels.idx1-ubyte"])
        return load_idx(img, lab, name=dataset)
    if dataset == "cifar10":
        names = [f"data_batch_{i}.bin" for i in range(1, 6)] if split == "train" else ["test_batch.bin"]
        return load_cifar([_find(data_dir, [n]) for n in names], name=dataset)
    if dataset == "cifar100":
        path = _find(data_dir, [f"{split}.bin"])
        return load_cifar([path], coarse_labels=coarse_labels, variant="cifar100", name=dataset)
    if dataset == "svhn-like":
        return load_cifar([_find(data_dir, [f"{split}_batch.bin"])], name=dataset)
    raise InputError(f"unknown dataset {dataset!r}")
