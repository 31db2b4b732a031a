"""Classical PCA: the linear rateless baseline and its closed-form distortion."""

from dataclasses import dataclass

import numpy as np

from rateless.errors import DimensionError, DomainError, InputError
from rateless.linalg import sym_eigen


@dataclass
class PCAModel:
    mean: np.ndarray
    components: np.ndarray  # N x M, columns in descending-eigenvalue order
    eigenvalues: np.ndarray  # all N, descending

    @property
    def latent_dim(self):
        return self.components.shape[1]

    @property
    def input_dim(self):
        return self.components.shape[0]

    def encode(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise DimensionError(f"input has shape {x.shape}, expected (batch, {self.input_dim})")
        return (x - self.mean) @ self.components

    def decode(self, z):
        z = np.asarray(z, dtype=np.float64)
        if z.ndim != 2 or z.shape[1] != self.latent_dim:
            raise DimensionError(f"latent has shape {z.shape}, expected (batch, {self.latent_dim})")
        return self.mean + z @ self.components.T

    def reversed(self):
        """Same subspace with the component order flipped (least principal first)."""
        return PCAModel(self.mean, np.ascontiguousarray(self.components[:, ::-1]), self.eigenvalues)


def fit_pca(data, M, subsample=None, rng=None):
    """Fit on ``data`` (a Dataset or an array of rows).

    The covariance uses the 1/num_samples normalisation. ``subsample`` fits
    on that many randomly chosen rows to bound the eigensolver input cost.
    """
    x = np.asarray(getattr(data, "images", data), dtype=np.float64)
    n, N = x.shape
    if M > N or M < 1:
        raise DimensionError(f"cannot keep {M} components of {N}-dimensional data")
    if subsample is not None and subsample < n:
        if rng is None:
            raise InputError("subsampling needs an rng")
        x = x[np.sort(rng.permutation(n)[:subsample])]
        n = x.shape[0]
    if n < 2:
        raise InputError("PCA needs at least two samples")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / n
    values, vectors = sym_eigen(cov)
    values = np.where(values < 0.0, 0.0, values)
    return PCAModel(mean, np.ascontiguousarray(vectors[:, :M]), values)


def pca_roundtrip(model, x_batch, L, order="principal"):
    """Project onto the first ``L`` components (or the last ``L`` with ``order="reversed"``)."""
    if not 1 <= L <= model.latent_dim:
        raise DomainError(f"L must lie in [1, {model.latent_dim}], got {L}")
    if order == "reversed":
        model = model.reversed()
    elif order != "principal":
        raise InputError(f"unknown component order {order!r}")
    z = model.encode(x_batch)
    z[:, L:] = 0.0
    return model.decode(z)


def theoretical_distortion(eigenvalues, L):
    """Expected squared error (total over coordinates) when keeping ``L`` components."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if not 0 <= L <= lam.size:
        raise DomainError(f"L must lie in [0, {lam.size}], got {L}")
    if np.any(np.diff(lam) > 0):
        raise DomainError("eigenvalues must be sorted in descending order")
    return float(lam[L:].sum())


def population_distortion(covariance, components, L):
    """E||P x - x||^2 for covariance C and P the projector on the first L columns.

    Equals trace(C) - trace(Phi_L^T C Phi_L).
    """
    c = np.asarray(covariance, dtype=np.float64)
    phi = np.asarray(components, dtype=np.float64)[:, :L]
    return float(np.trace(c) - np.trace(phi.T @ c @ phi))
