"""Dense matrix helpers, a cyclic Jacobi eigensolver and the seeded RNG.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. The helpers
here only add the shape checking and error messages the rest of the package
relies on; the arithmetic itself is numpy's.
"""

import numpy as np

from rateless import _core
from rateless.errors import ConvergenceError, DimensionError

__all__ = [
    "as_matrix",
    "identity",
    "matmul",
    "transpose",
    "add",
    "scale",
    "row_sums",
    "col_sums",
    "sym_eigen",
    "Rng",
]


def as_matrix(a):
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def identity(n):
    return np.eye(n, dtype=np.float64)


def matmul(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def transpose(a):
    return np.ascontiguousarray(as_matrix(a).T)


def add(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot add {a.shape} and {b.shape}")
    return a + b


def scale(a, factor):
    return as_matrix(a) * float(factor)


def row_sums(a):
    return as_matrix(a).sum(axis=1)


def col_sums(a):
    return as_matrix(a).sum(axis=0)


def sym_eigen(c, max_sweeps=100, tol=1e-12):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    The input is symmetrised as ``(c + c.T) / 2`` first. Sweeps continue until
    the off-diagonal Frobenius norm drops below ``tol`` times the Frobenius
    norm of the matrix.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Sorted in descending order.
    eigenvectors : ndarray, shape (n, n)
        Column ``i`` is the unit eigenvector for ``eigenvalues[i]``.
    """
    c = as_matrix(c)
    if c.shape[0] != c.shape[1]:
        raise DimensionError(f"eigendecomposition needs a square matrix, got {c.shape}")
    n = c.shape[0]
    a = np.ascontiguousarray(0.5 * (c + c.T))
    vt = identity(n)
    sweeps = _core.jacobi_sweeps(a, vt, float(tol), int(max_sweeps))
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps (n={n})")
    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], np.ascontiguousarray(vt[order].T)


class Rng:
    """Seeded random source.

    Backed by numpy's PCG64 bit generator, fed through a ``SeedSequence``
    so that named sub-streams (``derive``) are independent yet reproducible.
    """

    def __init__(self, seed, *keys):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, *self.keys])))

    def derive(self, *keys):
        """Independent child stream identified by ``keys``."""
        return Rng(self.seed, *self.keys, *keys)

    def uniform(self, size=None):
        """Samples in [0, 1)."""
        return self._gen.random(size)

    def normal(self, size=None):
        """Standard normal samples by the Box-Muller transform."""
        count = 1 if size is None else int(np.prod(size))
        pairs = (count + 1) // 2
        u1 = 1.0 - self._gen.random(pairs)  # (0, 1], keeps the log finite
        u2 = self._gen.random(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:count]
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def integers(self, low, high, size=None):
        return self._gen.integers(low, high, size)
