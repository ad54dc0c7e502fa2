"""Principal component analysis via singular value decomposition.

Components are the top eigenvectors of the sample covariance of the
centered data, computed from an SVD of the centered matrix for numerical
stability. A fixed sign convention (each component's largest-magnitude
entry is positive) makes fitted models reproducible.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDataError, InvalidParameterError

N_COMPONENTS_DEFAULT = 30


@dataclass(frozen=True)
class PcaModel:
    """Fitted projection: feature mean, component rows, eigenvalues."""

    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def fit_pca(vectors: np.ndarray, n_components: int = N_COMPONENTS_DEFAULT) -> PcaModel:
    """Fit PCA on row vectors.

    n_components is clamped to min(d, n - 1) with a warning when the
    request exceeds what the data supports. Eigenvalues use the sample
    (n - 1) normalization and come out in non-increasing order.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidDataError(f"expected a 2-D (n, d) matrix, got ndim={x.ndim}")
    n, d = x.shape
    if n < 2:
        raise InvalidDataError(f"need at least 2 vectors to fit PCA, got {n}")
    if n_components < 1:
        raise InvalidParameterError(f"n_components must be >= 1, got {n_components}")
    limit = min(d, n - 1)
    if n_components > limit:
        warnings.warn(
            f"n_components={n_components} clamped to {limit} "
            f"(data supports at most min(d={d}, n-1={n - 1}))",
            stacklevel=2,
        )
        n_components = limit

    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:n_components].copy()
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    explained = (s[:n_components] ** 2) / (n - 1)
    return PcaModel(mean=mean, components=components, explained_variance=explained)


def project(model: PcaModel, v: np.ndarray) -> np.ndarray:
    """Project vectors onto the fitted components.

    Accepts a single (d,) vector or an (n, d) stack; the projection of
    the training mean is exactly zero.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != model.mean.shape[0]:
        raise InvalidDataError(
            f"vector length {v.shape[-1]} does not match fitted dimension {model.mean.shape[0]}"
        )
    return (v - model.mean) @ model.components.T
