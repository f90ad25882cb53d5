"""PCA fitted through the eigendecomposition of the sample covariance."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from lccd.errors import InvalidInputError

log = logging.getLogger(__name__)


@dataclass
class PcaModel:
    """Projection ``components @ (v - mean)``.

    ``components`` is ``(output_dim, input_dim)`` with orthonormal rows
    unless the model was fitted with whitening.  ``explained_variance`` is
    only available on freshly fitted models; it is not part of the file
    format.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray | None = None

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    @property
    def output_dim(self) -> int:
        return self.components.shape[0]


def fit_pca(samples, output_dim: int, sample_cap: int | None = None,
            seed: int = 0, whiten: bool = False) -> PcaModel:
    """Fit a PCA model.

    Parameters
    ----------
    samples : array_like, shape (n, D)
    output_dim : int
        Number of leading components ``K <= D`` to keep.
    sample_cap : int, optional
        If there are more than ``sample_cap`` rows, a uniform subsample of
        that size (drawn with ``seed``) is used.
    whiten : bool
        Scale each component by ``1/sqrt(eigenvalue)``.

    Notes
    -----
    Eigenvectors are sorted by decreasing eigenvalue and their signs are
    fixed so that the largest-magnitude entry of each is positive.
    Components beyond the data rank come from the orthonormal completion
    that ``eigh`` returns; a warning is logged.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInputError("samples must be a 2-D array")
    n, dim = x.shape
    if not 1 <= output_dim <= dim:
        raise InvalidInputError(f"output_dim {output_dim} not in [1, {dim}]")
    if sample_cap is not None and n > sample_cap:
        rng = np.random.default_rng(seed)
        x = x[np.sort(rng.choice(n, size=sample_cap, replace=False))]
        n = sample_cap
    if n < output_dim:
        raise InvalidInputError(f"{n} samples cannot support {output_dim} components")

    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:output_dim]
    evals = np.maximum(evals[order], 0.0)
    comps = evecs[:, order].T

    biggest = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(output_dim), biggest])
    comps = comps * signs[:, None]

    scale = max(float(evals[0]) if evals.size else 0.0, 1.0)
    rank_tol = scale * dim * np.finfo(np.float64).eps * 10
    deficient = int(np.sum(evals <= rank_tol))
    if deficient:
        log.warning("PCA: %d of %d components span a null direction of the data",
                    deficient, output_dim)
    if whiten:
        comps = comps / np.sqrt(np.maximum(evals, rank_tol))[:, None]
    return PcaModel(mean, comps, evals)


def project(model: PcaModel, v) -> np.ndarray:
    """Project one vector (shape ``(D,)``) or a batch (shape ``(n, D)``)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != model.input_dim:
        raise InvalidInputError(f"expected dimension {model.input_dim}, got {v.shape[-1]}")
    return (v - model.mean) @ model.components.T


def reconstruct(model: PcaModel, z) -> np.ndarray:
    """Map projected coordinates back to input space (orthonormal models only)."""
    return np.asarray(z) @ model.components + model.mean
