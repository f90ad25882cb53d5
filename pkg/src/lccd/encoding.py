"""Diagonal-covariance GMM codebooks and Fisher Vector encoding."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from lccd.errors import InvalidInputError

log = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)
COLLAPSE_WEIGHT = 1e-8
VARIANCE_FLOOR_RATIO = 1e-6


@dataclass
class GmmModel:
    """Gaussian mixture with diagonal covariances.

    ``weights`` has shape ``(K,)``; ``means`` and ``variances`` ``(K, dim)``.
    The training trace (``log_likelihood``, mean per-sample values after
    each E-step) is kept in memory only.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


@dataclass
class EncodedImage:
    image_id: str
    vector: np.ndarray


def _component_log_densities(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """``log(w_k) + log N(x_n | mu_k, diag(var_k))``, shape ``(n, K)``."""
    prec = 1.0 / model.variances
    maha = (x * x) @ prec.T - 2.0 * x @ (model.means * prec).T
    maha += (model.means ** 2 * prec).sum(axis=1)
    maha = np.maximum(maha, 0.0)
    log_det = np.log(model.variances).sum(axis=1)
    with np.errstate(divide="ignore"):
        return -0.5 * (maha + log_det + model.dim * LOG_2PI) + np.log(model.weights)


def posteriors(model: GmmModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Soft assignments (rows sum to one) and per-sample log-likelihoods."""
    x = np.asarray(x, dtype=np.float64)
    joint = _component_log_densities(model, x)
    ll = logsumexp(joint, axis=1)
    gamma = np.exp(joint - ll[:, None])
    gamma /= gamma.sum(axis=1, keepdims=True)
    return gamma, ll


def kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``k`` k-means++ seeds."""
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        chosen.append(idx)
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(chosen)


def variance_floor(x: np.ndarray) -> np.ndarray:
    var = x.var(axis=0)
    fallback = var.mean() if var.mean() > 0 else 1.0
    return VARIANCE_FLOOR_RATIO * np.where(var > 0, var, fallback)


def fit_gmm(samples, n_components: int, max_iter: int = 100, tol: float = 1e-5,
            seed: int = 0, sample_cap: int | None = None) -> GmmModel:
    """Fit a diagonal GMM by EM from a k-means++ start.

    Parameters
    ----------
    samples : array_like, shape (n, dim)
        Requires ``n >= 10 * n_components``.
    n_components : int
    max_iter : int
        Maximum number of EM iterations.
    tol : float
        Stop once the relative improvement of the mean log-likelihood
        falls below ``tol``.
    seed : int
        Seeds both the optional subsampling and the k-means++ draw.
    sample_cap : int, optional
        Uniformly subsample to at most this many rows.

    Returns
    -------
    GmmModel
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInputError("samples must be a 2-D array")
    rng = np.random.default_rng(seed)
    if sample_cap is not None and x.shape[0] > sample_cap:
        x = x[np.sort(rng.choice(x.shape[0], size=sample_cap, replace=False))]
    n, dim = x.shape
    if n_components < 1:
        raise InvalidInputError("n_components must be positive")
    if n < 10 * n_components:
        raise InvalidInputError(f"{n} samples is fewer than 10 x {n_components} components")

    floor = variance_floor(x)
    data_var = np.maximum(x.var(axis=0), floor)
    model = GmmModel(
        weights=np.full(n_components, 1.0 / n_components),
        means=x[kmeans_pp(x, n_components, rng)].copy(),
        variances=np.tile(data_var, (n_components, 1)),
    )

    prev = None
    for _ in range(max_iter):
        gamma, ll = posteriors(model, x)
        mean_ll = float(ll.mean())
        model.log_likelihood.append(mean_ll)
        if prev is not None and (mean_ll - prev) <= tol * abs(prev):
            model.converged = True
            break
        prev = mean_ll
        if _m_step(model, x, gamma, floor, data_var):
            # a reseeded component restarts the monotone sequence
            prev = None
    return model


def _m_step(model: GmmModel, x, gamma, floor, data_var) -> bool:
    n = x.shape[0]
    nk = gamma.sum(axis=0)
    weights = nk / n
    collapsed = weights < COLLAPSE_WEIGHT
    for k in range(model.n_components):
        if collapsed[k]:
            continue
        g = gamma[:, k]
        mu = g @ x / nk[k]
        diff = x - mu
        model.means[k] = mu
        model.variances[k] = np.maximum(g @ (diff * diff) / nk[k], floor)
    if collapsed.any():
        _, ll = posteriors(model, x)
        for k in np.flatnonzero(collapsed):
            worst = int(np.argmin(ll))
            log.warning("GMM component %d collapsed; reseeding at sample %d", k, worst)
            model.means[k] = x[worst]
            model.variances[k] = data_var
            weights[k] = 1.0 / model.n_components
            ll[worst] = np.inf
        weights = weights / weights.sum()
    model.weights = weights
    return bool(collapsed.any())


def _normalize(v: np.ndarray) -> np.ndarray:
    v = np.sign(v) * np.sqrt(np.abs(v))
    norm = np.linalg.norm(v)
    if norm == 0:
        log.warning("encoding has zero norm; leaving it unnormalized")
        return v
    return v / norm


def fisher_gradients(model: GmmModel, descriptors) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized mean and variance gradient blocks, each ``(K, dim)``."""
    x = np.asarray(descriptors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidInputError("need a nonempty (n, dim) descriptor array")
    if x.shape[1] != model.dim:
        raise InvalidInputError(f"descriptor dim {x.shape[1]} != model dim {model.dim}")
    n = x.shape[0]
    gamma, _ = posteriors(model, x)
    g_mu = np.empty_like(model.means)
    g_sigma = np.empty_like(model.means)
    for k in range(model.n_components):
        z = (x - model.means[k]) / np.sqrt(model.variances[k])
        g = gamma[:, k]
        w = model.weights[k]
        g_mu[k] = (g @ z) / (n * np.sqrt(w))
        g_sigma[k] = (g @ (z * z - 1.0)) / (n * np.sqrt(2.0 * w))
    return g_mu, g_sigma


def fisher_vector(model: GmmModel, descriptors, normalize: bool = True) -> np.ndarray:
    """Fisher Vector of a descriptor set.

    Layout is all mean-gradient blocks (component-major) followed by all
    variance-gradient blocks, ``2 * K * dim`` values.  With ``normalize``
    the signed square root and then global L2 normalization are applied.
    """
    g_mu, g_sigma = fisher_gradients(model, descriptors)
    fv = np.concatenate([g_mu.ravel(), g_sigma.ravel()])
    return _normalize(fv) if normalize else fv


def bow_histogram(model: GmmModel, descriptors) -> np.ndarray:
    """Hard-assignment bag-of-words histogram over the GMM components.

    Frequencies are square-rooted and L2-normalized so they can be fused with
    Fisher Vectors.
    """
    x = np.asarray(descriptors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidInputError("need a nonempty (n, dim) descriptor array")
    gamma, _ = posteriors(model, x)
    counts = np.bincount(gamma.argmax(axis=1), minlength=model.n_components)
    return _normalize(counts / x.shape[0])


def concat_encodings(parts) -> EncodedImage:
    """Concatenate the encodings of one image and L2-normalize the result."""
    parts = list(parts)
    if not parts:
        raise InvalidInputError("nothing to concatenate")
    ids = {p.image_id for p in parts}
    if len(ids) != 1:
        raise InvalidInputError(f"encodings belong to different images: {sorted(ids)}")
    vec = np.concatenate([np.asarray(p.vector, dtype=np.float64) for p in parts])
    norm = np.linalg.norm(vec)
    return EncodedImage(parts[0].image_id, vec / norm if norm > 0 else vec)
