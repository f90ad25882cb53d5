"""Csiszar f-divergences between discrete histograms and their windowed form.

Two evaluation routes share one set of per-bin term functions:

* :func:`divergence` / :func:`subspace_divergence` work on single pairs and
  reduce the terms with :func:`math.fsum`.  Because ``fsum`` is correctly
  rounded, results do not depend on bin order, so permuting the bins of both
  inputs gives bit-identical values.
* :func:`window_divergences` evaluates whole stacks of histogram pairs with
  numpy and is what descriptor assembly uses.

Windowed values are computed on raw (not renormalized) sub-histograms.  To
keep them nonnegative and zero for identical inputs, each window sums the
tangent-corrected generator ``f(t) - f'(1) (t - 1)``.  Over a full window of
normalized histograms that correction sums to zero, so the full-length window
reproduces the plain definition.  Only KL changes (``p ln(p/q) - p + q``); the
Bhattacharyya window value is ``-ln(1 - H_w)`` with ``H_w`` the windowed
Hellinger sum, which equals ``-ln sum(sqrt(p q))`` on the full window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lccd.errors import InvalidConfigError, InvalidInputError

NORMALIZATION_TOL = 1e-9

# stand-in for +inf inside descriptors, which must stay finite for PCA/GMM
INFINITY_SENTINEL = 1e12

_KINDS = ("bhattacharyya", "kl", "symmetric_kl", "hellinger",
          "total_variation", "pearson", "alpha")


@dataclass(frozen=True)
class DivergenceKind:
    """A member of the f-divergence family.

    ``alpha`` is only meaningful (and required) for ``name == "alpha"``.
    """

    name: str
    alpha: float | None = None

    def __post_init__(self):
        if self.name not in _KINDS:
            raise InvalidConfigError(f"unknown divergence {self.name!r}")
        if self.name == "alpha":
            a = self.alpha
            if a is None or not math.isfinite(a) or a in (0.0, 1.0):
                raise InvalidConfigError(f"alpha must be finite and not 0 or 1, got {a}")
        elif self.alpha is not None:
            raise InvalidConfigError(f"{self.name} takes no alpha parameter")

    def __str__(self):
        return f"alpha:{self.alpha!r}" if self.name == "alpha" else self.name

    @classmethod
    def parse(cls, text: str) -> "DivergenceKind":
        """Parse ``"hellinger"``, ``"kl"``, ``"alpha:0.5"`` and so on."""
        text = text.strip().lower()
        if text.startswith("alpha"):
            _, _, value = text.partition(":")
            try:
                return cls("alpha", float(value))
            except ValueError as exc:
                raise InvalidConfigError(f"bad alpha spec {text!r}") from exc
        return cls(text)


BHATTACHARYYA = DivergenceKind("bhattacharyya")
KL = DivergenceKind("kl")
SYMMETRIC_KL = DivergenceKind("symmetric_kl")
HELLINGER = DivergenceKind("hellinger")
TOTAL_VARIATION = DivergenceKind("total_variation")
PEARSON = DivergenceKind("pearson")


def alpha_divergence(alpha: float) -> DivergenceKind:
    return DivergenceKind("alpha", float(alpha))


ALL_FIXED_KINDS = (BHATTACHARYYA, KL, SYMMETRIC_KL, HELLINGER, TOTAL_VARIATION, PEARSON)


# --- per-bin terms ----------------------------------------------------------


def _xlogy_ratio(p, q):
    """``p * ln(p / q)`` with ``0 ln(0/q) = 0`` and ``p ln(p/0) = inf``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = p * np.log(p / q)
    out = np.where(p == 0, 0.0, out)
    return np.where((p > 0) & (q == 0), np.inf, out)


def _alpha_power_terms(p, q, alpha):
    """``p**alpha * q**(1 - alpha)`` with the zero-mass conventions."""
    with np.errstate(divide="ignore", invalid="ignore"):
        # ratio form keeps p == q terms exactly equal to p
        out = q * (p / q) ** alpha
    both_zero = (p == 0) & (q == 0)
    out = np.where(both_zero, 0.0, out)
    q_zero = (q == 0) & (p > 0)
    out = np.where(q_zero, np.inf if alpha > 1 else 0.0, out)
    p_zero = (p == 0) & (q > 0)
    return np.where(p_zero, np.inf if alpha < 0 else 0.0, out)


def _terms(kind: DivergenceKind, p, q, *, window: bool):
    """Per-bin contributions whose (window) sum feeds :func:`_finish`."""
    name = kind.name
    if name in ("hellinger", "bhattacharyya"):
        if name == "bhattacharyya" and not window:
            return np.sqrt(p * q)
        d = np.sqrt(p) - np.sqrt(q)
        return 0.5 * d * d
    if name == "kl":
        t = _xlogy_ratio(p, q)
        return t - p + q if window else t
    if name == "symmetric_kl":
        return _xlogy_ratio(p, q) + _xlogy_ratio(q, p)
    if name == "total_variation":
        return np.abs(p - q)
    if name == "pearson":
        d = p - q
        with np.errstate(divide="ignore", invalid="ignore"):
            out = d * d / q
        out = np.where(d == 0, 0.0, out)
        return np.where((q == 0) & (p != 0), np.inf, out)
    # alpha
    a = kind.alpha
    s = _alpha_power_terms(p, q, a)
    if window:
        # q * f(p/q) with f(t) = t/(1-a) + 1/a - t**a / (a(1-a)), arranged
        # so that p == q cancels exactly
        with np.errstate(invalid="ignore"):
            out = (q + a * (p - q) - s) / (a * (1.0 - a))
        return np.where(np.isinf(s), np.inf, out)
    return s


def _finish(kind: DivergenceKind, total, *, window: bool):
    """Map summed terms to the divergence value (vectorized)."""
    name = kind.name
    total = np.asarray(total, dtype=np.float64)
    if name == "bhattacharyya":
        with np.errstate(divide="ignore"):
            if window:
                # total is the windowed Hellinger sum, at most 1
                return -np.log1p(-np.minimum(total, 1.0))
            # Cauchy-Schwarz bounds the coefficient by 1 for normalized inputs
            return np.maximum(-np.log(np.minimum(total, 1.0)), 0.0)
    if name == "alpha" and not window:
        a = kind.alpha
        out = (1.0 - total) / (a * (1.0 - a))
        out = np.where(np.isinf(total), np.inf, out)
        return np.maximum(out, 0.0)
    if name == "kl" and not window:
        return np.maximum(total, 0.0)
    if name == "alpha":
        return np.maximum(total, 0.0)
    return total


# --- single-pair API ----------------------------------------------------------


def as_distribution(p, *, name: str = "p") -> np.ndarray:
    """Validate a discrete distribution: finite, nonnegative, summing to one."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 1-D vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError(f"{name} has negative or non-finite mass")
    total = math.fsum(arr)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise InvalidInputError(f"{name} sums to {total!r}, not 1")
    return arr


def _pair(p, q):
    p = as_distribution(p, name="p")
    q = as_distribution(q, name="q")
    if p.shape != q.shape:
        raise InvalidInputError(f"length mismatch: {p.size} vs {q.size}")
    return p, q


def divergence(kind: DivergenceKind, p, q) -> float:
    """Divergence of ``p`` from ``q`` using the discrete definition of ``kind``.

    Hellinger is ``0.5 * sum((sqrt(p) - sqrt(q))**2)``, total variation is
    ``sum(|p - q|)`` without a one-half factor.  Unbounded cases (for
    example KL with ``q_k = 0 < p_k``) return ``math.inf``.
    """
    p, q = _pair(p, q)
    total = math.fsum(_terms(kind, p, q, window=False).tolist())
    return float(_finish(kind, total, window=False))


def check_window(d: int, window: int) -> int:
    if window < 1 or window > d:
        raise InvalidConfigError(f"subspace window {window} must lie in [1, {d}]")
    return d - window + 1


def subspace_divergence(kind: DivergenceKind, p, q, window: int = 3) -> np.ndarray:
    """Divergences over every length-``window`` run of consecutive bins.

    Returns
    -------
    ndarray, shape (d - window + 1,)
        Element ``j`` only involves bins ``j .. j + window - 1`` of the raw
        histograms.
    """
    p, q = _pair(p, q)
    n = check_window(p.size, window)
    terms = _terms(kind, p, q, window=True).tolist()
    sums = [math.fsum(terms[j:j + window]) for j in range(n)]
    return _finish(kind, np.array(sums), window=True)


# --- batched route for descriptor assembly ---------------------------------


def window_divergences(kind: DivergenceKind, p: np.ndarray, q: np.ndarray,
                       window: int, *, finite: bool = True) -> np.ndarray:
    """Windowed divergences along the last axis of two broadcastable stacks.

    Inputs are not validated.  With ``finite=True`` infinities are replaced by
    :data:`INFINITY_SENTINEL`.
    """
    d = p.shape[-1]
    n = check_window(d, window)
    terms = _terms(kind, p, q, window=True)
    acc = terms[..., 0:n].copy()
    for off in range(1, window):
        acc += terms[..., off:off + n]
    out = _finish(kind, acc, window=True)
    if finite:
        out = np.where(np.isinf(out), INFINITY_SENTINEL, out)
    return out
