"""One-vs-rest linear SVMs and the evaluation harness."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from lccd.errors import InvalidInputError

log = logging.getLogger(__name__)


@dataclass
class LinearModel:
    """``weights[c]`` holds class ``classes[c]``'s weights with the bias last."""

    classes: list[str]
    weights: np.ndarray

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1

    def decision_function(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dim:
            raise InvalidInputError(f"expected dimension {self.dim}, got {x.shape[1]}")
        return x @ self.weights[:, :-1].T + self.weights[:, -1]

    def predict(self, x) -> list[str]:
        scores = self.decision_function(x)
        return [self.classes[i] for i in scores.argmax(axis=1)]


def train(x, labels, regularization: float = 1e-4, epochs: int = 50,
          seed: int = 0) -> LinearModel:
    """Train one-vs-rest L2-regularized hinge-loss classifiers by SGD.

    The objective is ``lambda/2 |w|^2 + mean_i hinge_i``.  Because it depends
    on the data only through the empirical distribution, exact duplicate rows
    are merged first and carried as sample weights (``multiplicity / mean
    multiplicity``); a training set repeated twice therefore yields the
    same model bit for bit.  Rows are visited in a seeded random order each
    epoch with step size ``1 / (lambda * (t0 + t))``, ``t0 = 1/lambda``.  The
    bias is not regularized.

    Parameters
    ----------
    x : array_like, shape (n, dim)
    labels : sequence of str
    regularization : float
        ``lambda`` above.
    epochs : int
    seed : int

    Returns
    -------
    LinearModel
    """
    x = np.asarray(x, dtype=np.float64)
    labels = [str(l) for l in labels]
    if x.ndim != 2 or x.shape[0] != len(labels):
        raise InvalidInputError("x must be (n, dim) with one label per row")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise InvalidInputError("training needs at least two classes")
    if regularization <= 0:
        raise InvalidInputError("regularization must be positive")

    y_idx = np.array([classes.index(l) for l in labels], dtype=np.float64)
    rows, counts = np.unique(np.column_stack([x, y_idx]), axis=0, return_counts=True)
    x_u, y_u = rows[:, :-1], rows[:, -1].astype(np.intp)
    sample_w = counts / counts.mean()

    n, dim = x_u.shape
    n_cls = len(classes)
    # targets[i, c] = +1 if row i belongs to class c else -1
    targets = np.where(y_u[:, None] == np.arange(n_cls)[None, :], 1.0, -1.0)
    w = np.zeros((n_cls, dim))
    b = np.zeros(n_cls)
    lam = regularization
    t0 = 1.0 / lam
    t = 0
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        for i in rng.permutation(n):
            eta = 1.0 / (lam * (t0 + t))
            xi, yi = x_u[i], targets[i]
            active = yi * (w @ xi + b) < 1.0
            w *= 1.0 - eta * lam
            if active.any():
                step = eta * sample_w[i] * yi[active]
                w[active] += step[:, None] * xi[None, :]
                b[active] += step
            t += 1
    return LinearModel(classes, np.column_stack([w, b]))


@dataclass
class Report:
    """Evaluation summary.

    ``confusion[i, j]`` counts test items of class ``labels[i]`` predicted as
    ``labels[j]``.  ``labels`` lists the trained classes followed by any test
    labels the model never saw.
    """

    labels: list[str]
    confusion: np.ndarray
    accuracy: float
    per_class_accuracy: dict[str, float]
    average_precision: dict[str, float]
    mean_average_precision: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "accuracy": self.accuracy,
            "mean_average_precision": self.mean_average_precision,
            "labels": list(self.labels),
            "per_class_accuracy": {k: self.per_class_accuracy[k] for k in self.labels
                                   if k in self.per_class_accuracy},
            "average_precision": {k: self.average_precision[k] for k in self.labels
                                  if k in self.average_precision},
            "confusion": self.confusion.astype(int).tolist(),
        }
        d.update(self.extra)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        known = {"accuracy", "mean_average_precision", "labels", "per_class_accuracy",
                 "average_precision", "confusion"}
        return cls(
            labels=list(d["labels"]),
            confusion=np.array(d["confusion"], dtype=np.int64),
            accuracy=float(d["accuracy"]),
            per_class_accuracy=dict(d["per_class_accuracy"]),
            average_precision=dict(d["average_precision"]),
            mean_average_precision=float(d["mean_average_precision"]),
            extra={k: v for k, v in d.items() if k not in known},
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["truth\\predicted", *self.labels])
        for label, row in zip(self.labels, self.confusion):
            writer.writerow([label, *(int(v) for v in row)])
        return buf.getvalue()


def average_precision(scores, relevant) -> float:
    """Non-interpolated AP: mean precision at the rank of each relevant item.

    Ties in ``scores`` are broken by input order (stable sort).
    """
    scores = np.asarray(scores, dtype=np.float64)
    relevant = np.asarray(relevant, dtype=bool)
    n_rel = int(relevant.sum())
    if n_rel == 0:
        return float("nan")
    order = np.argsort(-scores, kind="stable")
    hits = relevant[order]
    ranks = np.flatnonzero(hits) + 1
    precision_at_hits = np.arange(1, n_rel + 1) / ranks
    return float(precision_at_hits.mean())


def evaluate(model: LinearModel, x, labels) -> Report:
    x = np.asarray(x, dtype=np.float64)
    labels = [str(l) for l in labels]
    if x.shape[0] == 0 or x.shape[0] != len(labels):
        raise InvalidInputError("test set is empty or has mismatched labels")
    unseen = sorted(set(labels) - set(model.classes))
    if unseen:
        log.warning("test labels never seen in training: %s", ", ".join(unseen))
    all_labels = list(model.classes) + unseen
    index = {l: i for i, l in enumerate(all_labels)}

    scores = model.decision_function(x)
    pred = scores.argmax(axis=1)
    truth = np.array([index[l] for l in labels])
    confusion = np.zeros((len(all_labels), len(all_labels)), dtype=np.int64)
    np.add.at(confusion, (truth, pred), 1)

    per_class = {}
    for i, l in enumerate(all_labels):
        total = confusion[i].sum()
        if total:
            per_class[l] = float(confusion[i, i] / total)

    ap = {}
    for c, l in enumerate(model.classes):
        rel = truth == c
        if rel.any():
            ap[l] = average_precision(scores[:, c], rel)
    return Report(
        labels=all_labels,
        confusion=confusion,
        accuracy=float(np.trace(confusion) / confusion.sum()),
        per_class_accuracy=per_class,
        average_precision=ap,
        mean_average_precision=float(np.mean(list(ap.values()))) if ap else float("nan"),
    )


def confusion_pairs(report: Report, pairs) -> dict[tuple[str, str], float]:
    """Share of the pair's test items confused in either direction."""
    index = {l: i for i, l in enumerate(report.labels)}
    out = {}
    for a, b in pairs:
        for name in (a, b):
            if name not in index:
                raise InvalidInputError(f"class {name!r} not in report")
        i, j = index[a], index[b]
        n = report.confusion[i].sum() + report.confusion[j].sum()
        errors = report.confusion[i, j] + report.confusion[j, i]
        out[(a, b)] = float(errors / n) if n else 0.0
    return out


def summarize_runs(reports) -> dict:
    """Mean and (population) standard deviation of accuracy and mAP over partitions."""
    acc = np.array([r.accuracy for r in reports])
    maps = np.array([r.mean_average_precision for r in reports])
    return {
        "partitions": len(acc),
        "accuracy_mean": float(acc.mean()),
        "accuracy_std": float(acc.std()),
        "map_mean": float(maps.mean()),
        "map_std": float(maps.std()),
    }
