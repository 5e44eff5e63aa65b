"""Clustering evaluation: NMI, purity and pair-counting scores.

All metrics are invariant to relabeling of either argument.  Entropies are
summed over *sorted* count arrays, which makes the summation order independent
of the labeling and guarantees that a partition scores exactly 1.0 against any
relabeling of itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError, ValidationError


def _label_pair(pred, truth):
    p = np.asarray(pred).ravel()
    t = np.asarray(truth).ravel()
    if p.shape[0] != t.shape[0]:
        raise ValidationError(
            f"label vectors differ in length: {p.shape[0]} vs {t.shape[0]}"
        )
    if p.shape[0] < 1:
        raise ValidationError("label vectors must be nonempty")
    return p, t


@dataclass(frozen=True)
class ContingencyTable:
    """Cross-tabulation of predicted clusters against true classes."""

    counts: np.ndarray
    n: int

    @classmethod
    def from_labels(cls, pred, truth) -> "ContingencyTable":
        p, t = _label_pair(pred, truth)
        _, pi = np.unique(p, return_inverse=True)
        _, ti = np.unique(t, return_inverse=True)
        counts = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
        np.add.at(counts, (pi, ti), 1)
        return cls(counts=counts, n=int(p.shape[0]))

    @property
    def pred_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def true_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _entropy(counts: np.ndarray, n: int) -> float:
    """Natural-log entropy of a count vector, summed in sorted order."""
    c = np.sort(counts[counts > 0].ravel())
    p = c / n
    return float(np.sum(-p * np.log(p)))


def nmi(pred, truth) -> float:
    """Normalized mutual information ``2 I / (H_pred + H_true)`` in [0, 1].

    Returns 1 by convention when both partitions are single-cluster (the two
    trivial partitions are identical).
    """
    table = ContingencyTable.from_labels(pred, truth)
    h_pred = _entropy(table.pred_sizes, table.n)
    h_true = _entropy(table.true_sizes, table.n)
    denom = h_pred + h_true
    if denom == 0.0:
        return 1.0
    h_joint = _entropy(table.counts, table.n)
    value = 2.0 * (denom - h_joint) / denom
    return min(1.0, max(0.0, value))


def purity(pred, truth) -> float:
    """Fraction of samples in their predicted cluster's majority true class."""
    table = ContingencyTable.from_labels(pred, truth)
    return float(table.counts.max(axis=1).sum()) / table.n


def pair_scores(pred, truth) -> dict:
    """Pair-counting precision/recall/F-score/Rand index over all sample pairs.

    A pair is a true positive when it is co-clustered in both partitions.
    0/0 conventions: precision and recall are 1 when no positive pairs are
    claimed/required; the F-score is 0 when precision + recall is 0.
    """
    table = ContingencyTable.from_labels(pred, truth)
    if table.n < 2:
        raise ValidationError("pair scores need at least two samples")

    def pairs(c) -> int:
        return sum(int(v) * (int(v) - 1) // 2 for v in np.ravel(c))

    tp = pairs(table.counts)
    same_pred = pairs(table.pred_sizes)
    same_true = pairs(table.true_sizes)
    total = table.n * (table.n - 1) // 2
    tn = total - same_pred - same_true + tp
    precision = 1.0 if same_pred == 0 else tp / same_pred
    recall = 1.0 if same_true == 0 else tp / same_true
    if precision + recall == 0.0:
        fscore = 0.0
    else:
        fscore = 2.0 * precision * recall / (precision + recall)
    return {
        "precision": precision,
        "recall": recall,
        "fscore": fscore,
        "rand_index": (tp + tn) / total,
    }


#: method codes accepted by :func:`index`; 0 and 3 follow the original
#: interface, the remaining codes are documented extensions.
INDEX_METHODS = {
    0: "purity",
    1: "precision",
    2: "recall",
    3: "fscore",
    4: "rand_index",
}


def index(pred, truth, method: int) -> float:
    """Numeric-code dispatcher: 0 purity, 1 precision, 2 recall, 3 F-score, 4 Rand."""
    if method not in INDEX_METHODS:
        valid = ", ".join(f"{k}={v}" for k, v in sorted(INDEX_METHODS.items()))
        raise UsageError(f"unknown method code {method!r}; valid codes: {valid}")
    name = INDEX_METHODS[method]
    if name == "purity":
        return purity(pred, truth)
    return pair_scores(pred, truth)[name]
