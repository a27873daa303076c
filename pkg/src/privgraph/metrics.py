"""Evaluation metrics: rank-based AUC, accuracy, random-guess baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Metrics:
    """Metric bundle for one evaluation; absent values stay None."""

    auc: float | None = None
    accuracy: float | None = None
    rand_node: float | None = None
    rand_link: float | None = None


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the average of their rank range."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores_pos, scores_neg) -> float:
    """Mann-Whitney AUC: fraction of (pos, neg) pairs with pos > neg,
    ties counted as one half. Computed via average ranks, O(n log n)."""
    pos = np.asarray(scores_pos, dtype=np.float64).reshape(-1)
    neg = np.asarray(scores_neg, dtype=np.float64).reshape(-1)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("auc requires nonempty positive and negative score sets")
    ranks = _average_ranks(np.concatenate([pos, neg]))
    rank_sum = ranks[:pos.size].sum()
    u = rank_sum - pos.size * (pos.size + 1) / 2.0
    return u / (pos.size * neg.size)


def accuracy(predictions, truth) -> float:
    """Fraction of exact matches between two index vectors."""
    p = np.asarray(predictions).reshape(-1)
    t = np.asarray(truth).reshape(-1)
    if p.size != t.size:
        raise ValueError(f"accuracy: {p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise ValueError("accuracy requires nonempty inputs")
    return float(np.mean(p == t))


def random_baselines(num_classes: int) -> tuple[float, float]:
    """Chance levels: (1/C for label guessing, 0.5 for link guessing)."""
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    return 1.0 / num_classes, 0.5
