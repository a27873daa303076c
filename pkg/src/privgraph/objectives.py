"""Loss terms, the weighted encoder objectives, and MI diagnostics.

Both adversarial problems use the same shape of encoder objective,
lam * primary_loss - (1 - lam) * privacy_loss: the encoder descends its
own task's cross-entropy while ascending the adversary head's. The
vCLUB-style estimators report how much information the embeddings still
leak; they are diagnostics and are never differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import classify_logits, encode, link_scores
from .numkit import (
    Node,
    Rng,
    bce_with_logits_loss,
    gather_rows,
    log_softmax_rows,
    scale,
    softmax_ce_loss,
    sub,
)


@dataclass
class LossReport:
    """Scalar loss summary for one training round."""

    primary_loss: float
    privacy_loss: float
    combined: float
    lam: float

    @classmethod
    def build(cls, primary_loss: float, privacy_loss: float, lam: float) -> "LossReport":
        combined = lam * primary_loss - (1.0 - lam) * privacy_loss
        return cls(primary_loss=primary_loss, privacy_loss=privacy_loss,
                   combined=combined, lam=lam)


def link_examples(pos: np.ndarray, neg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stack positive then negative pairs with their {1,0} targets."""
    pos = np.asarray(pos, dtype=np.int64).reshape(-1, 2)
    neg = np.asarray(neg, dtype=np.int64).reshape(-1, 2)
    pairs = np.concatenate([pos, neg])
    targets = np.concatenate([np.ones(pos.shape[0]), np.zeros(neg.shape[0])])
    return pairs, targets


# ---------------------------------------------------------------------------
# cross-entropy surrogates


def link_ce_from_z(phi, z, pairs, targets):
    """Mean BCE of bilinear link scores on given embeddings."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise ValueError("link_ce: empty pair set")
    return bce_with_logits_loss(link_scores(phi, z, pairs), targets)


def link_ce_loss(phi, theta, ahat, x, pairs, targets):
    """Mean BCE of link scores computed from a fresh encoder pass;
    differentiable w.r.t. both phi and theta."""
    return link_ce_from_z(phi, encode(theta, ahat, x), pairs, targets)


def node_ce_from_z(psi, z, nodes, labels):
    """Mean softmax CE over a node subset on given embeddings; ``labels``
    is the full length-N vector."""
    nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
    if nodes.size == 0:
        raise ValueError("node_ce: empty node set")
    logits = classify_logits(psi, gather_rows(z, nodes))
    return softmax_ce_loss(logits, np.asarray(labels)[nodes])


def node_ce_loss(psi, theta, ahat, x, nodes, labels):
    """Mean softmax CE from a fresh encoder pass; differentiable w.r.t.
    psi and theta."""
    return node_ce_from_z(psi, encode(theta, ahat, x), nodes, labels)


# ---------------------------------------------------------------------------
# weighted encoder objectives


def _weighted_difference(primary, privacy, lam: float):
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"trade-off weight must be in [0, 1], got {lam}")
    if isinstance(primary, Node) or isinstance(privacy, Node):
        return sub(scale(primary, lam), scale(privacy, 1.0 - lam))
    return lam * primary - (1.0 - lam) * privacy


def problem1_encoder_objective(l_link, l_node, lam: float):
    """Link prediction primary, node labels private: lam*L_link - (1-lam)*L_node."""
    return _weighted_difference(l_link, l_node, lam)


def problem2_encoder_objective(l_node, l_link, lam: float):
    """Node classification primary, links private: lam*L_node - (1-lam)*L_link."""
    return _weighted_difference(l_node, l_link, lam)


# ---------------------------------------------------------------------------
# MI upper-bound diagnostics


def _plain(x) -> np.ndarray:
    return x.value if isinstance(x, Node) else np.asarray(x, dtype=np.float64)


def _bernoulli_loglik(scores: np.ndarray, targets: np.ndarray) -> np.ndarray:
    s, t = scores.reshape(-1), targets.reshape(-1)
    return -(np.maximum(s, 0.0) - s * t + np.log1p(np.exp(-np.abs(s))))


def vclub_node_estimate(psi, z, nodes, labels, rng: Rng | None = None,
                        permutation: np.ndarray | None = None) -> float:
    """Sampled MI upper bound between embeddings and labels: mean
    log-likelihood of the true labels minus the mean under a random
    permutation of them (a sample from the product of marginals).
    """
    nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
    if nodes.size == 0:
        raise ValueError("vclub_node_estimate: empty node set")
    y = np.asarray(labels, dtype=np.int64)[nodes]
    if permutation is None:
        if rng is None:
            raise ValueError("need an rng when no permutation is given")
        permutation = rng.permutation(nodes.size)
    log_probs = log_softmax_rows(classify_logits(psi, gather_rows(_plain(z), nodes)))
    rows = np.arange(nodes.size)
    joint = float(log_probs[rows, y].mean())
    marginal = float(log_probs[rows, y[permutation]].mean())
    return joint - marginal


def vclub_link_estimate(phi, z, pairs, targets, rng: Rng | None = None,
                        permutation: np.ndarray | None = None) -> float:
    """Sampled MI upper bound between embedding pairs and link targets,
    with the same true-minus-permuted structure."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise ValueError("vclub_link_estimate: empty pair set")
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    if permutation is None:
        if rng is None:
            raise ValueError("need an rng when no permutation is given")
        permutation = rng.permutation(pairs.shape[0])
    scores = _plain(link_scores(phi, _plain(z), pairs))
    joint = float(_bernoulli_loglik(scores, t).mean())
    marginal = float(_bernoulli_loglik(scores, t[permutation]).mean())
    return joint - marginal
