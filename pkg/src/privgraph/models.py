"""The three parameterized networks and their prediction rules.

* encoder    Z = A' relu(A' X W0) W1 over the normalized adjacency A'
* classifier logits = Z Wc, label = argmax
* link head  score(u, v) = z_u^T Wb z_v, probability = sigmoid(score)

Parameter containers hold either plain arrays (eager evaluation) or
tape nodes (training); the forward functions work with both because
the underlying primitives do.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkit import Node, Rng, gather_rows, hadamard, matmul, relu, row_sum, spmm


@dataclass
class EncoderParams:
    """Two-layer graph-convolution weights: w0 is D x H, w1 is H x d."""

    w0: object
    w1: object


@dataclass
class ClassifierParams:
    """Softmax head weights: wc is d x C."""

    wc: object


@dataclass
class PredictorParams:
    """Bilinear link head weights: wb is d x d."""

    wb: object


def _plain(x) -> np.ndarray:
    return x.value if isinstance(x, Node) else np.asarray(x)


def encode(theta: EncoderParams, ahat, x):
    """Embed all nodes: Z = A' relu(A' X W0) W1, shape N x d."""
    h = relu(spmm(ahat, matmul(x, theta.w0)))
    return spmm(ahat, matmul(h, theta.w1))


def classify_logits(psi: ClassifierParams, z):
    """Pre-softmax class scores Z Wc, shape N x C."""
    return matmul(z, psi.wc)


def predict_labels(logits) -> np.ndarray:
    """Argmax class per row; ties go to the lowest column index."""
    return np.argmax(_plain(logits), axis=1)


def predict_label(logits, u: int) -> int:
    return int(predict_labels(logits)[u])


def link_scores(phi: PredictorParams, z, pairs: np.ndarray):
    """Bilinear scores z_u^T Wb z_v for a (P, 2) pair array, shape P x 1."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    zu = gather_rows(z, pairs[:, 0])
    zv = gather_rows(z, pairs[:, 1])
    return row_sum(hadamard(matmul(zu, phi.wb), zv))


def link_score(phi: PredictorParams, z, u: int, v: int) -> float:
    """Raw link score for one pair; the probability is sigmoid(score)."""
    s = link_scores(phi, z, np.array([[u, v]]))
    return float(_plain(s)[0, 0])


def predict_link(score: float) -> int:
    """1 iff sigmoid(score) > 0.5, i.e. iff score > 0."""
    return int(score > 0.0)


def _glorot(rng: Rng, fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, (fan_in, fan_out))


def init_params(dims: tuple[int, int, int, int], rng: Rng):
    """Glorot-uniform (theta, phi, psi) for dims (D, H, d, C)."""
    d_in, h, d_out, c = dims
    if min(dims) < 1:
        raise ValueError(f"all dims must be >= 1, got {dims}")
    theta = EncoderParams(w0=_glorot(rng, d_in, h), w1=_glorot(rng, h, d_out))
    phi = PredictorParams(wb=_glorot(rng, d_out, d_out))
    psi = ClassifierParams(wc=_glorot(rng, d_out, c))
    return theta, phi, psi
