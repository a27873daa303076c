"""Attributed-graph data model, splits, generators, and on-disk formats.

Graphs are undirected and simple: edges are stored canonically as
(u, v) with u < v, deduplicated, without self-loops. Splitting and
generation are pure functions of (input, seed).

On-disk layout (one directory per dataset):

* ``edges.tsv``     one edge per line, ``u<TAB>v``, 0-based ids;
  duplicates and reversed duplicates are merged on load; ``#`` lines
  are ignored.
* ``features.csv``  header ``N,D`` then N rows of D comma-separated floats.
* ``labels.csv``    header ``N,C`` then N lines of one integer in [0, C).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .numkit import Rng, as_csr, as_dense


class FormatError(ValueError):
    """Raised for malformed dataset or checkpoint text; names the line."""


class CapacityError(ValueError):
    """Raised when a split asks for more items than the graph can supply."""


# ---------------------------------------------------------------------------
# graph type


def canonical_edges(pairs, num_nodes: int) -> np.ndarray:
    """Symmetrize, deduplicate, and drop self-loops; returns (M, 2) int64
    sorted pairs with u < v."""
    e = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= num_nodes):
        raise IndexError(f"edge endpoint out of range [0, {num_nodes})")
    u = np.minimum(e[:, 0], e[:, 1])
    v = np.maximum(e[:, 0], e[:, 1])
    keep = u != v
    if not np.any(keep):
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(np.stack([u[keep], v[keep]], axis=1), axis=0)


@dataclass
class Graph:
    """Undirected attributed graph with one integer label per node."""

    num_nodes: int
    edges: np.ndarray      # (M, 2) int64, canonical
    features: np.ndarray   # (N, D) float64
    labels: np.ndarray     # (N,) int64
    num_classes: int

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.features = as_dense(self.features)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        n = self.num_nodes
        if self.features.shape[0] != n or self.labels.shape[0] != n:
            raise ValueError(f"features/labels rows must equal num_nodes={n}")
        if self.num_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.num_classes}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError(f"label out of range [0, {self.num_classes})")
        e = self.edges
        if e.size:
            if e.min() < 0 or e.max() >= n:
                raise IndexError(f"edge endpoint out of range [0, {n})")
            if np.any(e[:, 0] >= e[:, 1]):
                raise ValueError("edges must be canonical (u < v, no self-loops)")
            if np.unique(e, axis=0).shape[0] != e.shape[0]:
                raise ValueError("duplicate undirected edge")

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


def edge_key_set(num_nodes: int, edges: np.ndarray) -> set:
    """Canonical pairs encoded as u*N+v for O(1) membership tests."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    keys = e[:, 0] * num_nodes + e[:, 1]
    return set(int(k) for k in keys)


# ---------------------------------------------------------------------------
# adjacency normalization


def normalized_adjacency(g: Graph, edges: np.ndarray | None = None) -> sp.csr_matrix:
    """Symmetric renormalized adjacency D^{-1/2} (A+I) D^{-1/2}.

    ``edges`` restricts A to a subset of the graph's edges (the trainer
    passes train positives only, so held-out links never reach the
    encoder); default is all edges. Isolated nodes keep a lone self
    term of 1.
    """
    e = g.edges if edges is None else np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    n = g.num_nodes
    loops = np.arange(n, dtype=np.int64)
    rows = np.concatenate([e[:, 0], e[:, 1], loops])
    cols = np.concatenate([e[:, 1], e[:, 0], loops])
    a_tilde = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    inv_sqrt_deg = 1.0 / np.sqrt(np.asarray(a_tilde.sum(axis=1)).reshape(-1))
    ahat = sp.diags(inv_sqrt_deg) @ a_tilde @ sp.diags(inv_sqrt_deg)
    return as_csr(ahat)


# ---------------------------------------------------------------------------
# splits


@dataclass
class NodeSplit:
    """Disjoint train/val/test node index sets for classification."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


@dataclass
class LinkSplit:
    """Positive/negative pair sets for link prediction; all negative
    sets are mutually disjoint non-edges."""

    train_pos: np.ndarray
    train_neg: np.ndarray
    val_pos: np.ndarray
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray


def split_nodes(g: Graph, per_class: int, n_val: int, n_test: int, rng: Rng) -> NodeSplit:
    """Stratified train set (per_class nodes per class, all of a class if
    it is smaller), then n_val and n_test drawn from the remainder."""
    n = g.num_nodes
    if per_class * g.num_classes + n_val + n_test > n:
        raise CapacityError(
            f"split needs up to {per_class * g.num_classes + n_val + n_test} nodes, graph has {n}")
    train_parts = []
    for c in range(g.num_classes):
        members = np.flatnonzero(g.labels == c)
        order = rng.permutation(members.size)
        train_parts.append(members[order][:per_class])
    train = np.sort(np.concatenate(train_parts)) if train_parts else np.zeros(0, dtype=np.int64)
    rest = np.setdiff1d(np.arange(n, dtype=np.int64), train)
    if rest.size < n_val + n_test:
        raise CapacityError(f"need {n_val + n_test} held-out nodes, only {rest.size} remain")
    order = rng.permutation(rest.size)
    val = np.sort(rest[order][:n_val])
    test = np.sort(rest[order][n_val:n_val + n_test])
    return NodeSplit(train=train, val=val, test=test)


def _enumerate_non_edges(num_nodes: int, forbidden: set) -> np.ndarray:
    dense = np.zeros((num_nodes, num_nodes), dtype=bool)
    for key in forbidden:
        dense[key // num_nodes, key % num_nodes] = True
    iu = np.triu_indices(num_nodes, k=1)
    free = ~dense[iu]
    return np.stack([iu[0][free], iu[1][free]], axis=1).astype(np.int64)


def _sample_negatives(num_nodes: int, forbidden: set, count: int, rng: Rng) -> np.ndarray:
    """count distinct canonical non-edges, uniform via rejection; adds the
    result to ``forbidden`` so later calls stay disjoint."""
    total_pairs = num_nodes * (num_nodes - 1) // 2
    available = total_pairs - len(forbidden)
    if available < count:
        raise CapacityError(f"need {count} negative pairs, only {available} non-edges exist")
    if available < 4 * count and num_nodes <= 5000:
        # too dense for rejection sampling: enumerate and subsample
        free = _enumerate_non_edges(num_nodes, forbidden)
        pick = free[rng.choice(free.shape[0], size=count, replace=False)]
        pick = pick[np.lexsort((pick[:, 1], pick[:, 0]))]
        for a, b in pick:
            forbidden.add(int(a) * num_nodes + int(b))
        return pick
    out = np.empty((count, 2), dtype=np.int64)
    have = 0
    while have < count:
        m = max(1024, 2 * (count - have))
        us = rng.integers(m, num_nodes)
        vs = rng.integers(m, num_nodes)
        for u, v in zip(us, vs):
            if u == v:
                continue
            a, b = (int(u), int(v)) if u < v else (int(v), int(u))
            key = a * num_nodes + b
            if key in forbidden:
                continue
            forbidden.add(key)
            out[have, 0], out[have, 1] = a, b
            have += 1
            if have == count:
                break
    return out


def split_links(g: Graph, train_frac: float = 0.85, val_frac: float = 0.05,
                rng: Rng | None = None) -> LinkSplit:
    """Partition positives train_frac/val_frac/remainder (floor for train
    and val, remainder to test) and draw one matched negative per positive."""
    if rng is None:
        raise ValueError("split_links requires an rng")
    if not (0.0 < train_frac and 0.0 <= val_frac and train_frac + val_frac < 1.0):
        raise ValueError(f"bad link fractions: train={train_frac}, val={val_frac}")
    m = g.num_edges
    if m < 10:
        raise CapacityError(f"need at least 10 edges to split, got {m}")
    # the 1e-9 nudge keeps e.g. floor(20 * 0.85) at 17 despite binary rounding
    n_train = int(m * train_frac + 1e-9)
    n_val = int(m * val_frac + 1e-9)
    n_test = m - n_train - n_val

    order = rng.permutation(m)
    pos = g.edges[order]
    train_pos = pos[:n_train]
    val_pos = pos[n_train:n_train + n_val]
    test_pos = pos[n_train + n_val:]

    forbidden = edge_key_set(g.num_nodes, g.edges)
    train_neg = _sample_negatives(g.num_nodes, forbidden, n_train, rng)
    val_neg = _sample_negatives(g.num_nodes, forbidden, n_val, rng)
    test_neg = _sample_negatives(g.num_nodes, forbidden, n_test, rng)
    return LinkSplit(train_pos=train_pos, train_neg=train_neg,
                     val_pos=val_pos, val_neg=val_neg,
                     test_pos=test_pos, test_neg=test_neg)


# ---------------------------------------------------------------------------
# generators


@dataclass
class SbmSpec:
    """Planted-block graph: B blocks, per-block size, edge probabilities
    inside/between blocks, and uniform feature-noise level."""

    blocks: int
    nodes_per_block: int
    p_in: float
    p_out: float
    noise: float = 0.1

    def __post_init__(self):
        if self.blocks < 2 or self.nodes_per_block < 1:
            raise ValueError(f"need >= 2 blocks of >= 1 node, got {self.blocks}x{self.nodes_per_block}")
        if not (0.0 <= self.p_out <= self.p_in <= 1.0):
            raise ValueError(f"need 0 <= p_out <= p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}")
        if self.noise < 0.0:
            raise ValueError(f"noise level must be >= 0, got {self.noise}")


def gen_sbm(spec: SbmSpec, rng: Rng) -> Graph:
    """Sample a stochastic block model graph; label = block index,
    features = one-hot block indicator plus uniform noise."""
    n = spec.blocks * spec.nodes_per_block
    labels = np.repeat(np.arange(spec.blocks, dtype=np.int64), spec.nodes_per_block)
    same = labels[:, None] == labels[None, :]
    probs = np.where(same, spec.p_in, spec.p_out)
    draws = rng.random((n, n))
    iu, ju = np.triu_indices(n, k=1)
    mask = draws[iu, ju] < probs[iu, ju]
    edges = np.stack([iu[mask], ju[mask]], axis=1).astype(np.int64)
    features = np.eye(spec.blocks)[labels] + spec.noise * rng.random((n, spec.blocks))
    return Graph(num_nodes=n, edges=edges, features=features,
                 labels=labels, num_classes=spec.blocks)


def make_citation_benchmark(rng: Rng, num_nodes: int = 2708, num_edges: int = 5429,
                            num_classes: int = 7, num_venues: int = 20) -> Graph:
    """Synthetic citation-style benchmark with two partially independent
    structure sources.

    Each node gets a class label and, independently, a latent venue.
    Edges mix four attachment rules (same class and venue 75%, same
    class 10%, same venue 12%, uniform 3%), so link structure carries
    venue signal that survives when class information is suppressed,
    and class signal that survives when link information is suppressed.
    Features are a binary bag of words over class-specific, venue-
    specific, and noise vocabularies (defaults give D = 1433).
    """
    labels = rng.integers(num_nodes, num_classes)
    venues = rng.integers(num_nodes, num_venues)

    by_class = [np.flatnonzero(labels == c) for c in range(num_classes)]
    by_venue = [np.flatnonzero(venues == v) for v in range(num_venues)]
    by_cell = {}
    for u in range(num_nodes):
        by_cell.setdefault((int(labels[u]), int(venues[u])), []).append(u)
    by_cell = {k: np.array(v, dtype=np.int64) for k, v in by_cell.items()}

    def pick(pool) -> int:
        return int(pool[int(rng.integers(1, pool.size)[0])])

    max_edges = num_nodes * (num_nodes - 1) // 2
    if num_edges > max_edges:
        raise CapacityError(f"asked for {num_edges} edges, only {max_edges} pairs exist")
    all_nodes = np.arange(num_nodes, dtype=np.int64)
    seen = set()
    pairs = []
    while len(pairs) < num_edges:
        u = pick(all_nodes)
        kind = float(rng.random(()))
        if kind < 0.75:
            pool = by_cell[(int(labels[u]), int(venues[u]))]
        elif kind < 0.85:
            pool = by_class[int(labels[u])]
        elif kind < 0.97:
            pool = by_venue[int(venues[u])]
        else:
            pool = all_nodes
        v = pick(pool)
        if u == v:
            continue
        a, b = (u, v) if u < v else (v, u)
        key = a * num_nodes + b
        if key in seen:
            continue
        seen.add(key)
        pairs.append((a, b))
    edges = canonical_edges(np.array(pairs, dtype=np.int64), num_nodes)

    words_per_class, words_per_venue, noise_words = 100, 15, 433
    class_block = num_classes * words_per_class
    venue_block = num_venues * words_per_venue
    dim = class_block + venue_block + noise_words
    features = np.zeros((num_nodes, dim))
    for u in range(num_nodes):
        cw = int(labels[u]) * words_per_class + rng.integers(12, words_per_class)
        vw = class_block + int(venues[u]) * words_per_venue + rng.integers(10, words_per_venue)
        nw = class_block + venue_block + rng.integers(5, noise_words)
        features[u, np.concatenate([cw, vw, nw])] = 1.0
    return Graph(num_nodes=num_nodes, edges=edges, features=features,
                 labels=labels, num_classes=num_classes)


# ---------------------------------------------------------------------------
# on-disk formats


def save_graph(g: Graph, path) -> None:
    """Write edges.tsv / features.csv / labels.csv into a directory."""
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    with open(p / "edges.tsv", "w") as f:
        for u, v in g.edges:
            f.write(f"{u}\t{v}\n")
    with open(p / "features.csv", "w") as f:
        f.write(f"{g.num_nodes},{g.feature_dim}\n")
        for row in g.features:
            f.write(",".join(f"{x:.17g}" for x in row) + "\n")
    with open(p / "labels.csv", "w") as f:
        f.write(f"{g.num_nodes},{g.num_classes}\n")
        for y in g.labels:
            f.write(f"{y}\n")


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    return path.read_text().splitlines()


def _header_pair(line: str, path: Path) -> tuple[int, int]:
    parts = line.strip().split(",")
    try:
        a, b = (int(x) for x in parts)
    except ValueError:
        raise FormatError(f"{path}:1: header must be two integers, got {line!r}") from None
    return a, b


def load_graph(path) -> Graph:
    """Load a dataset directory; node count comes from labels.csv, the
    feature dimension from the features.csv header."""
    p = Path(path)
    labels_lines = _read_lines(p / "labels.csv")
    features_lines = _read_lines(p / "features.csv")
    edges_lines = _read_lines(p / "edges.tsv")

    n, c = _header_pair(labels_lines[0], p / "labels.csv")
    if len(labels_lines) != n + 1:
        raise FormatError(f"{p / 'labels.csv'}: expected {n} label lines, got {len(labels_lines) - 1}")
    labels = np.zeros(n, dtype=np.int64)
    for i, line in enumerate(labels_lines[1:], start=2):
        try:
            y = int(line.strip())
        except ValueError:
            raise FormatError(f"{p / 'labels.csv'}:{i}: not an integer: {line!r}") from None
        if not 0 <= y < c:
            raise FormatError(f"{p / 'labels.csv'}:{i}: label {y} outside [0, {c})")
        labels[i - 2] = y

    n2, d = _header_pair(features_lines[0], p / "features.csv")
    if n2 != n:
        raise FormatError(f"{p / 'features.csv'}: node count {n2} != {n} from labels.csv")
    if len(features_lines) != n + 1:
        raise FormatError(f"{p / 'features.csv'}: expected {n} feature rows, got {len(features_lines) - 1}")
    features = np.zeros((n, d))
    for i, line in enumerate(features_lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != d:
            raise FormatError(f"{p / 'features.csv'}:{i}: expected {d} values, got {len(parts)}")
        try:
            features[i - 2] = [float(x) for x in parts]
        except ValueError:
            raise FormatError(f"{p / 'features.csv'}:{i}: invalid float") from None

    pairs = []
    for i, raw in enumerate(edges_lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{p / 'edges.tsv'}:{i}: expected 'u<TAB>v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"{p / 'edges.tsv'}:{i}: endpoints must be integers") from None
        if not (0 <= u < n and 0 <= v < n):
            raise IndexError(f"{p / 'edges.tsv'}:{i}: endpoint outside [0, {n})")
        pairs.append((u, v))
    edges = canonical_edges(np.array(pairs, dtype=np.int64).reshape(-1, 2), n)
    return Graph(num_nodes=n, edges=edges, features=features, labels=labels, num_classes=c)
