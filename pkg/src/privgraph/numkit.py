"""Numerical substrate: dense/sparse matrices, a reverse-mode tape, Adam, RNG.

Dense values are 2-D float64 C-order numpy arrays; sparse values are
scipy CSR matrices. Every differentiable operation works in two modes:

* eager  -- all inputs are plain arrays, the result is a plain array
  (or a float for scalar-valued losses);
* taped  -- at least one input is a :class:`Node`, the result is a new
  node on the same :class:`Tape` and a backward rule is recorded.

The tape records coarse array primitives (matmul, spmm, relu, the two
losses, elementwise add/scale/...) rather than scalar ops. Gradients are
obtained with :func:`backward`, which returns d(output)/d(parameter) for
every parameter node of the tape. Summation order is fixed everywhere,
so repeated runs are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

MASK64 = (1 << 64) - 1


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible; names both shapes."""


# ---------------------------------------------------------------------------
# dense / sparse carriers


def as_dense(x) -> np.ndarray:
    """Coerce ``x`` to a 2-D float64 C-order array (the dense carrier)."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ShapeError(f"dense carrier must be 2-D, got shape {a.shape}")
    return a


def as_csr(x) -> sp.csr_matrix:
    """Coerce ``x`` to a canonical float64 CSR matrix (sorted, deduplicated)."""
    m = sp.csr_matrix(x, dtype=np.float64)
    m.sum_duplicates()
    m.sort_indices()
    return m


def densify(s: sp.csr_matrix) -> np.ndarray:
    return np.ascontiguousarray(s.toarray(), dtype=np.float64)


def check_csr(s: sp.csr_matrix) -> None:
    """Assert the CSR invariants (used by tests and after construction)."""
    rows, cols = s.shape
    indptr, indices = s.indptr, s.indices
    if len(indptr) != rows + 1:
        raise ShapeError(f"row pointer length {len(indptr)} != rows+1 ({rows + 1})")
    if np.any(np.diff(indptr) < 0) or indptr[-1] != s.nnz:
        raise ValueError("row pointer must be nondecreasing and end at nnz")
    for r in range(rows):
        ci = indices[indptr[r]:indptr[r + 1]]
        if ci.size and (np.any(np.diff(ci) <= 0) or ci[-1] >= cols):
            raise ValueError(f"row {r}: column indices must be strictly increasing and < {cols}")


# ---------------------------------------------------------------------------
# tape


class Node:
    """A value recorded on a tape: a parameter, a constant, or an op output."""

    __slots__ = ("tape", "nid", "value", "kind")

    def __init__(self, tape: "Tape", nid: int, value: np.ndarray, kind: str):
        self.tape = tape
        self.nid = nid
        self.value = value
        self.kind = kind  # "param" | "const" | "op"

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        if self.value.shape != (1, 1):
            raise ValueError(f"item() requires a scalar node, got shape {self.value.shape}")
        return float(self.value[0, 0])

    def __repr__(self):
        return f"Node(nid={self.nid}, kind={self.kind}, shape={self.value.shape})"


class Tape:
    """Ordered record of primitive operations for reverse-mode differentiation.

    Nodes are issued increasing ids, so inputs always precede outputs
    (topological order by construction). Backward walks the records in
    reverse and is a pure function of the tape: running it twice from
    the same output yields identical gradients.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self._records: list[tuple[int, object]] = []  # (output nid, vjp)

    def _new_node(self, value: np.ndarray, kind: str) -> Node:
        node = Node(self, len(self.nodes), value, kind)
        self.nodes.append(node)
        return node

    def parameter(self, value) -> Node:
        return self._new_node(as_dense(value), "param")

    def constant(self, value) -> Node:
        return self._new_node(as_dense(value), "const")

    def _record(self, value: np.ndarray, vjp) -> Node:
        node = self._new_node(value, "op")
        self._records.append((node.nid, vjp))
        return node

    def parameters(self) -> list[Node]:
        return [n for n in self.nodes if n.kind == "param"]


def _value_of(x) -> np.ndarray:
    return x.value if isinstance(x, Node) else as_dense(x)


def _tape_of(*args) -> Tape | None:
    tape = None
    for a in args:
        if isinstance(a, Node):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise ValueError("operands recorded on different tapes")
    return tape


def _wants_grad(x) -> bool:
    return isinstance(x, Node) and x.kind != "const"


# ---------------------------------------------------------------------------
# primitive operations


def matmul(a, b):
    """Matrix product a @ b, differentiable in both operands."""
    va, vb = _value_of(a), _value_of(b)
    if va.shape[1] != vb.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {va.shape} x {vb.shape}")
    out = va @ vb
    tape = _tape_of(a, b)
    if tape is None:
        return out

    def vjp(g):
        contribs = []
        if _wants_grad(a):
            contribs.append((a.nid, g @ vb.T))
        if _wants_grad(b):
            contribs.append((b.nid, va.T @ g))
        return contribs

    return tape._record(out, vjp)


def spmm(s: sp.csr_matrix, d):
    """Sparse @ dense product; the sparse operand is constant, so the
    gradient flows to the dense operand only."""
    if not sp.issparse(s):
        raise TypeError("spmm expects a scipy sparse matrix on the left")
    vd = _value_of(d)
    if s.shape[1] != vd.shape[0]:
        raise ShapeError(f"spmm: inner dimensions differ, {s.shape} x {vd.shape}")
    out = np.ascontiguousarray(s @ vd)
    tape = _tape_of(d)
    if tape is None:
        return out

    st = s.T.tocsr()

    def vjp(g):
        if _wants_grad(d):
            return [(d.nid, np.ascontiguousarray(st @ g))]
        return []

    return tape._record(out, vjp)


def relu(a):
    """Element-wise max(x, 0)."""
    va = _value_of(a)
    out = np.maximum(va, 0.0)
    tape = _tape_of(a)
    if tape is None:
        return out

    mask = va > 0.0

    def vjp(g):
        if _wants_grad(a):
            return [(a.nid, g * mask)]
        return []

    return tape._record(out, vjp)


def add(a, b):
    va, vb = _value_of(a), _value_of(b)
    if va.shape != vb.shape:
        raise ShapeError(f"add: shapes differ, {va.shape} vs {vb.shape}")
    out = va + vb
    tape = _tape_of(a, b)
    if tape is None:
        return out

    def vjp(g):
        contribs = []
        if _wants_grad(a):
            contribs.append((a.nid, g))
        if _wants_grad(b):
            contribs.append((b.nid, g))
        return contribs

    return tape._record(out, vjp)


def sub(a, b):
    va, vb = _value_of(a), _value_of(b)
    if va.shape != vb.shape:
        raise ShapeError(f"sub: shapes differ, {va.shape} vs {vb.shape}")
    out = va - vb
    tape = _tape_of(a, b)
    if tape is None:
        return out

    def vjp(g):
        contribs = []
        if _wants_grad(a):
            contribs.append((a.nid, g))
        if _wants_grad(b):
            contribs.append((b.nid, -g))
        return contribs

    return tape._record(out, vjp)


def scale(a, c: float):
    va = _value_of(a)
    c = float(c)
    out = c * va
    tape = _tape_of(a)
    if tape is None:
        return out

    def vjp(g):
        if _wants_grad(a):
            return [(a.nid, c * g)]
        return []

    return tape._record(out, vjp)


def hadamard(a, b):
    """Element-wise product."""
    va, vb = _value_of(a), _value_of(b)
    if va.shape != vb.shape:
        raise ShapeError(f"hadamard: shapes differ, {va.shape} vs {vb.shape}")
    out = va * vb
    tape = _tape_of(a, b)
    if tape is None:
        return out

    def vjp(g):
        contribs = []
        if _wants_grad(a):
            contribs.append((a.nid, g * vb))
        if _wants_grad(b):
            contribs.append((b.nid, g * va))
        return contribs

    return tape._record(out, vjp)


def gather_rows(a, idx):
    """Select rows a[idx]; backward scatter-adds into the source rows."""
    va = _value_of(a)
    idx = np.asarray(idx, dtype=np.int64)
    if idx.ndim != 1:
        raise ShapeError(f"gather_rows: index vector must be 1-D, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= va.shape[0]):
        raise IndexError(f"gather_rows: index out of range for {va.shape[0]} rows")
    out = np.ascontiguousarray(va[idx])
    tape = _tape_of(a)
    if tape is None:
        return out

    def vjp(g):
        if _wants_grad(a):
            z = np.zeros_like(va)
            np.add.at(z, idx, g)
            return [(a.nid, z)]
        return []

    return tape._record(out, vjp)


def row_sum(a):
    """Sum each row; (n, k) -> (n, 1)."""
    va = _value_of(a)
    out = va.sum(axis=1, keepdims=True)
    tape = _tape_of(a)
    if tape is None:
        return out

    cols = va.shape[1]

    def vjp(g):
        if _wants_grad(a):
            return [(a.nid, np.repeat(g, cols, axis=1))]
        return []

    return tape._record(out, vjp)


def _log_softmax(v: np.ndarray) -> np.ndarray:
    # max subtraction keeps exp() in range for any finite input
    m = v.max(axis=1, keepdims=True)
    shifted = v - m
    lse = m + np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return v - lse


def log_softmax_rows(a):
    """Per-row log-softmax, computed with max subtraction."""
    va = _value_of(a)
    out = _log_softmax(va)
    tape = _tape_of(a)
    if tape is None:
        return out

    soft = np.exp(out)

    def vjp(g):
        if _wants_grad(a):
            return [(a.nid, g - soft * g.sum(axis=1, keepdims=True))]
        return []

    return tape._record(out, vjp)


def softmax_ce_loss(logits, labels):
    """Mean cross-entropy of per-row softmax against integer labels.

    Returns a float in eager mode, a (1, 1) scalar node in taped mode.
    """
    vl = _value_of(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n, c = vl.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels must have shape ({n},), got {labels.shape}")
    if n == 0:
        raise ValueError("softmax_ce_loss: empty label set")
    if labels.min() < 0 or labels.max() >= c:
        raise IndexError(f"label out of range [0, {c})")

    log_probs = _log_softmax(vl)
    loss = -float(log_probs[np.arange(n), labels].mean())
    tape = _tape_of(logits)
    if tape is None:
        return loss

    soft = np.exp(log_probs)

    def vjp(g):
        if _wants_grad(logits):
            d = soft.copy()
            d[np.arange(n), labels] -= 1.0
            return [(logits.nid, (float(g[0, 0]) / n) * d)]
        return []

    return tape._record(np.array([[loss]]), vjp)


def bce_with_logits_loss(scores, targets):
    """Mean binary cross-entropy on raw scores (logits).

    Uses the stable form max(s,0) - s*t + log1p(exp(-|s|)); targets are
    a {0,1} vector. Float in eager mode, scalar node in taped mode.
    """
    vs = _value_of(scores)
    s = vs.reshape(-1)
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    if s.shape != t.shape:
        raise ShapeError(f"bce: {s.shape[0]} scores vs {t.shape[0]} targets")
    if s.size == 0:
        raise ValueError("bce_with_logits_loss: empty score set")
    if not np.all((t == 0.0) | (t == 1.0)):
        raise ValueError("bce targets must be 0 or 1")

    loss = float(np.mean(np.maximum(s, 0.0) - s * t + np.log1p(np.exp(-np.abs(s)))))
    tape = _tape_of(scores)
    if tape is None:
        return loss

    n = s.size

    def vjp(g):
        if _wants_grad(scores):
            # piecewise sigmoid: exp is only ever taken of a non-positive
            # argument, so saturated scores cannot overflow
            pos = s >= 0.0
            sig = np.empty_like(s)
            sig[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
            es = np.exp(s[~pos])
            sig[~pos] = es / (1.0 + es)
            d = ((sig - t) / n) * float(g[0, 0])
            return [(scores.nid, d.reshape(vs.shape))]
        return []

    return tape._record(np.array([[loss]]), vjp)


def backward(tape: Tape, output: Node) -> dict[Node, np.ndarray]:
    """Reverse sweep from a scalar node; returns d(output)/d(p) for every
    parameter node of the tape (zeros for parameters the output does not
    depend on). Fan-out contributions are summed in a fixed order."""
    if not isinstance(output, Node) or output.tape is not tape:
        raise ValueError("output is not a node of this tape")
    if output.value.shape != (1, 1):
        raise ValueError(f"backward requires a scalar output, got shape {output.value.shape}")

    adj: dict[int, np.ndarray] = {output.nid: np.ones((1, 1))}
    for out_nid, vjp in reversed(tape._records):
        if out_nid > output.nid:
            continue
        g = adj.pop(out_nid, None)
        if g is None:
            continue
        for nid, contrib in vjp(g):
            prev = adj.get(nid)
            adj[nid] = contrib if prev is None else prev + contrib
    return {p: adj.get(p.nid, np.zeros_like(p.value)) for p in tape.parameters()}


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    """Bias-corrected adaptive-moment optimizer state for a parameter list."""

    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(
            lr=lr, beta1=beta1, beta2=beta2, eps=eps, step_count=0,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(state: AdamState, params, grads, ascend: bool = False):
    """One Adam update; returns the new parameter arrays.

    ``ascend=True`` negates the gradients before the update, which is
    bitwise identical to descending on the negated loss. Moments and the
    step counter are updated in place.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError(f"adam_step: {len(params)} params vs {len(grads)} grads")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeError(f"adam_step: param shape {p.shape} vs grad shape {g.shape}")
    if ascend:
        grads = [-g for g in grads]

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * (g * g)
        m_hat = state.m[i] / (1.0 - b1 ** t)
        v_hat = state.v[i] / (1.0 - b2 ** t)
        out.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


# ---------------------------------------------------------------------------
# random numbers


def splitmix64(x: int) -> int:
    """One splitmix64 scramble step (used as the sub-seed mixing function)."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def mix_seed(master: int, index: int) -> int:
    """Derive an independent sub-seed from (master seed, index)."""
    return splitmix64((master & MASK64) ^ splitmix64(index & MASK64))


class Rng:
    """Seedable random generator; identical seed gives an identical stream."""

    algorithm = "pcg64"

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def integers(self, n: int, k: int) -> np.ndarray:
        """n indices uniform in [0, k)."""
        if k < 1:
            raise ValueError(f"upper bound must be >= 1, got {k}")
        return self._gen.integers(0, k, size=n, dtype=np.int64)

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def random(self, shape) -> np.ndarray:
        return self._gen.random(size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)

    def spawn(self, index: int) -> "Rng":
        """Independent generator derived by splitmix64 mixing."""
        return Rng(mix_seed(self.seed, index))


def seeded_uniform(rng: Rng, n: int, k: int) -> np.ndarray:
    """n indices uniform in [0, k), deterministic per the rng's seed."""
    return rng.integers(n, k)
