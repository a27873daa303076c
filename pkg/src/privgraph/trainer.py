"""Alternating adversarial training loops and unprotected baselines.

One protected round computes both cross-entropies on the training
split, then takes I simultaneous inner steps: the primary head descends
its own CE (lr1), the adversary head descends its own CE (lr2, the
adversary fits its target as well as it can), and the encoder descends
lam * L_primary - (1 - lam) * L_adversary (lr3), i.e. ascends the
adversary's CE. Each inner step recomputes the forward pass at the
current parameters; the three updates within a step are applied
simultaneously from that pass's gradients.

Baselines train the encoder and primary head alone (phase 1), select
the best validation round, then freeze the encoder and fit the other
head post hoc on the frozen embeddings (phase 2) as the privacy attack.

Every run is a deterministic function of (graph, splits, config):
parameter initialization and diagnostic shuffles come from sub-streams
of cfg.seed, and all reductions have fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphdata import Graph, LinkSplit, NodeSplit, normalized_adjacency
from .metrics import accuracy, auc
from .models import (
    ClassifierParams,
    EncoderParams,
    PredictorParams,
    classify_logits,
    encode,
    init_params,
    link_scores,
    predict_labels,
)
from .numkit import AdamState, Rng, Tape, adam_step, backward, gather_rows
from .objectives import (
    link_ce_from_z,
    link_examples,
    node_ce_from_z,
    vclub_link_estimate,
    vclub_node_estimate,
)

PROBLEM1 = "problem1"            # link prediction primary, node labels private
PROBLEM2 = "problem2"            # node classification primary, links private
BASELINE_LINK = "baseline_link"  # unprotected link model + post-hoc node attack
BASELINE_NODE = "baseline_node"  # unprotected node model + post-hoc link attack
TASKS = (PROBLEM1, PROBLEM2, BASELINE_LINK, BASELINE_NODE)


class DivergenceError(RuntimeError):
    """A training loss went non-finite; carries the offending round."""

    def __init__(self, round_index: int, message: str):
        super().__init__(f"round {round_index}: {message}")
        self.round_index = round_index


@dataclass
class TrainConfig:
    """Hyperparameters for one training run."""

    task: str
    lam: float = 0.5
    lr1: float = 0.01
    lr2: float = 0.01
    lr3: float = 0.01
    inner_steps: int = 1
    rounds: int = 200
    hidden_dim: int = 64
    embed_dim: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}, expected one of {TASKS}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"trade-off weight must be in [0, 1], got {self.lam}")
        if min(self.lr1, self.lr2, self.lr3) <= 0.0:
            raise ValueError("step sizes must be positive")
        if self.inner_steps < 1 or self.rounds < 1:
            raise ValueError("need inner_steps >= 1 and rounds >= 1")
        if self.hidden_dim < 1 or self.embed_dim < 1:
            raise ValueError("need hidden_dim >= 1 and embed_dim >= 1")


@dataclass
class TraceRecord:
    """One round: losses at round start, validation metrics at round end."""

    primary_loss: float
    privacy_loss: float
    val_primary: float
    val_privacy: float
    vclub: float


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)


@dataclass
class ModelState:
    """The three networks plus their optimizer states."""

    theta: EncoderParams
    phi: PredictorParams
    psi: ClassifierParams
    adam_theta: AdamState
    adam_phi: AdamState
    adam_psi: AdamState


@dataclass
class TrainResult:
    """Final state, per-round trace, and the validation-selected snapshot."""

    state: ModelState
    trace: TrainTrace
    best_state: ModelState
    best_round: int


def select_model(trace: TrainTrace) -> int:
    """Round with the best (max) validation primary metric, i.e. minimal
    validation error; ties go to the earliest round."""
    if not trace.records:
        raise ValueError("select_model: empty trace")
    best_idx, best = 0, -math.inf
    for i, rec in enumerate(trace.records):
        if rec.val_primary > best:
            best_idx, best = i, rec.val_primary
    return best_idx


# ---------------------------------------------------------------------------
# evaluation helpers (shared with the CLI harness)


def link_auc(phi: PredictorParams, z, pos, neg) -> float:
    """AUC of bilinear scores on positive vs negative pairs."""
    s_pos = np.asarray(link_scores(phi, z, pos)).reshape(-1)
    s_neg = np.asarray(link_scores(phi, z, neg)).reshape(-1)
    return auc(s_pos, s_neg)


def node_accuracy(psi: ClassifierParams, z, nodes, labels) -> float:
    """Argmax accuracy of the classifier head on a node subset."""
    nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
    logits = classify_logits(psi, gather_rows(np.asarray(z), nodes))
    return accuracy(predict_labels(logits), np.asarray(labels)[nodes])


# ---------------------------------------------------------------------------
# state plumbing


def _copy_adam(a: AdamState) -> AdamState:
    return AdamState(lr=a.lr, beta1=a.beta1, beta2=a.beta2, eps=a.eps,
                     step_count=a.step_count,
                     m=[x.copy() for x in a.m], v=[x.copy() for x in a.v])


def _copy_params(theta, phi, psi):
    return (EncoderParams(w0=theta.w0.copy(), w1=theta.w1.copy()),
            PredictorParams(wb=phi.wb.copy()),
            ClassifierParams(wc=psi.wc.copy()))


def _snapshot(theta, phi, psi, adam_theta, adam_phi, adam_psi) -> ModelState:
    t, p, s = _copy_params(theta, phi, psi)
    return ModelState(theta=t, phi=p, psi=s,
                      adam_theta=_copy_adam(adam_theta),
                      adam_phi=_copy_adam(adam_phi),
                      adam_psi=_copy_adam(adam_psi))


def _init_triple(g: Graph, cfg: TrainConfig, rng: Rng, initial):
    if initial is not None:
        return _copy_params(*initial)
    dims = (g.feature_dim, cfg.hidden_dim, cfg.embed_dim, g.num_classes)
    return init_params(dims, rng)


def _check_finite(value: float, round_index: int, name: str) -> float:
    if not math.isfinite(value):
        raise DivergenceError(round_index, f"{name} is {value}")
    return value


class _Problem:
    """Shared data for one run: normalized adjacency from train positives
    only (held-out links never reach the encoder), training examples,
    and validation sets."""

    def __init__(self, g: Graph, ns: NodeSplit, ls: LinkSplit):
        self.graph = g
        self.ahat = normalized_adjacency(g, edges=ls.train_pos)
        self.x = g.features
        self.labels = g.labels
        self.node_split = ns
        self.link_split = ls
        self.train_pairs, self.train_targets = link_examples(ls.train_pos, ls.train_neg)
        self.val_pairs, self.val_targets = link_examples(ls.val_pos, ls.val_neg)

    def link_loss(self, phi, z):
        return link_ce_from_z(phi, z, self.train_pairs, self.train_targets)

    def node_loss(self, psi, z):
        return node_ce_from_z(psi, z, self.node_split.train, self.labels)

    def val_link_auc(self, phi, z) -> float:
        return link_auc(phi, z, self.link_split.val_pos, self.link_split.val_neg)

    def val_node_acc(self, psi, z) -> float:
        return node_accuracy(psi, z, self.node_split.val, self.labels)


# ---------------------------------------------------------------------------
# adversarial trainers


def _train_adversarial(g: Graph, ns: NodeSplit, ls: LinkSplit, cfg: TrainConfig,
                       primary_link: bool, initial) -> TrainResult:
    prob = _Problem(g, ns, ls)
    rng = Rng(cfg.seed)
    theta, phi, psi = _init_triple(g, cfg, rng.spawn(0), initial)
    vclub_rng = rng.spawn(1)

    adam_theta = AdamState.for_params([theta.w0, theta.w1], lr=cfg.lr3)
    adam_phi = AdamState.for_params([phi.wb], lr=cfg.lr1 if primary_link else cfg.lr2)
    adam_psi = AdamState.for_params([psi.wc], lr=cfg.lr2 if primary_link else cfg.lr1)

    records = []
    best_round, best_metric, best_state = 0, -math.inf, None
    for r in range(cfg.rounds):
        l_link_start = l_node_start = 0.0
        for i in range(cfg.inner_steps):
            tape = Tape()
            th = EncoderParams(w0=tape.parameter(theta.w0), w1=tape.parameter(theta.w1))
            ph = PredictorParams(wb=tape.parameter(phi.wb))
            ps = ClassifierParams(wc=tape.parameter(psi.wc))
            z = encode(th, prob.ahat, prob.x)
            l_link = prob.link_loss(ph, z)
            l_node = prob.node_loss(ps, z)
            _check_finite(l_link.item(), r, "link CE")
            _check_finite(l_node.item(), r, "node CE")
            if i == 0:
                l_link_start, l_node_start = l_link.item(), l_node.item()

            g_link = backward(tape, l_link)
            g_node = backward(tape, l_node)
            lam = cfg.lam
            if primary_link:
                g_theta = [lam * g_link[p] - (1.0 - lam) * g_node[p] for p in (th.w0, th.w1)]
            else:
                g_theta = [lam * g_node[p] - (1.0 - lam) * g_link[p] for p in (th.w0, th.w1)]

            new_wb = adam_step(adam_phi, [phi.wb], [g_link[ph.wb]])
            new_wc = adam_step(adam_psi, [psi.wc], [g_node[ps.wc]])
            new_w = adam_step(adam_theta, [theta.w0, theta.w1], g_theta)
            phi = PredictorParams(wb=new_wb[0])
            psi = ClassifierParams(wc=new_wc[0])
            theta = EncoderParams(w0=new_w[0], w1=new_w[1])

        z_eval = encode(theta, prob.ahat, prob.x)
        link_metric = prob.val_link_auc(phi, z_eval)
        node_metric = prob.val_node_acc(psi, z_eval)
        if primary_link:
            val_primary, val_privacy = link_metric, node_metric
            mi = vclub_node_estimate(psi, z_eval, ns.val, prob.labels, rng=vclub_rng)
            rec = TraceRecord(l_link_start, l_node_start, val_primary, val_privacy, mi)
        else:
            val_primary, val_privacy = node_metric, link_metric
            mi = vclub_link_estimate(phi, z_eval, prob.val_pairs, prob.val_targets,
                                     rng=vclub_rng)
            rec = TraceRecord(l_node_start, l_link_start, val_primary, val_privacy, mi)
        records.append(rec)
        if val_primary > best_metric:
            best_metric, best_round = val_primary, r
            best_state = _snapshot(theta, phi, psi, adam_theta, adam_phi, adam_psi)

    state = ModelState(theta=theta, phi=phi, psi=psi, adam_theta=adam_theta,
                       adam_phi=adam_phi, adam_psi=adam_psi)
    return TrainResult(state=state, trace=TrainTrace(records),
                       best_state=best_state, best_round=best_round)


def train_problem1(g: Graph, node_split: NodeSplit, link_split: LinkSplit,
                   cfg: TrainConfig, initial=None) -> TrainResult:
    """Link prediction stays accurate, node labels become private."""
    if cfg.task != PROBLEM1:
        raise ValueError(f"config task is {cfg.task!r}, expected {PROBLEM1!r}")
    return _train_adversarial(g, node_split, link_split, cfg, primary_link=True,
                              initial=initial)


def train_problem2(g: Graph, node_split: NodeSplit, link_split: LinkSplit,
                   cfg: TrainConfig, initial=None) -> TrainResult:
    """Node classification stays accurate, links become private."""
    if cfg.task != PROBLEM2:
        raise ValueError(f"config task is {cfg.task!r}, expected {PROBLEM2!r}")
    return _train_adversarial(g, node_split, link_split, cfg, primary_link=False,
                              initial=initial)


# ---------------------------------------------------------------------------
# unprotected baselines with post-hoc attacks


def train_baseline(g: Graph, node_split: NodeSplit, link_split: LinkSplit,
                   cfg: TrainConfig, initial=None) -> TrainResult:
    """Phase 1 trains the encoder with the primary head only; phase 2
    freezes the validation-selected encoder and fits the other head on
    the frozen embeddings as the privacy attack (selected by its own
    validation metric)."""
    if cfg.task not in (BASELINE_LINK, BASELINE_NODE):
        raise ValueError(f"config task is {cfg.task!r}, expected a baseline task")
    primary_link = cfg.task == BASELINE_LINK
    prob = _Problem(g, node_split, link_split)
    rng = Rng(cfg.seed)
    theta, phi, psi = _init_triple(g, cfg, rng.spawn(0), initial)
    vclub_rng = rng.spawn(1)

    adam_theta = AdamState.for_params([theta.w0, theta.w1], lr=cfg.lr3)
    if primary_link:
        adam_primary = AdamState.for_params([phi.wb], lr=cfg.lr1)
    else:
        adam_primary = AdamState.for_params([psi.wc], lr=cfg.lr1)

    records = []
    best_round, best_metric = 0, -math.inf
    best_theta, best_head = None, None
    for r in range(cfg.rounds):
        loss_start = 0.0
        for i in range(cfg.inner_steps):
            tape = Tape()
            th = EncoderParams(w0=tape.parameter(theta.w0), w1=tape.parameter(theta.w1))
            z = encode(th, prob.ahat, prob.x)
            if primary_link:
                head = PredictorParams(wb=tape.parameter(phi.wb))
                loss = prob.link_loss(head, z)
            else:
                head = ClassifierParams(wc=tape.parameter(psi.wc))
                loss = prob.node_loss(head, z)
            _check_finite(loss.item(), r, "primary CE")
            if i == 0:
                loss_start = loss.item()
            grads = backward(tape, loss)
            head_param = head.wb if primary_link else head.wc
            new_head = adam_step(adam_primary, [head_param.value], [grads[head_param]])
            new_w = adam_step(adam_theta, [theta.w0, theta.w1],
                              [grads[th.w0], grads[th.w1]])
            if primary_link:
                phi = PredictorParams(wb=new_head[0])
            else:
                psi = ClassifierParams(wc=new_head[0])
            theta = EncoderParams(w0=new_w[0], w1=new_w[1])

        z_eval = encode(theta, prob.ahat, prob.x)
        link_metric = prob.val_link_auc(phi, z_eval)
        node_metric = prob.val_node_acc(psi, z_eval)
        # the attack head is still at initialization during phase 1; its
        # CE is recorded as a diagnostic only
        if primary_link:
            priv_loss = node_ce_from_z(psi, z_eval, node_split.train, prob.labels)
            mi = vclub_node_estimate(psi, z_eval, node_split.val, prob.labels, rng=vclub_rng)
            rec = TraceRecord(loss_start, priv_loss, link_metric, node_metric, mi)
            val_primary = link_metric
        else:
            priv_loss = link_ce_from_z(phi, z_eval, prob.train_pairs, prob.train_targets)
            mi = vclub_link_estimate(phi, z_eval, prob.val_pairs, prob.val_targets,
                                     rng=vclub_rng)
            rec = TraceRecord(loss_start, priv_loss, node_metric, link_metric, mi)
            val_primary = node_metric
        records.append(rec)
        if val_primary > best_metric:
            best_metric, best_round = val_primary, r
            best_theta = EncoderParams(w0=theta.w0.copy(), w1=theta.w1.copy())
            best_head = (PredictorParams(wb=phi.wb.copy()) if primary_link
                         else ClassifierParams(wc=psi.wc.copy()))

    # phase 2: attack the selected frozen encoder
    theta = best_theta
    if primary_link:
        phi = best_head
    else:
        psi = best_head
    z_frozen = encode(theta, prob.ahat, prob.x)
    if primary_link:
        adam_attack = AdamState.for_params([psi.wc], lr=cfg.lr2)
    else:
        adam_attack = AdamState.for_params([phi.wb], lr=cfg.lr2)

    best_attack_metric, best_attack = -math.inf, None
    for r in range(cfg.rounds):
        for i in range(cfg.inner_steps):
            tape = Tape()
            if primary_link:
                attack = ClassifierParams(wc=tape.parameter(psi.wc))
                loss = prob.node_loss(attack, z_frozen)
                attack_param = attack.wc
            else:
                attack = PredictorParams(wb=tape.parameter(phi.wb))
                loss = prob.link_loss(attack, z_frozen)
                attack_param = attack.wb
            _check_finite(loss.item(), r, "attack CE")
            grads = backward(tape, loss)
            new_p = adam_step(adam_attack, [attack_param.value], [grads[attack_param]])
            if primary_link:
                psi = ClassifierParams(wc=new_p[0])
            else:
                phi = PredictorParams(wb=new_p[0])
        if primary_link:
            attack_metric = prob.val_node_acc(psi, z_frozen)
        else:
            attack_metric = prob.val_link_auc(phi, z_frozen)
        if attack_metric > best_attack_metric:
            best_attack_metric = attack_metric
            best_attack = (ClassifierParams(wc=psi.wc.copy()) if primary_link
                           else PredictorParams(wb=phi.wb.copy()))

    state = ModelState(theta=theta, phi=phi, psi=psi, adam_theta=adam_theta,
                       adam_phi=adam_primary if primary_link else adam_attack,
                       adam_psi=adam_attack if primary_link else adam_primary)
    if primary_link:
        best_state = ModelState(theta=EncoderParams(w0=theta.w0.copy(), w1=theta.w1.copy()),
                                phi=best_head, psi=best_attack,
                                adam_theta=_copy_adam(adam_theta),
                                adam_phi=_copy_adam(adam_primary),
                                adam_psi=_copy_adam(adam_attack))
    else:
        best_state = ModelState(theta=EncoderParams(w0=theta.w0.copy(), w1=theta.w1.copy()),
                                phi=best_attack, psi=best_head,
                                adam_theta=_copy_adam(adam_theta),
                                adam_phi=_copy_adam(adam_attack),
                                adam_psi=_copy_adam(adam_primary))
    return TrainResult(state=state, trace=TrainTrace(records),
                       best_state=best_state, best_round=best_round)
