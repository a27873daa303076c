"""Config-file driven experiment harness.

A config is a flat text file of ``key = value`` lines; ``#`` starts a
comment and blank lines are ignored. Exactly one graph source must be
given: ``dataset`` (a directory holding edges.tsv / features.csv /
labels.csv) or the ``sbm_*`` family for a generated planted-block graph.

Per master seed s the harness draws the node split from sub-seed
mix_seed(s, 1), the link split from mix_seed(s, 2), and hands s itself
to the trainer (which derives its own init and diagnostic streams), so
every row of the results table is reproducible in isolation.

Results append to ``out_dir/results.csv`` with the fixed header
dataset,method,problem,lambda,seed,primary_metric,privacy_metric,
rand_node,rand_link,seconds. A lambda sweep additionally rewrites
``out_dir/curve.csv`` holding per-lambda seed means.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .checkpoint import save_checkpoint
from .graphdata import Graph, SbmSpec, gen_sbm, load_graph, normalized_adjacency, split_links, split_nodes
from .metrics import random_baselines
from .models import encode
from .numkit import Rng, mix_seed
from .trainer import (
    BASELINE_LINK,
    BASELINE_NODE,
    PROBLEM1,
    PROBLEM2,
    TASKS,
    DivergenceError,
    TrainConfig,
    link_auc,
    node_accuracy,
    train_baseline,
    train_problem1,
    train_problem2,
)

CSV_HEADER = ("dataset,method,problem,lambda,seed,primary_metric,privacy_metric,"
              "rand_node,rand_link,seconds")
CURVE_HEADER = "lambda,mean_primary,mean_privacy"

_SBM_KEYS = ("sbm_blocks", "sbm_nodes_per_block", "sbm_p_in", "sbm_p_out")

_DEFAULTS = {
    "lambda": "0.5",
    "lr1": "0.01",
    "lr2": "0.01",
    "lr3": "0.01",
    "inner_steps": "1",
    "rounds": "200",
    "hidden_dim": "64",
    "embed_dim": "16",
    "nodes_per_class": "20",
    "val_nodes": "500",
    "test_nodes": "1000",
    "link_train_frac": "0.85",
    "link_val_frac": "0.05",
    "sbm_noise": "0.1",
    "sbm_seed": "7",
    "save_checkpoints": "true",
}

_KNOWN_KEYS = (set(_DEFAULTS) | set(_SBM_KEYS)
               | {"task", "dataset", "dataset_name", "seeds", "out_dir"})


class ConfigError(ValueError):
    """A config file is malformed or fails validation."""


def parse_config_text(text: str, where: str = "<config>") -> dict:
    """Flat key=value grammar; later duplicates are rejected, not merged."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{where}:{lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{where}:{lineno}: empty key or value in {raw!r}")
        if key in pairs:
            raise ConfigError(f"{where}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _parse_float(pairs, key, where):
    try:
        return float(pairs[key])
    except ValueError:
        raise ConfigError(f"{where}: {key} must be a number, got {pairs[key]!r}") from None


def _parse_int(pairs, key, where):
    try:
        return int(pairs[key])
    except ValueError:
        raise ConfigError(f"{where}: {key} must be an integer, got {pairs[key]!r}") from None


def _parse_bool(pairs, key, where):
    value = pairs[key].lower()
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise ConfigError(f"{where}: {key} must be true/false, got {pairs[key]!r}")


@dataclass
class ExperimentConfig:
    """Validated harness settings for one run or sweep invocation."""

    task: str
    seeds: list
    out_dir: str
    dataset: str | None = None
    sbm: SbmSpec | None = None
    sbm_seed: int = 7
    dataset_name: str = ""
    lam: float = 0.5
    lr1: float = 0.01
    lr2: float = 0.01
    lr3: float = 0.01
    inner_steps: int = 1
    rounds: int = 200
    hidden_dim: int = 64
    embed_dim: int = 16
    nodes_per_class: int = 20
    val_nodes: int = 500
    test_nodes: int = 1000
    link_train_frac: float = 0.85
    link_val_frac: float = 0.05
    save_checkpoints: bool = True
    source: str = field(default="<config>", repr=False)

    @classmethod
    def from_pairs(cls, pairs: dict, where: str = "<config>") -> "ExperimentConfig":
        unknown = sorted(set(pairs) - _KNOWN_KEYS)
        if unknown:
            raise ConfigError(f"{where}: unknown keys {', '.join(unknown)}")
        for key in ("task", "seeds", "out_dir"):
            if key not in pairs:
                raise ConfigError(f"{where}: missing required key {key!r}")
        merged = dict(_DEFAULTS)
        merged.update(pairs)

        task = merged["task"]
        if task not in TASKS:
            raise ConfigError(f"{where}: unknown task {task!r}, expected one of {TASKS}")

        try:
            seeds = [int(s) for s in merged["seeds"].split(",") if s.strip() != ""]
        except ValueError:
            raise ConfigError(f"{where}: seeds must be a comma list of integers, "
                              f"got {merged['seeds']!r}") from None
        if not seeds:
            raise ConfigError(f"{where}: seed list is empty")

        has_dataset = "dataset" in pairs
        has_sbm = any(key in pairs for key in _SBM_KEYS)
        if has_dataset == has_sbm:
            raise ConfigError(f"{where}: set exactly one graph source, either "
                              f"dataset= or the sbm_* keys")
        sbm = None
        if has_sbm:
            missing = [key for key in _SBM_KEYS if key not in pairs]
            if missing:
                raise ConfigError(f"{where}: missing {', '.join(missing)}")
            try:
                sbm = SbmSpec(blocks=_parse_int(merged, "sbm_blocks", where),
                              nodes_per_block=_parse_int(merged, "sbm_nodes_per_block", where),
                              p_in=_parse_float(merged, "sbm_p_in", where),
                              p_out=_parse_float(merged, "sbm_p_out", where),
                              noise=_parse_float(merged, "sbm_noise", where))
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from None

        name = merged.get("dataset_name", "")
        if not name:
            name = Path(merged["dataset"]).name if has_dataset else "sbm"

        cfg = cls(task=task, seeds=seeds, out_dir=merged["out_dir"],
                  dataset=merged.get("dataset") if has_dataset else None,
                  sbm=sbm, sbm_seed=_parse_int(merged, "sbm_seed", where),
                  dataset_name=name,
                  lam=_parse_float(merged, "lambda", where),
                  lr1=_parse_float(merged, "lr1", where),
                  lr2=_parse_float(merged, "lr2", where),
                  lr3=_parse_float(merged, "lr3", where),
                  inner_steps=_parse_int(merged, "inner_steps", where),
                  rounds=_parse_int(merged, "rounds", where),
                  hidden_dim=_parse_int(merged, "hidden_dim", where),
                  embed_dim=_parse_int(merged, "embed_dim", where),
                  nodes_per_class=_parse_int(merged, "nodes_per_class", where),
                  val_nodes=_parse_int(merged, "val_nodes", where),
                  test_nodes=_parse_int(merged, "test_nodes", where),
                  link_train_frac=_parse_float(merged, "link_train_frac", where),
                  link_val_frac=_parse_float(merged, "link_val_frac", where),
                  save_checkpoints=_parse_bool(merged, "save_checkpoints", where),
                  source=where)
        cfg._check_train_config(where)
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        return cls.from_pairs(parse_config_text(p.read_text(), str(p)), str(p))

    def _check_train_config(self, where: str):
        try:
            self.train_config(self.lam, self.seeds[0])
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None

    def train_config(self, lam: float, seed: int) -> TrainConfig:
        return TrainConfig(task=self.task, lam=lam, lr1=self.lr1, lr2=self.lr2,
                           lr3=self.lr3, inner_steps=self.inner_steps,
                           rounds=self.rounds, hidden_dim=self.hidden_dim,
                           embed_dim=self.embed_dim, seed=seed)

    def build_graph(self) -> Graph:
        if self.dataset is not None:
            return load_graph(self.dataset)
        return gen_sbm(self.sbm, Rng(self.sbm_seed))


_TRAINERS = {PROBLEM1: train_problem1, PROBLEM2: train_problem2,
             BASELINE_LINK: train_baseline, BASELINE_NODE: train_baseline}


def run_single(g: Graph, ecfg: ExperimentConfig, lam: float, seed: int) -> dict:
    """Train one (lambda, seed) cell and evaluate it on the test splits."""
    start = time.perf_counter()
    ns = split_nodes(g, per_class=ecfg.nodes_per_class, n_val=ecfg.val_nodes,
                     n_test=ecfg.test_nodes, rng=Rng(mix_seed(seed, 1)))
    ls = split_links(g, train_frac=ecfg.link_train_frac,
                     val_frac=ecfg.link_val_frac, rng=Rng(mix_seed(seed, 2)))
    cfg = ecfg.train_config(lam, seed)
    run_name = f"{ecfg.dataset_name}/{ecfg.task}/lambda={lam:g}/seed={seed}"
    try:
        result = _TRAINERS[ecfg.task](g, ns, ls, cfg)
    except DivergenceError as exc:
        raise DivergenceError(exc.round_index, f"{run_name}: {exc}") from None

    best = result.best_state
    ahat = normalized_adjacency(g, edges=ls.train_pos)
    z = encode(best.theta, ahat, g.features)
    link_metric = link_auc(best.phi, z, ls.test_pos, ls.test_neg)
    node_metric = node_accuracy(best.psi, z, ns.test, g.labels)
    problem = 1 if ecfg.task in (PROBLEM1, BASELINE_LINK) else 2
    if problem == 1:
        primary, privacy = link_metric, node_metric
    else:
        primary, privacy = node_metric, link_metric
    rand_node, rand_link = random_baselines(g.num_classes)
    method = "protected" if ecfg.task in (PROBLEM1, PROBLEM2) else "baseline"

    if ecfg.save_checkpoints:
        out = Path(ecfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        ckpt = out / f"ckpt_{ecfg.dataset_name}_{ecfg.task}_lam{lam:g}_seed{seed}.txt"
        save_checkpoint(ckpt, best)

    return {"dataset": ecfg.dataset_name, "method": method, "problem": problem,
            "lambda": lam, "seed": seed, "primary_metric": primary,
            "privacy_metric": privacy, "rand_node": rand_node,
            "rand_link": rand_link, "seconds": time.perf_counter() - start}


def format_row(row: dict) -> str:
    return ",".join([row["dataset"], row["method"], str(row["problem"]),
                     f"{row['lambda']:.17g}", str(row["seed"]),
                     f"{row['primary_metric']:.17g}", f"{row['privacy_metric']:.17g}",
                     f"{row['rand_node']:.17g}", f"{row['rand_link']:.17g}",
                     f"{row['seconds']:.3f}"])


def _append_rows(out_dir, rows) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "results.csv"
    fresh = not path.exists()
    with open(path, "a") as f:
        if fresh:
            f.write(CSV_HEADER + "\n")
        for row in rows:
            f.write(format_row(row) + "\n")
    return path


def _worker_count() -> int:
    raw = os.environ.get("PRIVGRAPH_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f"PRIVGRAPH_THREADS must be a positive integer, got {raw!r}") from None
    if count < 1:
        raise ConfigError(f"PRIVGRAPH_THREADS must be a positive integer, got {raw!r}")
    return count


def _run_cells(g: Graph, ecfg: ExperimentConfig, cells) -> list:
    """Run (lambda, seed) cells, possibly concurrently; row order always
    follows the cell order, never completion order."""
    workers = _worker_count()
    if workers == 1:
        return [run_single(g, ecfg, lam, seed) for lam, seed in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_single, g, ecfg, lam, seed) for lam, seed in cells]
        return [f.result() for f in futures]


def run_experiments(ecfg: ExperimentConfig) -> list:
    """One row per seed at the config's lambda; appends to results.csv."""
    g = ecfg.build_graph()
    rows = _run_cells(g, ecfg, [(ecfg.lam, seed) for seed in ecfg.seeds])
    _append_rows(ecfg.out_dir, rows)
    return rows


def _check_grid(grid) -> list:
    values = list(grid)
    if not values:
        raise ConfigError("lambda grid is empty")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"lambda grid value {v!r} outside [0, 1]")
    if sorted(set(values)) != values:
        raise ConfigError(f"lambda grid must be sorted and duplicate-free, got {values}")
    return values


def sweep_lambda(ecfg: ExperimentConfig, grid) -> tuple:
    """Run every (lambda, seed) cell of the grid, append the rows, and
    rewrite curve.csv with per-lambda means over seeds."""
    values = _check_grid(grid)
    g = ecfg.build_graph()
    cells = [(lam, seed) for lam in values for seed in ecfg.seeds]
    rows = _run_cells(g, ecfg, cells)
    _append_rows(ecfg.out_dir, rows)

    lines = [CURVE_HEADER]
    for lam in values:
        group = [row for row in rows if row["lambda"] == lam]
        mean_primary = sum(r["primary_metric"] for r in group) / len(group)
        mean_privacy = sum(r["privacy_metric"] for r in group) / len(group)
        lines.append(f"{lam:.17g},{mean_primary:.17g},{mean_privacy:.17g}")
    curve = Path(ecfg.out_dir) / "curve.csv"
    curve.write_text("\n".join(lines) + "\n")
    return rows, curve


def evaluate_checkpoint(theta, phi, psi, g: Graph, seed: int = 0) -> dict:
    """Whole-graph metrics for a restored model: classifier accuracy over
    all nodes, link AUC of all edges against an equal number of sampled
    non-edges (sub-seed 3 of ``seed``)."""
    from .graphdata import _sample_negatives, edge_key_set

    if g.feature_dim != theta.w0.shape[0]:
        raise ConfigError(f"checkpoint expects {theta.w0.shape[0]} features, "
                          f"dataset has {g.feature_dim}")
    if g.num_classes != psi.wc.shape[1]:
        raise ConfigError(f"checkpoint expects {psi.wc.shape[1]} classes, "
                          f"dataset has {g.num_classes}")
    ahat = normalized_adjacency(g)
    z = encode(theta, ahat, g.features)
    forbidden = edge_key_set(g.num_nodes, g.edges)
    neg = _sample_negatives(g.num_nodes, forbidden, g.num_edges, Rng(mix_seed(seed, 3)))
    rand_node, rand_link = random_baselines(g.num_classes)
    return {"node_accuracy": node_accuracy(psi, z, list(range(g.num_nodes)), g.labels),
            "link_auc": link_auc(phi, z, g.edges, neg),
            "rand_node": rand_node, "rand_link": rand_link}
