"""Train an ordinary link-prediction model on a planted-block graph and
watch a post-hoc classifier read the private labels straight out of the
embeddings. Nothing is defended here; this is the leakage being attacked
by the adversarial trainers in the next demo."""

from privgraph.graphdata import SbmSpec, gen_sbm, normalized_adjacency, split_links, split_nodes
from privgraph.models import encode
from privgraph.numkit import Rng
from privgraph.trainer import TrainConfig, link_auc, node_accuracy, train_baseline

g = gen_sbm(SbmSpec(4, 50, 0.35, 0.02, noise=0.1), Rng(5))
ns = split_nodes(g, per_class=10, n_val=40, n_test=80, rng=Rng(6))
ls = split_links(g, rng=Rng(7))
print(f"graph: {g.num_nodes} nodes, {g.num_edges} edges, {g.num_classes} blocks")

res = train_baseline(g, ns, ls, TrainConfig(task="baseline_link", seed=0))
best = res.best_state
ahat = normalized_adjacency(g, edges=ls.train_pos)
z = encode(best.theta, ahat, g.features)

print(f"selected round    : {res.best_round}")
print(f"link AUC (test)   : {link_auc(best.phi, z, ls.test_pos, ls.test_neg):.4f}")
print(f"attack acc (test) : {node_accuracy(best.psi, z, ns.test, g.labels):.4f}"
      f"  vs random {1.0 / g.num_classes:.4f}")
print("the embeddings were trained for links only, yet the label attack"
      " is nearly perfect: representations overshare.")
