"""Sweep the trade-off weight through the experiment harness and print
the seed-averaged curve. The graph is a 2-block SBM whose features bury
the block signal under heavy noise, so node classification is learnable
but slow; that exposes both limits of the trade-off on one curve.

15 training runs; takes about a minute.
"""

import tempfile
from pathlib import Path

from privgraph.experiment import ExperimentConfig, sweep_lambda

with tempfile.TemporaryDirectory() as tmp:
    ecfg = ExperimentConfig.from_pairs({
        "task": "problem2",
        "sbm_blocks": "2", "sbm_nodes_per_block": "250",
        "sbm_p_in": "0.10", "sbm_p_out": "0.01",
        "sbm_noise": "15.0", "sbm_seed": "7",
        "seeds": "1,2,3",
        "nodes_per_class": "20", "val_nodes": "150", "test_nodes": "250",
        "out_dir": str(Path(tmp) / "out"),
        "save_checkpoints": "false",
    })
    rows, curve = sweep_lambda(ecfg, [0.0, 0.3, 0.5, 0.7, 1.0])
    print(f"{len(rows)} runs -> {curve}")
    print("\nlambda  mean node acc  mean link-attack AUC")
    for line in curve.read_text().splitlines()[1:]:
        lam, primary, privacy = (float(x) for x in line.split(","))
        print(f"{lam:6.1f}  {primary:13.4f}  {privacy:19.4f}")
    print("\nlambda=1 ignores privacy: the task recovers its unprotected"
          "\naccuracy and the attack climbs above chance. Every other"
          "\nlambda pins the attack at 0.5, and on a signal this buried even"
          "\nmild adversary pressure costs real accuracy; the balanced middle"
          "\nof demos 02/03 needs a graph with more task signal to spare.")
