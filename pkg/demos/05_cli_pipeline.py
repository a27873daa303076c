"""The full command-line workflow in one script: generate a dataset,
run a protected experiment from a config file, sweep the trade-off grid,
and re-evaluate a saved checkpoint."""

import tempfile
from pathlib import Path

from privgraph.cli import main

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    data, out, cfg = root / "data", root / "out", root / "config.txt"

    print("$ privgraph gen-synth data --blocks 2 --nodes-per-block 60 "
          "--p-in 0.4 --p-out 0.05 --seed 3")
    assert main(["gen-synth", str(data), "--blocks", "2", "--nodes-per-block",
                 "60", "--p-in", "0.4", "--p-out", "0.05", "--seed", "3"]) == 0

    cfg.write_text(f"""\
# protected node classification, links private
task = problem2
dataset = {data}
dataset_name = demo
seeds = 1,2
out_dir = {out}
rounds = 40
nodes_per_class = 10
val_nodes = 24
test_nodes = 40
""")
    print(f"\n$ privgraph run {cfg.name}")
    assert main(["run", str(cfg)]) == 0

    print(f"\n$ privgraph sweep {cfg.name} --lambdas 0,0.5,1")
    assert main(["sweep", str(cfg), "--lambdas", "0,0.5,1"]) == 0
    print("\ncurve.csv:")
    print((out / "curve.csv").read_text(), end="")

    ckpt = out / "ckpt_demo_problem2_lam0.5_seed1.txt"
    print(f"\n$ privgraph eval {ckpt.name} data")
    assert main(["eval", str(ckpt), str(data)]) == 0
