"""Tape autodiff in one sitting: record a loss, check one gradient
coordinate against a finite difference, then descend with Adam."""

import numpy as np

from privgraph.numkit import AdamState, Rng, Tape, adam_step, backward, matmul, relu, softmax_ce_loss

rng = Rng(0)
x = rng.uniform(-1, 1, (12, 4))
labels = rng.integers(12, 3)
w = rng.uniform(-1, 1, (4, 3))


def loss_at(weights):
    tape = Tape()
    p = tape.parameter(weights)
    out = softmax_ce_loss(relu(matmul(x, p)), labels)
    return tape, p, out


tape, p, out = loss_at(w)
grad = backward(tape, out)[p]

h = 1e-5
bumped = w.copy()
bumped[1, 2] += h
plus = loss_at(bumped)[2].item()
bumped[1, 2] -= 2 * h
minus = loss_at(bumped)[2].item()
numeric = (plus - minus) / (2 * h)
print(f"analytic d loss / d w[1,2] = {grad[1, 2]:+.8f}")
print(f"numeric  d loss / d w[1,2] = {numeric:+.8f}")

adam = AdamState.for_params([w], lr=0.05)
for step in range(60):
    tape, p, out = loss_at(w)
    if step % 15 == 0:
        print(f"step {step:2d}: loss {out.item():.4f}")
    w = adam_step(adam, [w], [backward(tape, out)[p]])[0]
print(f"final   : loss {loss_at(w)[2].item():.4f}")
