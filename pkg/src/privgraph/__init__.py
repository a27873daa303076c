"""Privacy-preserving graph representation learning.

A GCN-style encoder is trained so that a primary task (link prediction
or node classification) stays accurate while the complementary task,
treated as a privacy attack on the embeddings, degrades toward random
guessing. The trade-off is steered by a single weight in [0, 1].
"""

__version__ = "0.1.0"
