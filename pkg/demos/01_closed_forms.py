#!/usr/bin/env python3
"""Closed-form sums over all networks consistent with one ordering.

Fixing a variable ordering turns the intractable sum over network
structures into a per-node product of family sums. This demo builds a
tiny dataset with one strong dependency, computes the per-ordering
marginal and feature posteriors in closed form, and checks them
against an explicit enumeration of every consistent network.
"""

import itertools
import math

import numpy as np

from bnposterior import (
    Dataset,
    OrderScoreState,
    ScoreParams,
    edge_posterior,
    family_posterior,
    markov_posterior,
)
from bnposterior.scoring import oracle_cache

rng = np.random.default_rng(0)
m = 80
x = rng.integers(0, 2, m)
y = x ^ (rng.random(m) < 0.1)   # Y is a noisy copy of X
z = rng.integers(0, 2, m)       # Z is independent noise
data = Dataset(names=("X", "Y", "Z"), arities=[2, 2, 2], rows=np.column_stack([x, y, z]))

params = ScoreParams(ess=1.0, k=2, n=3)
cache = oracle_cache(data, params)

order = np.array([0, 2, 1])  # X first, then Z, then Y
state = OrderScoreState.build(cache, order)

print("ordering:", " < ".join(data.names[i] for i in order))
print(f"log marginal of the data given this ordering: {state.total:.4f} nats")

# explicit check: enumerate every parent-set combination consistent
# with the ordering and sum the weights directly
total = 0.0
for fams in itertools.product(
    *[
        [
            sub
            for size in range(0, min(2, pos) + 1)
            for sub in itertools.combinations(sorted(order[:pos]), size)
        ]
        for pos, _ in enumerate(order)
    ]
):
    lw = sum(cache.log_weight(int(node), parents) for node, parents in zip(order, fams))
    total += math.exp(lw)
print(f"explicit sum over all {3 * 1 * 7} consistent networks: {math.log(total):.4f} nats")

print()
print("edge posteriors given the ordering (rows: parent, cols: child):")
mat = state.edge_matrix()
print("      " + "  ".join(f"{nm:>6}" for nm in data.names))
for i, nm in enumerate(data.names):
    print(f"{nm:>6}" + "  ".join(f"{mat[i, j]:6.3f}" for j in range(3)))

print()
print(f"P(X -> Y | ordering, data)         = {edge_posterior(0, 1, state):.4f}")
print(f"P(X in Markov blanket of Y | ...)  = {markov_posterior(0, 1, state):.4f}")
print(f"P(Z in Markov blanket of Y | ...)  = {markov_posterior(2, 1, state):.4f}")
print(f"P(Pa(Y) = {{X}} | ...)              = {family_posterior(1, (0,), state):.4f}")
print(f"P(Pa(Y) = {{X, Z}} | ...)           = {family_posterior(1, (0, 2), state):.4f}")
print()
print("The X-Y dependency dominates; Z stays irrelevant, as constructed.")
