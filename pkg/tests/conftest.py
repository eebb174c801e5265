"""Shared test helpers: independent oracles that never touch the
package's scoring path.

The reference family score is the sequential predictive product of the
Dirichlet-multinomial (Polya urn): multiplying one-step-ahead
predictive probabilities row by row gives exactly the marginal
likelihood, without any log-gamma call.
"""

import itertools
import math
from collections import defaultdict

import numpy as np
import pytest


def predictive_log_score(rows, arities, child, parents, ess):
    """Reference BDeu log marginal likelihood via the predictive product."""
    parents = tuple(parents)
    r = int(arities[child])
    q = 1
    for p in parents:
        q *= int(arities[p])
    a_ux = ess / (r * q)
    a_u = ess / q
    cell = defaultdict(int)
    config = defaultdict(int)
    total = 0.0
    for row in np.asarray(rows):
        u = 0
        place = 1
        for p in parents:
            u += int(row[p]) * place
            place *= int(arities[p])
        x = int(row[child])
        total += math.log((a_ux + cell[(u, x)]) / (a_u + config[u]))
        cell[(u, x)] += 1
        config[u] += 1
    return total


def oracle_log_weight(rows, arities, child, parents, ess):
    """Reference prior-weighted family log weight."""
    n = len(arities)
    rho = -math.log(math.comb(n - 1, len(parents)))
    return rho + predictive_log_score(rows, arities, child, parents, ess)


def consistent_assignments(order, k):
    """Every consistent parent-set assignment for an ordering, as a
    dict node -> parents tuple."""
    per_node = []
    for pos, i in enumerate(order):
        preds = sorted(int(order[t]) for t in range(pos))
        fams = []
        for size in range(0, min(k, len(preds)) + 1):
            fams.extend(itertools.combinations(preds, size))
        per_node.append((int(i), fams))
    for combo in itertools.product(*(f for _, f in per_node)):
        yield {i: parents for (i, _), parents in zip(per_node, combo)}


def brute_order_log_marginal(rows, arities, order, k, ess):
    """Reference log sum over all order-consistent DAGs of prior*score."""
    weights = []
    memo = {}

    def w(i, parents):
        key = (i, parents)
        if key not in memo:
            memo[key] = oracle_log_weight(rows, arities, i, parents, ess)
        return memo[key]

    for assignment in consistent_assignments(order, k):
        weights.append(sum(w(i, ps) for i, ps in assignment.items()))
    m = max(weights)
    return m + math.log(sum(math.exp(x - m) for x in weights))


def brute_conditionals(rows, arities, order, k, ess):
    """Per-ordering conditional feature expectations by direct enumeration.

    Returns (assignments, normalized weights) so tests can average any
    indicator by hand.
    """
    assignments = list(consistent_assignments(order, k))
    memo = {}

    def w(i, parents):
        key = (i, parents)
        if key not in memo:
            memo[key] = oracle_log_weight(rows, arities, i, parents, ess)
        return memo[key]

    logws = np.asarray(
        [sum(w(i, ps) for i, ps in a.items()) for a in assignments]
    )
    probs = np.exp(logws - logws.max())
    probs /= probs.sum()
    return assignments, probs


def in_markov_blanket(assignment, i, j):
    if i in assignment[j] or j in assignment[i]:
        return True
    return any(i in ps and j in ps for ps in assignment.values())


def has_directed_path(assignment, src, dst):
    """Path src ~> dst in a parent-set assignment."""
    children = defaultdict(list)
    for c, ps in assignment.items():
        for p in ps:
            children[p].append(c)
    seen = set()
    frontier = [src]
    while frontier:
        node = frontier.pop()
        for nxt in children[node]:
            if nxt == dst:
                return True
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return False


def all_digraph_parent_sets(n, k):
    """Every function node -> parent subset (|.| <= k), acyclic or not."""
    subsets = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        fams = []
        for size in range(0, min(k, len(others)) + 1):
            fams.extend(itertools.combinations(others, size))
        subsets.append(fams)
    yield from itertools.product(*subsets)


def is_acyclic_parent_sets(parent_sets):
    """Independent acyclicity filter (Kahn-style elimination)."""
    n = len(parent_sets)
    remaining = set(range(n))
    placed = set()
    while remaining:
        ready = [i for i in remaining if placed.issuperset(parent_sets[i])]
        if not ready:
            return False
        placed.update(ready)
        remaining.difference_update(ready)
    return True


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
