"""Greedy hill-climbing model selection and the bootstrap baseline."""

from __future__ import annotations

import numpy as np

from .dag import Dag
from .data import Dataset
from .features import FeaturePosteriorTable
from .scoring import FamilyCache, ScoreParams, build_family_cache
from .structure_mcmc import _apply_move, _legal_moves, _masks_from_tuples

_KIND_RANK = {"add": 0, "delete": 1, "reverse": 2}


def _climb(ptuples, cache: FamilyCache):
    """Apply the best improving move until none improves. Returns the
    local optimum and its total log weight."""
    node_w = [cache.log_weight(i, ps) for i, ps in enumerate(ptuples)]
    while True:
        moves = _legal_moves(_masks_from_tuples(ptuples), cache)
        best_delta = 0.0
        best_move = None
        best_key = None
        for move in moves:
            cand = list(ptuples)
            affected = _apply_move(cand, move)
            delta = sum(cache.log_weight(i, cand[i]) - node_w[i] for i in affected)
            key = (move[2], move[1], _KIND_RANK[move[0]])
            if delta > best_delta + 1e-12 or (
                best_move is not None and abs(delta - best_delta) <= 1e-12 and key < best_key
            ):
                best_delta = delta
                best_move = move
                best_key = key
        if best_move is None:
            return ptuples, float(sum(node_w))
        affected = _apply_move(ptuples, best_move)
        for i in affected:
            node_w[i] = cache.log_weight(i, ptuples[i])


def _random_start(cache: FamilyCache, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Random DAG respecting the indegree bound and candidate pools."""
    n = cache.n
    k = cache.params.k
    order = rng.permutation(n)
    ptuples: list[tuple[int, ...]] = [() for _ in range(n)]
    for t in range(n):
        i = int(order[t])
        allowed = [int(c) for c in cache.candidates[i] if int(np.flatnonzero(order == c)[0]) < t]
        if not allowed:
            continue
        size = int(rng.integers(0, min(k, len(allowed)) + 1))
        if size:
            chosen = rng.choice(len(allowed), size=size, replace=False)
            ptuples[i] = tuple(sorted(allowed[s] for s in chosen))
    return ptuples


def greedy_hill_climb(
    cache: FamilyCache,
    seed_graph: Dag | None = None,
    restarts: int = 1,
    seed=0,
) -> Dag:
    """Best local optimum of the prior-weighted score under
    add/delete/reverse moves.

    The first climb starts from seed_graph (or the empty graph); extra
    restarts climb from random legal graphs. Ties between equally
    improving moves go to the lowest (child, parent, kind) tuple.
    """
    if restarts < 1:
        raise ValueError("need at least one climb")
    rng = np.random.default_rng(seed)
    n = cache.n
    if seed_graph is not None:
        if seed_graph.n != n:
            raise ValueError("seed graph has the wrong number of nodes")
        start = list(seed_graph.parent_sets)
    else:
        start = [() for _ in range(n)]
    best_tuples, best_score = _climb(start, cache)
    for _ in range(restarts - 1):
        tuples, score = _climb(_random_start(cache, rng), cache)
        if score > best_score + 1e-12:
            best_tuples, best_score = tuples, score
    return Dag(n, best_tuples, _checked=True)


def bootstrap_confidence(
    d: Dataset,
    params: ScoreParams,
    num_replicates: int = 100,
    seed=0,
    kind: str = "markov",
    *,
    m_p: int = 20,
    m_f: int | None = 4000,
    gamma_bits: float = 10.0,
) -> FeaturePosteriorTable:
    """Nonparametric bootstrap confidence for structural features.

    Each replicate resamples the rows with replacement, rebuilds the
    score cache, runs a greedy hill climb from the empty graph, and
    records which features the resulting DAG contains. The table entry
    is the fraction of replicates containing the feature.
    """
    if num_replicates < 1:
        raise ValueError("need at least one replicate")
    rng = np.random.default_rng(seed)
    n = d.n
    acc = np.zeros((n, n))
    for _ in range(num_replicates):
        idx = rng.integers(0, d.num_rows, size=d.num_rows)
        boot = Dataset(names=d.names, arities=d.arities.copy(), rows=d.rows[idx])
        cache = build_family_cache(boot, params, m_p=m_p, m_f=m_f, gamma_bits=gamma_bits)
        g = greedy_hill_climb(cache)
        if kind == "edge":
            acc += g.adjacency()
        elif kind == "markov":
            acc += g.moral_adjacency()
        elif kind == "path":
            acc += g.reachability()
        else:
            raise ValueError(f"unknown feature kind {kind!r}")
    est = acc / num_replicates
    meta = {"estimator": "bootstrap", "n_samples": num_replicates}
    return FeaturePosteriorTable(kind=kind, names=d.names, estimates=est, meta=meta)
