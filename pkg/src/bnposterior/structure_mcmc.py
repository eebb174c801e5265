"""Baseline Metropolis sampler directly over DAG structures.

Moves are single-edge additions, deletions, and reversals, proposed
uniformly from the legal set, with the Hastings correction for the
differing neighborhood sizes. The same candidate-parent restriction
used by the ordering sampler applies, so the two samplers explore the
same restricted space. Used mainly for mixing comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dag import Dag
from .features import FeaturePosteriorTable, McmcTraceRecord
from .scoring import FamilyCache

Move = tuple[str, int, int]  # (kind, parent, child)


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _descendant_masks(child_masks: list[int]) -> list[int]:
    """desc[i] = bitmask of nodes reachable from i along directed edges."""
    n = len(child_masks)
    desc = list(child_masks)
    for _ in range(n):
        changed = False
        for i in range(n):
            m = desc[i]
            acc = m
            mm = m
            while mm:
                b = mm & -mm
                acc |= desc[b.bit_length() - 1]
                mm ^= b
            if acc != m:
                desc[i] = acc
                changed = True
        if not changed:
            break
    return desc


def _child_masks(pmasks: Sequence[int]) -> list[int]:
    n = len(pmasks)
    cm = [0] * n
    for c in range(n):
        m = pmasks[c]
        while m:
            b = m & -m
            cm[b.bit_length() - 1] |= 1 << c
            m ^= b
    return cm


def _reaches(child_masks: list[int], src: int, dst: int, skip_edge: tuple[int, int]) -> bool:
    """Directed path src ~> dst, ignoring the single edge skip_edge."""
    seen = 1 << src
    frontier = [src]
    while frontier:
        node = frontier.pop()
        m = child_masks[node]
        if node == skip_edge[0]:
            m &= ~(1 << skip_edge[1])
        while m:
            b = m & -m
            nxt = b.bit_length() - 1
            if nxt == dst:
                return True
            if not (seen >> nxt) & 1:
                seen |= b
                frontier.append(nxt)
            m ^= b
    return False


def _legal_moves(pmasks: Sequence[int], cache: FamilyCache) -> list[Move]:
    n = len(pmasks)
    k = cache.params.k
    cand = cache.cand_masks
    child_masks = _child_masks(pmasks)
    desc = _descendant_masks(child_masks)
    moves: list[Move] = []
    for c in range(n):
        room = _popcount(pmasks[c]) < k
        for p in range(n):
            if p == c or (pmasks[c] >> p) & 1 or not (cand[c] >> p) & 1:
                continue
            if room and not (desc[c] >> p) & 1:
                moves.append(("add", p, c))
    for c in range(n):
        m = pmasks[c]
        while m:
            b = m & -m
            moves.append(("delete", b.bit_length() - 1, c))
            m ^= b
    for c in range(n):
        m = pmasks[c]
        while m:
            b = m & -m
            p = b.bit_length() - 1
            # reversing p->c makes c a parent of p
            if (cand[p] >> c) & 1 and _popcount(pmasks[p]) < k:
                if not _reaches(child_masks, p, c, skip_edge=(p, c)):
                    moves.append(("reverse", p, c))
            m ^= b
    return moves


def legal_moves(g: Dag, cache: FamilyCache) -> list[Move]:
    """All legal single-edge additions, deletions, and reversals of g.

    Additions and reversals respect acyclicity, the indegree bound, and
    the candidate-parent restriction of the cache.
    """
    pmasks = [sum(1 << p for p in ps) for ps in g.parent_sets]
    return _legal_moves(pmasks, cache)


def _apply_move(ptuples: list[tuple[int, ...]], move: Move) -> list[tuple[int, int]]:
    """Mutate ptuples in place; return the (node, old-parents-index) info
    needed to rescore. Returns list of affected child nodes."""
    kind, p, c = move
    if kind == "add":
        ptuples[c] = tuple(sorted(ptuples[c] + (p,)))
        return [c]
    if kind == "delete":
        ptuples[c] = tuple(x for x in ptuples[c] if x != p)
        return [c]
    ptuples[c] = tuple(x for x in ptuples[c] if x != p)
    ptuples[p] = tuple(sorted(ptuples[p] + (c,)))
    return [c, p]


def _masks_from_tuples(ptuples: Sequence[tuple[int, ...]]) -> list[int]:
    return [sum(1 << p for p in ps) for ps in ptuples]


def structure_step(g: Dag, cache: FamilyCache, rng: np.random.Generator) -> tuple[Dag, bool]:
    """One Metropolis step from g. Returns (new graph, accepted)."""
    ptuples = list(g.parent_sets)
    node_w = [cache.log_weight(i, ps) for i, ps in enumerate(ptuples)]
    moves = _legal_moves(_masks_from_tuples(ptuples), cache)
    new_tuples, _, _, ok, _ = _step(ptuples, node_w, moves, cache, rng)
    return Dag(g.n, new_tuples, _checked=True), ok


def _step(ptuples, node_w, moves, cache, rng):
    """Shared step kernel; mutates nothing, returns new lists.

    `moves` is the legal-move list of the current state, which the
    caller carries between steps (it only changes on acceptance).
    Returns (ptuples', node_w', moves', accepted, kind).
    """
    if not moves:
        return ptuples, node_w, moves, False, "none"
    move = moves[int(rng.integers(len(moves)))]
    cand_tuples = list(ptuples)
    affected = _apply_move(cand_tuples, move)
    delta = 0.0
    cand_w = list(node_w)
    for i in affected:
        w = cache.log_weight(i, cand_tuples[i])
        delta += w - node_w[i]
        cand_w[i] = w
    cand_moves = _legal_moves(_masks_from_tuples(cand_tuples), cache)
    log_accept = delta + math.log(len(moves)) - math.log(len(cand_moves))
    u = rng.random()
    if log_accept >= 0.0 or u < math.exp(log_accept):
        return cand_tuples, cand_w, cand_moves, True, move[0]
    return ptuples, node_w, moves, False, move[0]


@dataclass(frozen=True)
class StructureMcmcConfig:
    burn_in: int = 100_000
    thin: int = 25_000
    n_samples: int = 50
    seed: int = 0
    init: object = "empty"  # "empty" or a Dag
    feature_kind: str = "markov"

    def __post_init__(self):
        if self.thin < 1 or self.n_samples < 1 or self.burn_in < 0:
            raise ValueError("bad chain length configuration")
        if not (self.init == "empty" or isinstance(self.init, Dag)):
            raise ValueError("init must be 'empty' or a Dag")


def run_structure_chain(cache: FamilyCache, config: StructureMcmcConfig):
    """Run the structure sampler; returns (trace, dags, feature table)."""
    rng = np.random.default_rng(config.seed)
    n = cache.n
    if isinstance(config.init, Dag):
        if config.init.n != n:
            raise ValueError("seed graph has the wrong number of nodes")
        ptuples = list(config.init.parent_sets)
    else:
        ptuples = [() for _ in range(n)]
    node_w = [cache.log_weight(i, ps) for i, ps in enumerate(ptuples)]
    moves = _legal_moves(_masks_from_tuples(ptuples), cache)
    trace: list[McmcTraceRecord] = []
    dags: list[Dag] = []
    total_iters = config.burn_in + config.thin * config.n_samples
    for it in range(1, total_iters + 1):
        ptuples, node_w, moves, ok, kind = _step(ptuples, node_w, moves, cache, rng)
        trace.append(McmcTraceRecord(it, float(sum(node_w)), kind, ok))
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
            dags.append(Dag(n, ptuples, _checked=True))
    table = estimate_structure_features(dags, cache.dataset.names, config.feature_kind)
    return trace, dags, table


def estimate_structure_features(dags: Sequence[Dag], names, kind: str) -> FeaturePosteriorTable:
    """Fraction of sampled DAGs in which each feature holds."""
    if not dags:
        raise ValueError("need at least one sampled DAG")
    n = dags[0].n
    acc = np.zeros((n, n))
    for g in dags:
        if kind == "edge":
            acc += g.adjacency()
        elif kind == "markov":
            acc += g.moral_adjacency()
        elif kind == "path":
            acc += g.reachability()
        else:
            raise ValueError(f"unknown feature kind {kind!r}")
    est = acc / len(dags)
    meta = {"estimator": "structure_mcmc", "n_samples": len(dags)}
    return FeaturePosteriorTable(kind=kind, names=tuple(names), estimates=est, meta=meta)
