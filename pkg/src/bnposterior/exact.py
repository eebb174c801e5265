"""Brute-force enumeration backends.

Ground truth for everything else: enumerate every bounded-indegree DAG
(tiny n) or every ordering (small n) and average features exactly.
Heuristics are always disabled here: full candidate pools, no pruning,
no cache truncation.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterator

import numpy as np

from .dag import Dag, masks_acyclic
from .data import Dataset
from .errors import CapExceededError
from .ordering import OrderScoreState
from .scoring import FamilyCache, ScoreParams, oracle_cache

DAG_ENUM_CAP = 6
ORDER_ENUM_CAP = 8


def _node_families(cache: FamilyCache, i: int):
    """(parents, mask, log_weight) for every family of node i, any order."""
    out = []
    for parents, lw in zip(cache.fam_parents[i], cache.fam_logw[i]):
        mask = 0
        for p in parents:
            mask |= 1 << p
        out.append((parents, mask, float(lw)))
    return out


def _enumerate_raw(cache: FamilyCache) -> Iterator[tuple[tuple[tuple[int, ...], ...], float]]:
    """Yields (parent_sets, log weight) over every acyclic combination."""
    n = cache.n
    fams = [_node_families(cache, i) for i in range(n)]
    for combo in itertools.product(*fams):
        masks = [c[1] for c in combo]
        if masks_acyclic(masks):
            parents = tuple(c[0] for c in combo)
            lw = sum(c[2] for c in combo)
            yield parents, lw


def enumerate_dags(n: int, k: int, cache: FamilyCache, *, cap: int = DAG_ENUM_CAP) -> Iterator[tuple[Dag, float]]:
    """Every DAG over n nodes with indegree <= k, with its log prior*score.

    Refuses above the cap; the count grows super-exponentially.
    """
    if n > cap:
        raise CapExceededError(
            f"DAG enumeration requested for n={n}, above the cap of {cap}"
        )
    if cache.n != n or cache.params.k != k:
        raise ValueError("cache does not match the requested (n, k)")
    if not all(cache.complete) or not all(len(c) == n - 1 for c in cache.candidates):
        raise ValueError("DAG enumeration needs an oracle cache (no heuristics)")
    for parents, lw in _enumerate_raw(cache):
        yield Dag(n, parents, _checked=True), lw


def _weighted_feature_tables(items, n: int, kinds: tuple[str, ...]):
    """Normalize streamed (parent_sets, logw) items and average features.

    Accumulates with a running rescale so only ratios of exponentials
    appear.
    """
    shift = -math.inf
    z = 0.0
    acc = {kind: np.zeros((n, n)) for kind in kinds}
    count = 0
    for parents, lw in items:
        count += 1
        if lw > shift + 40.0:
            scale = math.exp(shift - lw) if z > 0.0 else 0.0
            z *= scale
            for kind in kinds:
                acc[kind] *= scale
            shift = lw
        w = math.exp(lw - shift)
        z += w
        for kind in kinds:
            acc[kind] += w * _indicator(parents, n, kind)
    if count == 0:
        raise ValueError("nothing enumerated")
    return {kind: acc[kind] / z for kind in kinds}


def _indicator(parent_sets, n: int, kind: str) -> np.ndarray:
    if kind == "edge":
        m = np.zeros((n, n))
        for c, ps in enumerate(parent_sets):
            for p in ps:
                m[p, c] = 1.0
        return m
    if kind == "markov":
        m = np.zeros((n, n))
        for c, ps in enumerate(parent_sets):
            for p in ps:
                m[p, c] = m[c, p] = 1.0
            for a in range(len(ps)):
                for b in range(a + 1, len(ps)):
                    m[ps[a], ps[b]] = m[ps[b], ps[a]] = 1.0
        return m
    if kind == "path":
        anc = [0] * n
        remaining = set(range(n))
        placed = 0
        while remaining:
            for i in sorted(remaining):
                pm = 0
                for p in parent_sets[i]:
                    pm |= 1 << p
                if pm & ~placed == 0:
                    a = 0
                    for p in parent_sets[i]:
                        a |= (1 << p) | anc[p]
                    anc[i] = a
                    placed |= 1 << i
                    remaining.discard(i)
        m = np.zeros((n, n))
        for j in range(n):
            mm = anc[j]
            while mm:
                b = mm & -mm
                m[b.bit_length() - 1, j] = 1.0
                mm ^= b
        return m
    raise ValueError(f"unknown feature kind {kind!r}")


def exact_feature_tables_dags(
    d: Dataset, params: ScoreParams, kinds=("edge", "markov", "path"), *, cap: int = DAG_ENUM_CAP
) -> dict[str, np.ndarray]:
    """Exact posterior feature tables by enumerating all DAGs."""
    if d.n > cap:
        raise CapExceededError(
            f"DAG enumeration requested for n={d.n}, above the cap of {cap}"
        )
    cache = oracle_cache(d, params)
    kinds = tuple(kinds)
    return _weighted_feature_tables(_enumerate_raw(cache), d.n, kinds)


def exact_feature_posterior_dags(d: Dataset, params: ScoreParams, feature, *, cap: int = DAG_ENUM_CAP) -> float:
    """P(feature | D) over all bounded-indegree DAGs.

    feature is a (kind, i, j) triple with kind in edge/markov/path.
    """
    kind, i, j = feature
    tables = exact_feature_tables_dags(d, params, (kind,), cap=cap)
    return float(tables[kind][i, j])


def exact_feature_tables_orders(
    d: Dataset,
    params: ScoreParams,
    kinds=("edge", "markov"),
    *,
    cap: int = ORDER_ENUM_CAP,
    path_dags_per_order: int = 200,
    seed: int = 0,
) -> dict[str, np.ndarray]:
    """Exact order-averaged feature tables: sum over all n! orderings of
    the per-ordering closed forms, weighted by the order marginals.

    Path features have no closed form; for n <= 5 every consistent DAG
    of each ordering is enumerated, otherwise they are sampled.
    """
    n = d.n
    if n > cap:
        raise CapExceededError(
            f"ordering enumeration requested for n={n}, above the cap of {cap}"
        )
    kinds = tuple(kinds)
    cache = oracle_cache(d, params)
    totals: list[float] = []
    per_kind: dict[str, list[np.ndarray]] = {kind: [] for kind in kinds}
    rng = np.random.default_rng(seed)
    for perm in itertools.permutations(range(n)):
        state = OrderScoreState.build(cache, np.asarray(perm, dtype=np.int64))
        totals.append(state.total)
        for kind in kinds:
            if kind == "edge":
                per_kind[kind].append(state.edge_matrix())
            elif kind == "markov":
                per_kind[kind].append(state.markov_matrix())
            elif kind == "path":
                per_kind[kind].append(_path_table_for_state(state, rng, path_dags_per_order))
            else:
                raise ValueError(f"unknown feature kind {kind!r}")
    logw = np.asarray(totals)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    out = {}
    for kind in kinds:
        stack = np.stack(per_kind[kind])
        out[kind] = np.tensordot(w, stack, axes=1)
    return out


def _path_table_for_state(state: OrderScoreState, rng, dags_per_order: int) -> np.ndarray:
    n = state.n
    if n <= 5:
        # exact: product over per-node consistent families; every
        # combination is acyclic because it respects the order
        probs = [state.family_probs(i) for i in range(n)]
        parents = [state.fams[i].parents for i in range(n)]
        table = np.zeros((n, n))
        for combo in itertools.product(*(range(len(p)) for p in probs)):
            weight = 1.0
            for i, t in enumerate(combo):
                weight *= probs[i][t]
            if weight == 0.0:
                continue
            pset = tuple(parents[i][t] for i, t in enumerate(combo))
            table += weight * _indicator(pset, n, "path")
        return table
    from .ordering import sample_dag_given_order

    hit = np.zeros((n, n))
    for _ in range(dags_per_order):
        hit += sample_dag_given_order(state, rng).reachability()
    return hit / dags_per_order


def exact_feature_posterior_orders(
    d: Dataset, params: ScoreParams, feature, *, cap: int = ORDER_ENUM_CAP, seed: int = 0
) -> float:
    """P(feature | D) under the order-averaged posterior."""
    kind, i, j = feature
    tables = exact_feature_tables_orders(d, params, (kind,), cap=cap, seed=seed)
    return float(tables[kind][i, j])
