"""Metropolis sampling over variable orderings.

The chain walks the n! orderings with a mixture of two symmetric
proposals: swapping two positions (cheap, handled incrementally) and
cutting the deck (global, forces a full recomputation). With a uniform
prior over orderings the acceptance probability reduces to
min(1, exp(new - old)) on the per-ordering log marginals. Feature
posteriors are estimated by averaging each retained ordering's
closed-form posterior; path features, which have no closed form, are
averaged over DAGs sampled within each retained ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import FeaturePosteriorTable, McmcTraceRecord
from .ordering import OrderScoreState, flip_update, sample_dag_given_order
from .scoring import FamilyCache


@dataclass(frozen=True)
class OrderMcmcConfig:
    p_flip: float = 0.9
    burn_in: int = 10_000
    thin: int = 2_500
    n_samples: int = 50
    dags_per_order: int = 10
    seed: int = 0
    init_order: tuple[int, ...] | None = None
    paranoid: bool = False

    def __post_init__(self):
        if not (0.0 <= self.p_flip <= 1.0):
            raise ValueError("p_flip must be in [0, 1]")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.n_samples < 1:
            raise ValueError("need at least one sample")
        if self.burn_in < 0:
            raise ValueError("burn_in cannot be negative")
        if self.dags_per_order < 1:
            raise ValueError("dags_per_order must be at least 1")


def propose(order, rng: np.random.Generator, p_flip: float):
    """One proposal: either swap an unordered pair of positions (prob
    p_flip) or cut the deck at a non-identity point. Both proposal
    families are symmetric."""
    arr = np.asarray(order)
    n = arr.size
    if n < 2:
        raise ValueError("proposals need at least two variables")
    if rng.random() < p_flip:
        a, b = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
        out = arr.copy()
        out[a], out[b] = out[b], out[a]
        return out, "flip"
    j = int(rng.integers(1, n))
    return np.concatenate([arr[j:], arr[:j]]), "cut"


def accept(log_score_old: float, log_score_new: float, rng: np.random.Generator) -> bool:
    """Metropolis rule for symmetric proposals under a uniform order prior."""
    delta = log_score_new - log_score_old
    u = rng.random()
    return delta >= 0.0 or u < math.exp(delta)


def run_chain(cache: FamilyCache, config: OrderMcmcConfig):
    """Run the ordering sampler.

    Returns (trace, samples): one trace record per proposal step and
    the retained orderings (every `thin` steps after `burn_in`, until
    `n_samples` are collected). Flip proposals update the state
    incrementally; cut proposals rebuild it.
    """
    rng = np.random.default_rng(config.seed)
    n = cache.n
    if config.init_order is not None:
        order = np.asarray(config.init_order, dtype=np.int64)
    else:
        order = rng.permutation(n)
    state = OrderScoreState.build(cache, order)
    trace: list[McmcTraceRecord] = []
    samples: list[np.ndarray] = []
    total_iters = config.burn_in + config.thin * config.n_samples
    if n < 2:
        for it in range(1, total_iters + 1):
            trace.append(McmcTraceRecord(it, state.total, "none", False))
            if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
                samples.append(state.order.copy())
        return trace, samples
    for it in range(1, total_iters + 1):
        if rng.random() < config.p_flip:
            a, b = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
            candidate = flip_update(state, a, b, paranoid=config.paranoid)
            kind = "flip"
        else:
            j = int(rng.integers(1, n))
            candidate = OrderScoreState.build(cache, np.concatenate([state.order[j:], state.order[:j]]))
            kind = "cut"
        ok = accept(state.total, candidate.total, rng)
        if ok:
            state = candidate
        trace.append(McmcTraceRecord(it, state.total, kind, ok))
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
            samples.append(state.order.copy())
    return trace, samples


def estimate_features(
    samples,
    cache: FamilyCache,
    kind: str,
    dags_per_order: int = 10,
    seed: int = 0,
) -> FeaturePosteriorTable:
    """Average per-ordering posteriors over the retained orderings.

    Edge and Markov features use the closed forms; path features are
    estimated from `dags_per_order` DAGs sampled within each ordering.
    """
    if not samples:
        raise ValueError("need at least one retained ordering")
    n = cache.n
    acc = np.zeros((n, n))
    rng = np.random.default_rng(seed)
    for order in samples:
        state = OrderScoreState.build(cache, order)
        if kind == "edge":
            acc += state.edge_matrix()
        elif kind == "markov":
            acc += state.markov_matrix()
        elif kind == "path":
            hit = np.zeros((n, n))
            for _ in range(dags_per_order):
                dag = sample_dag_given_order(state, rng)
                hit += dag.reachability()
            acc += hit / dags_per_order
        else:
            raise ValueError(f"unknown feature kind {kind!r}")
    est = acc / len(samples)
    meta = {
        "estimator": "order_mcmc",
        "n_samples": len(samples),
        "dags_per_order": dags_per_order if kind == "path" else None,
        "config_hash": hash((kind, len(samples), dags_per_order, seed)) & 0xFFFFFFFF,
    }
    return FeaturePosteriorTable(kind=kind, names=cache.dataset.names, estimates=est, meta=meta)
