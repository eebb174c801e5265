"""Per-ordering closed forms.

Fixing a total order over the variables makes the family choices of
different nodes independent, so the marginal likelihood of the data
given the order is a product over nodes of sums over order-consistent
families, and feature posteriors restricted to the order come out in
closed form:

  * node sums: log P(D | order) up to an order-independent constant,
  * edge posterior: restricted family sum over unrestricted,
  * family posterior: one weight over the node sum,
  * Markov posterior: 1 - (1-p) * prod(1-q_l) over possible common
    children l,
  * whole-DAG sampling: one independent family draw per node.

The OrderScoreState caches the per-node consistent family lists so a
flip of two positions only touches the nodes between them.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .dag import Dag
from .scoring import FamilyCache, ScoredFamily, _enumerate_families

_ONE = np.uint64(1)
_ZERO = np.uint64(0)


def _lse(a: np.ndarray) -> float:
    m = float(a.max())
    return m + math.log(float(np.exp(a - m).sum()))


class FamilySet:
    """Order-consistent families of one node: parallel mask/weight arrays."""

    __slots__ = ("masks", "logw", "parents", "source", "_index")

    def __init__(self, masks: np.ndarray, logw: np.ndarray, parents: list[tuple[int, ...]], source: str):
        self.masks = masks
        self.logw = logw
        self.parents = parents
        self.source = source  # "cache" or "fallback"
        self._index = None

    def index(self) -> dict[tuple[int, ...], int]:
        if self._index is None:
            self._index = {p: t for t, p in enumerate(self.parents)}
        return self._index

    def __len__(self) -> int:
        return len(self.logw)


def _validate_order(order, n: int) -> np.ndarray:
    arr = np.asarray(order, dtype=np.int64)
    if arr.shape != (n,) or sorted(arr.tolist()) != list(range(n)):
        raise ValueError(f"order must be a permutation of 0..{n - 1}")
    return arr


def _extract(cache: FamilyCache, i: int, preds_mask: int) -> FamilySet:
    cm = cache.fam_masks[i]
    sel = (cm & ~np.uint64(preds_mask)) == _ZERO
    idx = np.flatnonzero(sel)
    masks = cm[idx]
    logw = cache.fam_logw[i][idx]
    parents = [cache.fam_parents[i][int(t)] for t in idx]
    return FamilySet(masks, logw, parents, "cache")


def _fallback(cache: FamilyCache, i: int, preds_mask: int) -> FamilySet:
    allowed = [int(y) for y in cache.candidates[i] if (preds_mask >> int(y)) & 1]
    fams, _ = _enumerate_families(
        i, allowed, cache.params, cache.deltas[i], cache.family_score,
        no_prune=cache.no_prune or math.isinf(cache.gamma_nats),
        gamma_nats=0.0 if math.isinf(cache.gamma_nats) else cache.gamma_nats,
    )
    masks = np.asarray([_family_mask(f.parents) for f in fams], dtype=np.uint64)
    logw = np.asarray([f.log_weight for f in fams], dtype=float)
    parents = [f.parents for f in fams]
    return FamilySet(masks, logw, parents, "fallback")


def _family_mask(parents: tuple[int, ...]) -> int:
    m = 0
    for p in parents:
        m |= 1 << p
    return m


def _consistent_set(cache: FamilyCache, i: int, preds_mask: int) -> FamilySet:
    fs = _extract(cache, i, preds_mask)
    if not cache.complete[i]:
        # cache arrays are sorted by descending weight, so the first
        # extracted entry is the best one
        best = float(fs.logw[0]) if len(fs) else -math.inf
        if best < cache.floor[i] + cache.gamma_nats:
            return _fallback(cache, i, preds_mask)
    return fs


def consistent_families(i: int, order, cache: FamilyCache) -> list[ScoredFamily]:
    """Families of node i drawn from the cache that are consistent with
    `order`, falling back to direct enumeration when the extracted list
    is not clearly better than the cache floor."""
    arr = _validate_order(order, cache.n)
    pos = int(np.flatnonzero(arr == i)[0])
    preds = 0
    for t in range(pos):
        preds |= 1 << int(arr[t])
    fs = _consistent_set(cache, i, preds)
    return [ScoredFamily(p, float(w)) for p, w in zip(fs.parents, fs.logw)]


class OrderScoreState:
    """All per-node sums for one ordering, reusable across flips."""

    __slots__ = ("cache", "order", "pos", "preds", "fams", "node_lse", "total", "_pair_cache")

    def __init__(self, cache, order, pos, preds, fams, node_lse):
        self.cache = cache
        self.order = order
        self.pos = pos
        self.preds = preds
        self.fams = fams
        self.node_lse = node_lse
        self.total = float(node_lse.sum())
        self._pair_cache: dict[int, dict[tuple[int, int], float]] = {}

    @property
    def n(self) -> int:
        return self.cache.n

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, cache: FamilyCache, order) -> "OrderScoreState":
        n = cache.n
        arr = _validate_order(order, n)
        pos = np.empty(n, dtype=np.int64)
        pos[arr] = np.arange(n)
        preds = [0] * n
        running = 0
        for t in range(n):
            node = int(arr[t])
            preds[node] = running
            running |= 1 << node
        fams: list[FamilySet] = [None] * n
        node_lse = np.empty(n)
        for i in range(n):
            fs = _consistent_set(cache, i, preds[i])
            fams[i] = fs
            node_lse[i] = _lse(fs.logw)
        return cls(cache, arr, pos, preds, fams, node_lse)

    # -- feature accessors --------------------------------------------------

    def family_probs(self, i: int) -> np.ndarray:
        p = np.exp(self.fams[i].logw - self.node_lse[i])
        return p

    def edge_matrix(self) -> np.ndarray:
        """E[p, c] = posterior probability of the edge p -> c given the order."""
        n = self.n
        e = np.zeros((n, n))
        for c in range(n):
            probs = self.family_probs(c)
            for t, parents in enumerate(self.fams[c].parents):
                for p in parents:
                    e[p, c] += probs[t]
        return np.clip(e, 0.0, 1.0)

    def pair_probs(self, l: int) -> dict[tuple[int, int], float]:
        """P(both i and j parents of l | order), keyed by sorted node ids."""
        got = self._pair_cache.get(l)
        if got is None:
            got = {}
            probs = self.family_probs(l)
            for t, parents in enumerate(self.fams[l].parents):
                m = len(parents)
                if m >= 2:
                    w = float(probs[t])
                    for a in range(m):
                        for b in range(a + 1, m):
                            key = (parents[a], parents[b])
                            got[key] = got.get(key, 0.0) + w
            self._pair_cache[l] = got
        return got

    def markov_matrix(self) -> np.ndarray:
        """Symmetric matrix of Markov-blanket membership posteriors."""
        n = self.n
        e = self.edge_matrix()
        acc = np.ones((n, n))
        order = self.order
        pos = self.pos
        for x in range(n):
            for y in range(n):
                if pos[x] < pos[y]:
                    acc[x, y] = 1.0 - e[x, y]
        for l in range(n):
            for (i, j), q in self.pair_probs(l).items():
                x, y = (i, j) if pos[i] < pos[j] else (j, i)
                acc[x, y] *= 1.0 - q
        m = np.zeros((n, n))
        for x in range(n):
            for y in range(n):
                if pos[x] < pos[y]:
                    val = 1.0 - acc[x, y]
                    m[x, y] = m[y, x] = min(max(val, 0.0), 1.0)
        return m


def log_marginal_given_order(order, cache: FamilyCache) -> tuple[float, OrderScoreState]:
    """log P(D | order) up to an order-independent additive constant,
    together with the reusable per-node state."""
    state = OrderScoreState.build(cache, order)
    return state.total, state


def edge_posterior(parent: int, child: int, state: OrderScoreState) -> float:
    """P(parent -> child | order, data); zero when parent follows child."""
    if parent == child:
        raise ValueError("a node cannot be its own parent")
    if state.pos[parent] > state.pos[child]:
        return 0.0
    fs = state.fams[child]
    sel = (fs.masks >> np.uint64(parent)) & _ONE == _ONE
    if not np.any(sel):
        return 0.0
    contain = _lse(fs.logw[sel])
    return min(1.0, math.exp(contain - state.node_lse[child]))


def family_posterior(i: int, parents: Sequence[int], state: OrderScoreState) -> float:
    """P(Pa(i) = parents | order, data); families missing from the
    retained list count as zero."""
    parents = tuple(sorted(int(p) for p in parents))
    for p in parents:
        if state.pos[p] > state.pos[i]:
            raise ValueError(f"parent {p} does not precede node {i} in the order")
    t = state.fams[i].index().get(parents)
    if t is None:
        return 0.0
    return min(1.0, math.exp(float(state.fams[i].logw[t]) - state.node_lse[i]))


def markov_posterior(i: int, j: int, state: OrderScoreState) -> float:
    """P(i in Markov blanket of j | order, data). Symmetric in (i, j)."""
    if i == j:
        raise ValueError("Markov blanket membership needs two distinct nodes")
    if state.pos[i] > state.pos[j]:
        i, j = j, i
    p = edge_posterior(i, j, state)
    keep = 1.0 - p
    key = (i, j) if i < j else (j, i)
    for l in range(state.n):
        if state.pos[l] > state.pos[j]:
            q = state.pair_probs(l).get(key, 0.0)
            keep *= 1.0 - q
    return min(1.0, max(0.0, 1.0 - keep))


def sample_dag_given_order(state: OrderScoreState, seed) -> Dag:
    """Draw one DAG by sampling each node's family independently from
    its closed-form posterior. Consistent with the order by construction."""
    rng = np.random.default_rng(seed)
    parent_sets = []
    for i in range(state.n):
        probs = state.family_probs(i)
        probs = probs / probs.sum()
        t = int(rng.choice(len(probs), p=probs))
        parent_sets.append(state.fams[i].parents[t])
    return Dag(state.n, parent_sets, _checked=True)


def flip_update(state: OrderScoreState, a: int, b: int, *, paranoid: bool = False) -> OrderScoreState:
    """State for the ordering with positions a < b swapped.

    Nodes before a and after b are reused as-is. For nodes strictly
    between, the sum over families containing the variable that moved
    later is removed (by regrouping, not floating-point subtraction)
    and the sum over newly consistent families containing the variable
    that moved earlier is added. The two swapped nodes are recomputed.
    """
    n = state.n
    if not (0 <= a < b < n):
        raise ValueError("need positions 0 <= a < b < n")
    cache = state.cache
    old_order = state.order
    u = int(old_order[a])  # moves later
    v = int(old_order[b])  # moves earlier
    new_order = old_order.copy()
    new_order[a], new_order[b] = v, u
    pos = state.pos.copy()
    pos[u], pos[v] = b, a

    preds = list(state.preds)
    fams = list(state.fams)
    node_lse = state.node_lse.copy()

    running = preds[u]  # nodes before position a are unchanged
    for t in range(a, b + 1):
        node = int(new_order[t])
        preds[node] = running
        running |= 1 << node

    u_bit = np.uint64(u)
    v_bit = np.uint64(v)
    for t in range(a, b + 1):
        w = int(new_order[t])
        if w == u or w == v:
            fs = _consistent_set(cache, w, preds[w])
            fams[w] = fs
            node_lse[w] = _lse(fs.logw)
            continue
        in_c = cache.cand_masks[w]
        if not ((in_c >> u) & 1 or (in_c >> v) & 1):
            continue  # neither swapped variable can appear in any family of w
        old_fs = fams[w]
        if old_fs.source != "cache":
            fs = _consistent_set(cache, w, preds[w])
            fams[w] = fs
            node_lse[w] = _lse(fs.logw)
            continue
        # subtract: keep only families not containing u
        drop = (old_fs.masks >> u_bit) & _ONE == _ONE
        if np.any(drop):
            keep_idx = np.flatnonzero(~drop)
            stay_masks = old_fs.masks[keep_idx]
            stay_logw = old_fs.logw[keep_idx]
            stay_parents = [old_fs.parents[int(s)] for s in keep_idx]
        else:
            stay_masks, stay_logw, stay_parents = old_fs.masks, old_fs.logw, old_fs.parents
        # add: cached families consistent with the new predecessors that contain v
        cm = cache.fam_masks[w]
        add_sel = ((cm & ~np.uint64(preds[w])) == _ZERO) & ((cm >> v_bit) & _ONE == _ONE)
        add_idx = np.flatnonzero(add_sel)
        if add_idx.size:
            masks = np.concatenate([stay_masks, cm[add_idx]])
            logw = np.concatenate([stay_logw, cache.fam_logw[w][add_idx]])
            parents = stay_parents + [cache.fam_parents[w][int(s)] for s in add_idx]
            lse = float(np.logaddexp(_lse(stay_logw), _lse(cache.fam_logw[w][add_idx])))
        else:
            masks, logw, parents = stay_masks, stay_logw, stay_parents
            lse = _lse(stay_logw)
        fs = FamilySet(masks, logw, parents, "cache")
        if not cache.complete[w]:
            best = float(logw.max())
            if best < cache.floor[w] + cache.gamma_nats:
                fs = _fallback(cache, w, preds[w])
                lse = _lse(fs.logw)
        fams[w] = fs
        node_lse[w] = lse

    new_state = OrderScoreState(cache, new_order, pos, preds, fams, node_lse)
    if paranoid:
        fresh = OrderScoreState.build(cache, new_order)
        if not np.allclose(fresh.node_lse, new_state.node_lse, rtol=0, atol=1e-9):
            raise AssertionError("flip_update disagrees with full recomputation")
    return new_state
