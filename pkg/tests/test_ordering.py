import math

import numpy as np
import pytest

from bnposterior import (
    Dataset,
    OrderScoreState,
    ScoreParams,
    build_family_cache,
    consistent_families,
    edge_posterior,
    family_posterior,
    flip_update,
    log_marginal_given_order,
    markov_posterior,
    sample_dag_given_order,
)
from bnposterior.scoring import oracle_cache
from conftest import (
    brute_conditionals,
    brute_order_log_marginal,
    in_markov_blanket,
)


def binary_dataset(rng, n, m, coupled=None):
    rows = rng.integers(0, 2, size=(m, n))
    if coupled:
        src, dst, noise = coupled
        flip = rng.random(m) < noise
        rows[:, dst] = rows[:, src] ^ flip
    return Dataset(names=tuple(f"X{i}" for i in range(n)), arities=[2] * n, rows=rows)


class TestConsistentFamilies:
    def test_first_node_only_empty(self, rng):
        d = binary_dataset(rng, 4, 30)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=4))
        fams = consistent_families(2, [2, 0, 1, 3], cache)
        assert [f.parents for f in fams] == [()]

    def test_last_node_counting(self, rng):
        d = binary_dataset(rng, 4, 30)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=4))
        fams = consistent_families(3, [0, 1, 2, 3], cache)
        assert len(fams) == 1 + 3 + 3  # sizes 0..2 over three predecessors

    def test_matches_exhaustive_filter(self, rng):
        d = binary_dataset(rng, 6, 50, coupled=(0, 4, 0.1))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=3, n=6))
        order = [3, 0, 5, 4, 1, 2]
        import itertools

        for node in range(6):
            pos = order.index(node)
            preds = sorted(order[:pos])
            want = set()
            for size in range(0, min(3, len(preds)) + 1):
                want.update(itertools.combinations(preds, size))
            got = {f.parents for f in consistent_families(node, order, cache)}
            assert got == want

    def test_fallback_recovers_truncated_families(self, rng):
        # tiny m_f forces truncation; a huge (finite) gamma triggers the
        # fallback, which should reproduce the exact consistent set
        d = binary_dataset(rng, 5, 60, coupled=(1, 3, 0.05))
        p = ScoreParams(ess=1.0, k=2, n=5)
        small = build_family_cache(d, p, m_p=4, m_f=2, gamma_bits=500.0)
        full = oracle_cache(d, p)
        order = [2, 1, 4, 3, 0]
        for node in range(5):
            got = {f.parents: f.log_weight for f in consistent_families(node, order, small)}
            want = {f.parents: f.log_weight for f in consistent_families(node, order, full)}
            assert got.keys() == want.keys()
            for key in got:
                assert got[key] == pytest.approx(want[key], abs=1e-9)


class TestLogMarginal:
    def test_three_node_brute_force(self, rng):
        d = binary_dataset(rng, 3, 40, coupled=(0, 1, 0.2))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=3))
        for order in ([0, 1, 2], [2, 0, 1], [1, 2, 0]):
            total, _ = log_marginal_given_order(np.asarray(order), cache)
            want = brute_order_log_marginal(d.rows, [2, 2, 2], order, 2, 1.0)
            assert total == pytest.approx(want, abs=1e-9)

    def test_five_node_brute_force(self, rng):
        d = binary_dataset(rng, 5, 50, coupled=(2, 4, 0.1))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=5))
        order = [4, 0, 3, 1, 2]
        total, _ = log_marginal_given_order(np.asarray(order), cache)
        want = brute_order_log_marginal(d.rows, [2] * 5, order, 2, 1.0)
        assert abs(total - want) < 1e-9 * max(1.0, abs(want))

    def test_single_node(self):
        d = Dataset(names=("X",), arities=[2], rows=[[0], [1], [1]])
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=1, n=1))
        total, state = log_marginal_given_order([0], cache)
        assert total == pytest.approx(cache.log_weight(0, ()), abs=1e-12)
        assert family_posterior(0, (), state) == 1.0

    def test_determinism(self, rng):
        d = binary_dataset(rng, 4, 25)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=4))
        t1, _ = log_marginal_given_order([3, 1, 0, 2], cache)
        t2, _ = log_marginal_given_order([3, 1, 0, 2], cache)
        assert t1 == t2


class TestEdgePosterior:
    def test_inconsistent_direction_is_zero(self, rng):
        d = binary_dataset(rng, 3, 20)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=3))
        _, state = log_marginal_given_order([0, 1, 2], cache)
        assert edge_posterior(2, 0, state) == 0.0

    def test_two_node_hand_computation(self, rng):
        d = binary_dataset(rng, 2, 35, coupled=(0, 1, 0.15))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=1, n=2))
        _, state = log_marginal_given_order([0, 1], cache)
        w_empty = math.exp(cache.log_weight(1, ()))
        w_edge = math.exp(cache.log_weight(1, (0,)))
        assert edge_posterior(0, 1, state) == pytest.approx(
            w_edge / (w_empty + w_edge), abs=1e-12
        )

    def test_membership_sum_bounded_by_k(self, rng):
        d = binary_dataset(rng, 5, 45, coupled=(0, 3, 0.1))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=5))
        order = [1, 0, 4, 2, 3]
        _, state = log_marginal_given_order(order, cache)
        for node in range(5):
            total = sum(
                edge_posterior(j, node, state) for j in range(5) if j != node
            )
            assert total <= 2 + 1e-9

    def test_exactly_one_direction_nonzero(self, rng):
        d = binary_dataset(rng, 3, 30, coupled=(0, 2, 0.1))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=3))
        _, state = log_marginal_given_order([2, 1, 0], cache)
        for i in range(3):
            for j in range(i + 1, 3):
                assert edge_posterior(i, j, state) == 0.0 or edge_posterior(j, i, state) == 0.0

    def test_self_edge_rejected(self, rng):
        d = binary_dataset(rng, 2, 10)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=1, n=2))
        _, state = log_marginal_given_order([0, 1], cache)
        with pytest.raises(ValueError):
            edge_posterior(1, 1, state)


class TestFamilyPosterior:
    def test_normalization(self, rng):
        d = binary_dataset(rng, 4, 40)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=3, n=4))
        order = [1, 3, 0, 2]
        _, state = log_marginal_given_order(order, cache)
        for node in range(4):
            total = sum(
                family_posterior(node, f.parents, state)
                for f in consistent_families(node, order, cache)
            )
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_matches_brute_conditionals(self, rng):
        d = binary_dataset(rng, 3, 35, coupled=(1, 2, 0.2))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=3))
        order = [1, 0, 2]
        _, state = log_marginal_given_order(order, cache)
        assignments, probs = brute_conditionals(d.rows, [2, 2, 2], order, 2, 1.0)
        for parents in [(), (1,), (0, 1)]:
            want = sum(p for p, a in zip(probs, assignments) if a[2] == parents)
            assert family_posterior(2, parents, state) == pytest.approx(want, abs=1e-9)

    def test_order_inconsistent_family_rejected(self, rng):
        d = binary_dataset(rng, 3, 20)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=3))
        _, state = log_marginal_given_order([0, 1, 2], cache)
        with pytest.raises(ValueError):
            family_posterior(0, (2,), state)


class TestMarkovPosterior:
    def test_two_nodes_equals_edge(self, rng):
        d = binary_dataset(rng, 2, 30, coupled=(0, 1, 0.25))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=1, n=2))
        _, state = log_marginal_given_order([0, 1], cache)
        assert markov_posterior(0, 1, state) == pytest.approx(
            edge_posterior(0, 1, state), abs=1e-15
        )

    def test_symmetry_is_bit_exact(self, rng):
        d = binary_dataset(rng, 5, 40, coupled=(0, 2, 0.1))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=5))
        _, state = log_marginal_given_order([3, 0, 2, 4, 1], cache)
        for i in range(5):
            for j in range(i + 1, 5):
                assert markov_posterior(i, j, state) == markov_posterior(j, i, state)

    def test_matches_brute_conditionals(self, rng):
        d = binary_dataset(rng, 4, 30, coupled=(0, 3, 0.15))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=4))
        order = [0, 2, 3, 1]
        _, state = log_marginal_given_order(order, cache)
        assignments, probs = brute_conditionals(d.rows, [2] * 4, order, 2, 1.0)
        for i in range(4):
            for j in range(i + 1, 4):
                want = sum(
                    p for p, a in zip(probs, assignments) if in_markov_blanket(a, i, j)
                )
                assert markov_posterior(i, j, state) == pytest.approx(want, abs=1e-9)

    def test_contains_edge_event(self, rng):
        d = binary_dataset(rng, 4, 35, coupled=(1, 2, 0.1))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=4))
        order = [1, 3, 2, 0]
        _, state = log_marginal_given_order(order, cache)
        pos = {int(v): t for t, v in enumerate(order)}
        for i in range(4):
            for j in range(4):
                if i != j and pos[i] < pos[j]:
                    assert markov_posterior(i, j, state) >= edge_posterior(i, j, state) - 1e-12

    def test_same_node_rejected(self, rng):
        d = binary_dataset(rng, 2, 10)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=1, n=2))
        _, state = log_marginal_given_order([0, 1], cache)
        with pytest.raises(ValueError):
            markov_posterior(1, 1, state)


class TestSampleDag:
    def test_edges_respect_order(self, rng):
        d = binary_dataset(rng, 5, 40, coupled=(0, 1, 0.1))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=5))
        order = [4, 2, 0, 3, 1]
        _, state = log_marginal_given_order(order, cache)
        pos = {int(v): t for t, v in enumerate(order)}
        for seed in range(20):
            g = sample_dag_given_order(state, seed)
            for p, c in g.edges():
                assert pos[p] < pos[c]

    def test_single_node_empty_graph(self):
        d = Dataset(names=("X",), arities=[2], rows=[[0], [1]])
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=1, n=1))
        _, state = log_marginal_given_order([0], cache)
        assert sample_dag_given_order(state, 0).num_edges() == 0

    def test_family_frequencies_match_posterior(self, rng):
        d = binary_dataset(rng, 3, 50, coupled=(0, 2, 0.2))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=3))
        order = [0, 1, 2]
        _, state = log_marginal_given_order(order, cache)
        draws = 4000
        gen = np.random.default_rng(99)
        freq = {}
        for _ in range(draws):
            g = sample_dag_given_order(state, gen)
            for i in range(3):
                key = (i, g.parents(i))
                freq[key] = freq.get(key, 0) + 1
        for node in range(3):
            for fam in consistent_families(node, order, cache):
                p = family_posterior(node, fam.parents, state)
                got = freq.get((node, fam.parents), 0) / draws
                se = math.sqrt(max(p * (1 - p), 1e-12) / draws)
                assert abs(got - p) <= 4 * se + 1e-9


class TestFlipUpdate:
    def test_adjacent_flip_touches_swapped_nodes_only(self, rng):
        d = binary_dataset(rng, 5, 30)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=5))
        _, state = log_marginal_given_order([0, 1, 2, 3, 4], cache)
        new = flip_update(state, 2, 3)
        for node in (0, 1, 4):
            assert new.node_lse[node] == state.node_lse[node]
            assert new.fams[node] is state.fams[node]

    def test_flip_back_restores(self, rng):
        d = binary_dataset(rng, 6, 40, coupled=(0, 5, 0.1))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=6))
        _, state = log_marginal_given_order([5, 1, 3, 0, 2, 4], cache)
        roundtrip = flip_update(flip_update(state, 1, 4), 1, 4)
        assert np.allclose(roundtrip.node_lse, state.node_lse, rtol=0, atol=1e-9)
        assert roundtrip.total == pytest.approx(state.total, abs=1e-9)

    def test_random_flips_match_recompute_oracle_cache(self, rng):
        d = binary_dataset(rng, 6, 60, coupled=(2, 5, 0.05))
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=3, n=6))
        _, state = log_marginal_given_order(rng.permutation(6), cache)
        for _ in range(200):
            a, b = sorted(rng.choice(6, size=2, replace=False))
            state = flip_update(state, int(a), int(b))
            fresh = OrderScoreState.build(cache, state.order)
            assert abs(state.total - fresh.total) < 1e-9

    def test_random_flips_with_heuristics_enabled(self, rng):
        # truncation plus pruning active: flip must still agree with a
        # scratch rebuild under the exact same cache semantics
        d = binary_dataset(rng, 7, 80, coupled=(1, 6, 0.1))
        p = ScoreParams(ess=1.0, k=3, n=7)
        cache = build_family_cache(d, p, m_p=4, m_f=8, gamma_bits=3.0)
        _, state = log_marginal_given_order(rng.permutation(7), cache)
        for _ in range(200):
            a, b = sorted(rng.choice(7, size=2, replace=False))
            state = flip_update(state, int(a), int(b), paranoid=True)

    def test_rejects_bad_positions(self, rng):
        d = binary_dataset(rng, 3, 10)
        cache = oracle_cache(d, ScoreParams(ess=1.0, k=2, n=3))
        _, state = log_marginal_given_order([0, 1, 2], cache)
        with pytest.raises(ValueError):
            flip_update(state, 2, 2)
