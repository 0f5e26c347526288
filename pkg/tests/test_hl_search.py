import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regionplan.cspace import ContractError
from regionplan.hl_search import (
    HeuristicTable,
    HighLevelPlan,
    StaticGraph,
    beam_search,
    h_prime,
    ms_bidirectional_beam_search,
    node_h,
    rooted_plans,
    update_heuristic,
)

from oracles import bfs_shortest, simple_paths


def undirected(edges):
    adj = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    return adj


def random_digraph(rng, n, p):
    adj = {i: [] for i in range(n)}
    order = rng.permutation(n)
    for a, b in zip(order, order[1:]):  # a Hamiltonian chain keeps it connected
        adj[int(a)].append(int(b))
    for i in range(n):
        for j in range(n):
            if i != j and j not in adj[i] and rng.random() < p:
                adj[i].append(j)
    return adj


def test_h_prime_examples():
    t = HeuristicTable(dr_cache={(0, 1): 5.0})
    assert h_prime(t, 0, 1) == 5.0
    update_heuristic(t, [0, 1])
    assert h_prime(t, 0, 1) == 2.5
    assert h_prime(t, 1, 0) == 5.0  # ordered pairs
    assert h_prime(t, 3, 3) == 0.0
    with pytest.raises(KeyError):
        h_prime(t, 0, 9)


def test_node_h_examples():
    t = HeuristicTable(dr_cache={(0, 1): 2.0, (1, 2): 5.0, (1, 3): 3.0, (0, 3): 4.0, (0, 2): 1.0, (2, 3): 6.0})
    assert node_h(t, 0, 1, 2, 3) == 2.0 + 3.0
    assert node_h(t, 0, 3, 2, 3) == h_prime(t, 0, 3)
    assert node_h(t, 0, 2, 2, 3) == h_prime(t, 0, 2)
    assert node_h(t, None, 1, 2, 3) == 3.0


def test_update_heuristic_rule():
    t = HeuristicTable()
    update_heuristic(t, [1, 2, 3])
    assert t.eps == {(1, 2): 0.5, (2, 3): 0.5}
    update_heuristic(t, [4, 1, 2])
    assert t.eps[(1, 2)] == 0.25
    assert t.eps[(2, 3)] == 0.5
    assert t.epsilon(3, 2) == 1.0


def test_eps_stays_positive_after_many_updates():
    t = HeuristicTable()
    for _ in range(2000):
        update_heuristic(t, [0, 1])
    assert 0 < t.eps[(0, 1)] <= 1


def test_table_file_roundtrip(tmp_path):
    t = HeuristicTable()
    update_heuristic(t, [3, 1, 4, 1, 5])
    t.save(tmp_path / "h.txt")
    assert HeuristicTable.load(tmp_path / "h.txt").eps == t.eps
    (tmp_path / "bad.txt").write_text("1 2 1.5\n")
    with pytest.raises(ValueError):
        HeuristicTable.load(tmp_path / "bad.txt")


def test_chain():
    g = StaticGraph(undirected([(0, 1), (1, 2)]))
    plans = ms_bidirectional_beam_search(g, HeuristicTable(), 0, 2, w=2, N=1)
    assert [p.states for p in plans] == [(0, 1, 2)]


def test_four_cycle_finds_both_simple_paths():
    adj = undirected([(0, 1), (1, 2), (2, 3), (3, 0)])
    g = StaticGraph(adj)
    plans = ms_bidirectional_beam_search(g, HeuristicTable(), 0, 2, w=4, N=2, n_sources=0)
    assert {p.states for p in plans} == set(simple_paths(adj, 0, 2))


def test_disconnected_returns_empty():
    g = StaticGraph(undirected([(0, 1), (2, 3)]))
    assert ms_bidirectional_beam_search(g, HeuristicTable(), 0, 3, w=2, N=3) == []
    partial = ms_bidirectional_beam_search(g, HeuristicTable(), 0, 3, w=2, N=3, keep_partial=True)
    assert [p.states for p in partial] == [(2, 3)]
    assert beam_search(g, 0, 3, w=10) is None


def test_same_start_and_goal():
    g = StaticGraph(undirected([(0, 1)]))
    assert ms_bidirectional_beam_search(g, HeuristicTable(), 1, 1) == [HighLevelPlan((1,), 1)]
    assert beam_search(g, 1, 1, 1).states == (1,)


def test_missing_state_and_bad_width():
    g = StaticGraph(undirected([(0, 1)]))
    with pytest.raises(KeyError):
        ms_bidirectional_beam_search(g, HeuristicTable(), 0, 7)
    with pytest.raises(ContractError):
        ms_bidirectional_beam_search(g, HeuristicTable(), 0, 1, w=0)


def test_plans_end_at_goal_and_follow_edges():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(4, 15))
        adj = undirected([(a, b) for a, bs in random_digraph(rng, n, 0.15).items() for b in bs])
        g = StaticGraph(adj)
        s0, sg = 0, n - 1
        plans = ms_bidirectional_beam_search(g, HeuristicTable(), s0, sg, w=3, N=4, rng=rng)
        assert rooted_plans(plans, s0), adj
        assert len({p.states for p in plans}) == len(plans)
        for p in plans:
            assert p.states[-1] == sg
            for a, b in zip(p.states, p.states[1:]):
                assert b in adj[a]


def test_widening_recovers_rooted_plan():
    # a long decoy branch and a tight beam; the s0-rooted plan still appears
    adj = undirected([(0, 1), (1, 2), (2, 3), (3, 9)] + [(0, k) for k in range(4, 9)])
    g = StaticGraph(adj)
    plans = ms_bidirectional_beam_search(g, HeuristicTable(), 0, 9, w=1, N=1, n_sources=0)
    assert rooted_plans(plans, 0)


def test_search_is_deterministic():
    rng = np.random.default_rng(2)
    adj = undirected([(a, b) for a, bs in random_digraph(rng, 15, 0.2).items() for b in bs])
    g = StaticGraph(adj, {(a, b): float(abs(a - b)) for a in adj for b in adj[a]})
    runs = [ms_bidirectional_beam_search(g, HeuristicTable(), 0, 14, rng=np.random.default_rng(7)) for _ in range(2)]
    assert runs[0] == runs[1]


def test_beam_search_matches_bfs():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(2, 21))
        adj = random_digraph(rng, n, 0.1)
        s0, sg = (int(v) for v in rng.choice(n, 2, replace=False))
        want = bfs_shortest(adj, s0, sg)
        plan = beam_search(adj, s0, sg, w=n)
        if want is None:
            assert plan is None
        else:
            assert len(plan) - 1 == want
            assert all(b in adj[a] for a, b in zip(plan.states, plan.states[1:]))


def test_narrow_beam_with_misleading_heuristic_can_fail():
    adj = {0: [1, 2], 1: [], 2: [3], 3: []}
    assert beam_search(adj, 0, 3, w=1, h=lambda a, b: 0.0 if b == 1 else 10.0) is None
    assert beam_search(adj, 0, 3, w=2).states == (0, 2, 3)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10_000))
def test_wide_single_source_search_is_complete(n, seed):
    rng = np.random.default_rng(seed)
    adj = undirected([(a, b) for a, bs in random_digraph(rng, n, 0.05).items() for b in bs])
    g = StaticGraph(adj)
    plans = ms_bidirectional_beam_search(g, HeuristicTable(), 0, n - 1, w=n, N=1, n_sources=0)
    assert rooted_plans(plans, 0)
