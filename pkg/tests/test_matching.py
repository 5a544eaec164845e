from __future__ import annotations

import itertools
from random import Random

import pytest

from smcycle.errors import ValidationError
from smcycle.matching import (matching_weight, max_cardinality_matching,
                              min_cost_bipartite_perfect_matching,
                              min_weight_perfect_matching, minimal_edge_cover)


def brute_min_perfect_matching(vertices, edges):
    """Pair up all vertices by recursion; None when impossible."""
    wt = {}
    for u, v, w in edges:
        wt[frozenset((u, v))] = w
    vs = sorted(vertices, key=repr)

    def rec(remaining):
        if not remaining:
            return 0
        first = remaining[0]
        best = None
        for i in range(1, len(remaining)):
            key = frozenset((first, remaining[i]))
            if key not in wt:
                continue
            rest = rec(remaining[1:i] + remaining[i + 1:])
            if rest is None:
                continue
            cand = wt[key] + rest
            if best is None or cand < best:
                best = cand
        return best

    return rec(vs)


def brute_max_matching_size(n, edges):
    """Bitmask DP over vertices 0..n-1."""
    adj = [[] for _ in range(n)]
    for u, v, *_ in edges:
        adj[u].append(v)
        adj[v].append(u)
    memo = {0: 0}

    def rec(mask):
        if mask in memo:
            return memo[mask]
        v = (mask & -mask).bit_length() - 1
        best = rec(mask & ~(1 << v))
        for u in adj[v]:
            if mask >> u & 1:
                best = max(best, 1 + rec(mask & ~(1 << v) & ~(1 << u)))
        memo[mask] = best
        return best

    return rec((1 << n) - 1)


def assert_is_matching(matching):
    used = set()
    for u, v in matching:
        assert u not in used and v not in used
        used.add(u)
        used.add(v)


def test_single_edge_matching():
    m = min_weight_perfect_matching([(0, 1, 5)])
    assert m == {(0, 1)}
    assert matching_weight([(0, 1, 5)], m) == 5


def test_k4_matching_picks_cheap_pair():
    edges = [(0, 1, 1), (2, 3, 1), (0, 2, 2), (0, 3, 2), (1, 2, 2), (1, 3, 2)]
    m = min_weight_perfect_matching(edges)
    # the three perfect matchings cost 2, 4 and 4
    assert matching_weight(edges, m) == 2
    assert m == {(0, 1), (2, 3)}


def test_odd_vertex_count_rejected():
    with pytest.raises(ValidationError):
        min_weight_perfect_matching([(0, 1, 1), (1, 2, 1), (0, 2, 1)])


def test_no_perfect_matching_detected():
    # star K_{1,3}: 4 vertices, max matching 1
    with pytest.raises(ValidationError):
        min_weight_perfect_matching([(0, 1, 1), (0, 2, 1), (0, 3, 1)])


def test_min_matching_agrees_with_brute_force():
    rng = Random(7)
    for trial in range(60):
        n = rng.choice((4, 6, 8, 10))
        vertices = list(range(n))
        edges = []
        for u, v in itertools.combinations(vertices, 2):
            if rng.random() < 0.7:
                edges.append((u, v, rng.randrange(1, 30)))
        expected = brute_min_perfect_matching(vertices, edges)
        if expected is None:
            with pytest.raises(ValidationError):
                min_weight_perfect_matching(edges, vertices=vertices)
            continue
        m = min_weight_perfect_matching(edges, vertices=vertices)
        assert_is_matching(m)
        assert 2 * len(m) == n
        assert matching_weight(edges, m) == expected


def test_min_matching_deterministic():
    edges = [(u, v, ((u * 7 + v * 13) % 5) + 1)
             for u, v in itertools.combinations(range(8), 2)]
    runs = {frozenset(min_weight_perfect_matching(edges)) for _ in range(5)}
    assert len(runs) == 1


def test_max_matching_empty():
    assert max_cardinality_matching([]) == set()


def test_max_matching_path():
    m = max_cardinality_matching([("a", "b"), ("b", "c")])
    assert len(m) == 1


def test_max_matching_agrees_with_brute_force():
    rng = Random(13)
    for trial in range(40):
        n = 10
        edges = []
        for u, v in itertools.combinations(range(n), 2):
            if rng.random() < 0.25:
                edges.append((u, v))
        m = max_cardinality_matching(edges)
        assert_is_matching(m)
        assert len(m) == brute_max_matching_size(n, edges)


def test_assignment_one_by_one():
    cols, total = min_cost_bipartite_perfect_matching([[7]])
    assert cols == [0]
    assert total == 7


def test_assignment_two_by_two():
    cols, total = min_cost_bipartite_perfect_matching([[1, 2], [2, 1]])
    assert cols == [0, 1]
    assert total == 2


def test_assignment_respects_forbidden_cells():
    cols, total = min_cost_bipartite_perfect_matching(
        [[None, 5], [3, None]])
    assert cols == [1, 0]
    assert total == 8


def test_assignment_agrees_with_brute_force():
    rng = Random(99)
    for trial in range(40):
        n = 5
        costs = [[rng.randrange(0, 50) for _ in range(n)] for _ in range(n)]
        expected = min(sum(costs[i][perm[i]] for i in range(n))
                       for perm in itertools.permutations(range(n)))
        cols, total = min_cost_bipartite_perfect_matching(costs)
        assert sorted(cols) == list(range(n))
        assert total == expected
        assert sum(costs[i][cols[i]] for i in range(n)) == total


def test_edge_cover_path():
    cover = minimal_edge_cover([("a", "b"), ("b", "c")])
    assert cover == {("a", "b"), ("b", "c")}


def test_edge_cover_k4_is_perfect_matching():
    edges = list(itertools.combinations(range(4), 2))
    cover = minimal_edge_cover(edges)
    assert len(cover) == 2
    assert_is_matching(cover)


def test_edge_cover_isolated_vertex_rejected():
    with pytest.raises(ValidationError):
        minimal_edge_cover([(0, 1)], vertices=[0, 1, 2])


def cover_degrees(vertices, cover):
    deg = {v: 0 for v in vertices}
    for u, v in cover:
        deg[u] += 1
        deg[v] += 1
    return deg


def test_edge_cover_properties_random():
    rng = Random(31)
    checked = 0
    for trial in range(200):
        n = 9
        edges = []
        for u, v in itertools.combinations(range(n), 2):
            if rng.random() < 0.3:
                edges.append((u, v))
        deg = cover_degrees(range(n), edges)
        if any(d == 0 for d in deg.values()):
            continue
        checked += 1
        cover = minimal_edge_cover(edges, vertices=range(n))
        cdeg = cover_degrees(range(n), cover)
        # covers every vertex
        assert all(d >= 1 for d in cdeg.values())
        # size n - max matching
        assert len(cover) == n - brute_max_matching_size(n, edges)
        # inclusion-minimal: each edge has an endpoint of cover-degree 1
        for u, v in cover:
            assert cdeg[u] == 1 or cdeg[v] == 1
        # at least half the vertices are covered exactly once
        once = sum(1 for d in cdeg.values() if d == 1)
        assert 2 * once >= n
    assert checked >= 100
