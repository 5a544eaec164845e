from __future__ import annotations

from random import Random

import pytest

from smcycle.core import (WeightClass, cover_cost, generate_instance,
                          validate_instance)
from smcycle.errors import BudgetExceededError, ValidationError
from smcycle.oracle import brute_force_2factor
from smcycle.twofactor import (TwoFactorRequest,
                               brute_force_triangle_free_2matching,
                               min_weight_2factor, min_weight_directed_2factor,
                               min_weight_triangle_free_2factor,
                               triangle_free_from_simple_2matching)


def one_two_instance(n, bits, groups):
    """Build a {1,2} instance from a bit list over the upper triangle."""
    w = [[0] * n for _ in range(n)]
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            w[i][j] = w[j][i] = 1 if bits[k] else 2
            k += 1
    return validate_instance(n, w, True, WeightClass.ONE_TWO, groups)


def check_two_factor_shape(inst, cover, triangle_free=False):
    seen = set()
    for cyc, flag in zip(cover.cycles, cover.pair_flags):
        assert not seen.intersection(cyc)
        seen.update(cyc)
        if flag:
            assert len(cyc) == 2
        else:
            assert len(cyc) >= 3
            if triangle_free:
                assert len(cyc) >= 4
    assert seen == set(range(inst.n))


def test_unit_triangle():
    w = [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
    inst = validate_instance(3, w, True, WeightClass.GENERAL_METRIC, [[0, 1, 2]])
    cover = min_weight_2factor(TwoFactorRequest(inst))
    assert cover.cycles == ((0, 1, 2),) or cover.cycles == ((0, 2, 1),)
    assert cover_cost(inst, cover) == 3


def test_pair_2cycle_when_cheapest():
    # two far-apart pairs: doubling each pair edge beats any 4-cycle
    w = [[0, 1, 9, 9], [1, 0, 9, 9], [9, 9, 0, 1], [9, 9, 1, 0]]
    inst = validate_instance(4, w, True, WeightClass.GENERAL_METRIC,
                             [[0, 1], [2, 3]])
    cover = min_weight_2factor(TwoFactorRequest(inst, allow_pair_2cycles=True))
    assert cover_cost(inst, cover) == 4
    assert sorted(cover.cycles) == [(0, 1), (2, 3)]
    assert all(cover.pair_flags)


def test_pair_2cycles_disallowed_forces_big_cycle():
    w = [[0, 1, 9, 9], [1, 0, 9, 9], [9, 9, 0, 1], [9, 9, 1, 0]]
    inst = validate_instance(4, w, True, WeightClass.GENERAL_METRIC,
                             [[0, 1], [2, 3]])
    cover = min_weight_2factor(TwoFactorRequest(inst))
    assert len(cover.cycles) == 1
    assert cover_cost(inst, cover) == 20


def test_undirected_matches_oracle():
    rng = Random(5)
    for trial in range(60):
        n = rng.choice((4, 5, 6, 7, 8))
        sizes = [2, n - 2] if n > 4 or rng.random() < 0.5 else [2, 2]
        inst = generate_instance("one-two", n, sizes, seed=rng.randrange(10 ** 6))
        for allow in (False, True):
            req = TwoFactorRequest(inst, allow_pair_2cycles=allow) if allow else \
                TwoFactorRequest(inst)
            cover = min_weight_2factor(req)
            check_two_factor_shape(inst, cover)
            if not allow:
                assert not any(cover.pair_flags)
            assert cover_cost(inst, cover) == brute_force_2factor(
                inst, allow_pair_2cycles=allow)


def test_undirected_matches_oracle_metric():
    rng = Random(6)
    for trial in range(20):
        n = rng.choice((5, 6, 7))
        inst = generate_instance("euclidean", n, [n], seed=rng.randrange(10 ** 6))
        cover = min_weight_2factor(TwoFactorRequest(inst))
        assert cover_cost(inst, cover) == brute_force_2factor(inst)


def test_directed_two_vertices():
    w = [[0, 3], [4, 0]]
    inst = validate_instance(2, w, False, WeightClass.ASYMMETRIC_METRIC, [[0, 1]])
    cover = min_weight_directed_2factor(TwoFactorRequest(inst, directed=True))
    assert cover.cycles == ((0, 1),)
    assert cover_cost(inst, cover) == 7


def test_directed_matches_oracle():
    rng = Random(17)
    for trial in range(40):
        n = rng.choice((3, 4, 5, 6, 7))
        sizes = [n] if n != 4 else [2, 2]
        inst = generate_instance("asymmetric", n, sizes, seed=rng.randrange(10 ** 6))
        cover = min_weight_directed_2factor(TwoFactorRequest(inst, directed=True))
        assert cover.directed
        seen = set()
        for cyc in cover.cycles:
            assert len(cyc) >= 2
            assert not seen.intersection(cyc)
            seen.update(cyc)
        assert seen == set(range(n))
        assert cover_cost(inst, cover) == brute_force_2factor(inst, directed=True)


def test_triangle_free_c4_in_k4():
    # a 4-cycle of 1-edges, chords weigh 2
    bits_by_pair = {(0, 1): 1, (1, 2): 1, (2, 3): 1, (0, 3): 1,
                    (0, 2): 0, (1, 3): 0}
    bits = [bits_by_pair[(i, j)] for i in range(4) for j in range(i + 1, 4)]
    inst = one_two_instance(4, bits, [[0, 1, 2, 3]])
    req = TwoFactorRequest(inst, triangle_free=True)
    cover = min_weight_triangle_free_2factor(req)
    check_two_factor_shape(inst, cover, triangle_free=True)
    assert cover_cost(inst, cover) == 4


def test_triangle_free_all_ones():
    bits = [1] * 15
    inst = one_two_instance(6, bits, [[0, 1, 2, 3, 4, 5]])
    cover = min_weight_triangle_free_2factor(TwoFactorRequest(inst, triangle_free=True))
    check_two_factor_shape(inst, cover, triangle_free=True)
    assert cover_cost(inst, cover) == 6


def test_triangle_free_infeasible_on_three_vertices():
    bits = [1, 1, 1]
    inst = one_two_instance(3, bits, [[0, 1, 2]])
    with pytest.raises(ValidationError):
        min_weight_triangle_free_2factor(TwoFactorRequest(inst, triangle_free=True))


def test_triangle_free_matches_oracle():
    rng = Random(23)
    for trial in range(120):
        n = rng.choice((4, 5, 6, 7, 8, 9))
        sizes = [n]
        inst = generate_instance("one-two", n, sizes, seed=rng.randrange(10 ** 6))
        cover = min_weight_triangle_free_2factor(
            TwoFactorRequest(inst, triangle_free=True))
        check_two_factor_shape(inst, cover, triangle_free=True)
        assert cover_cost(inst, cover) == brute_force_2factor(inst, triangle_free=True)


def test_triangle_free_with_pairs_matches_oracle():
    rng = Random(29)
    for trial in range(60):
        n = rng.choice((6, 7, 8))
        sizes = [2, n - 2]
        inst = generate_instance("one-two", n, sizes, seed=rng.randrange(10 ** 6))
        req = TwoFactorRequest(inst, triangle_free=True, allow_pair_2cycles=True)
        cover = min_weight_triangle_free_2factor(req)
        check_two_factor_shape(inst, cover, triangle_free=True)
        assert cover_cost(inst, cover) == brute_force_2factor(
            inst, triangle_free=True, allow_pair_2cycles=True)


def test_adapter_returns_unchanged_2factor():
    # weight-1 edges already form two disjoint 4-cycles
    ones = {(0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7)}
    bits = [1 if (i, j) in ones else 0 for i in range(8) for j in range(i + 1, 8)]
    inst = one_two_instance(8, bits, [[0, 1, 2, 3], [4, 5, 6, 7]])
    cover = triangle_free_from_simple_2matching(inst)
    assert cover_cost(inst, cover) == 8
    assert sorted(len(c) for c in cover.cycles) == [4, 4]


def test_adapter_joins_paths_with_2_edges():
    # two disjoint 1-edge paths of length 2 on n=6; everything else weighs 2
    ones = {(0, 1), (1, 2), (3, 4), (4, 5)}
    bits = [1 if (i, j) in ones else 0 for i in range(6) for j in range(i + 1, 6)]
    inst = one_two_instance(6, bits, [[0, 1, 2], [3, 4, 5]])
    cover = triangle_free_from_simple_2matching(inst)
    check_two_factor_shape(inst, cover, triangle_free=True)
    # four 1-edges survive, two junction edges weigh 2: cost 6 + 2 = 8
    assert cover_cost(inst, cover) == 8
    assert cover_cost(inst, cover) == brute_force_2factor(inst, triangle_free=True)


def test_brute_2matching_budget():
    with pytest.raises(BudgetExceededError):
        brute_force_triangle_free_2matching(list(range(13)), set())


def test_brute_2matching_respects_constraints():
    rng = Random(41)
    for trial in range(40):
        n = rng.choice((5, 6, 7, 8))
        edges = {frozenset((i, j)) for i in range(n) for j in range(i + 1, n)
                 if rng.random() < 0.5}
        out = brute_force_triangle_free_2matching(list(range(n)), edges)
        deg = {v: 0 for v in range(n)}
        adj = {v: set() for v in range(n)}
        for e in out:
            a, b = tuple(e)
            assert e in edges
            deg[a] += 1
            deg[b] += 1
            adj[a].add(b)
            adj[b].add(a)
        assert all(d <= 2 for d in deg.values())
        for e in out:
            a, b = tuple(e)
            assert not (adj[a] & adj[b]), "triangle in 2-matching"
