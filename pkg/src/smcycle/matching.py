"""Matching primitives shared by every solver pipeline.

Minimum-weight perfect matching and maximum-cardinality matching are backed
by networkx's blossom implementation, which works symbolically and therefore
stays exact on int and Fraction weights.  The bipartite assignment solver and
the minimal edge cover are implemented here directly.

All functions are pure and deterministic for a fixed input.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import networkx as nx

from .errors import ValidationError

Edge = tuple[Hashable, Hashable]
WeightedEdge = tuple[Hashable, Hashable, int | Fraction]


def _canonical_pairs(pairs: Iterable[Edge]) -> set[Edge]:
    out = set()
    for u, v in pairs:
        out.add((u, v) if repr(u) <= repr(v) else (v, u))
    return out


def matching_weight(edges: Sequence[WeightedEdge], matching: set[Edge]):
    lookup = {}
    for u, v, w in edges:
        lookup[(u, v)] = w
        lookup[(v, u)] = w
    return sum(lookup[e] for e in matching)


def min_weight_perfect_matching(edges: Sequence[WeightedEdge],
                                vertices: Iterable[Hashable] | None = None
                                ) -> set[Edge]:
    """Minimum-weight perfect matching on a general simple graph.

    ``vertices`` may list isolated or extra vertices that must be covered;
    by default the vertex set is the union of edge endpoints.  Raises
    ValidationError when the vertex count is odd or no perfect matching
    exists.
    """
    vs = set(vertices) if vertices is not None else set()
    for u, v, _ in edges:
        if u == v:
            raise ValidationError("self-loop in matching input")
        vs.add(u)
        vs.add(v)
    if len(vs) % 2 != 0:
        raise ValidationError("odd vertex count: no perfect matching")
    if not vs:
        return set()

    g = nx.Graph()
    g.add_nodes_from(sorted(vs, key=repr))
    for u, v, w in edges:
        if g.has_edge(u, v):
            raise ValidationError(f"parallel edge {u!r}-{v!r} in matching input")
        g.add_edge(u, v, weight=-w)
    mate = nx.max_weight_matching(g, maxcardinality=True, weight="weight")
    if 2 * len(mate) != len(vs):
        raise ValidationError("no perfect matching exists")
    return _canonical_pairs(mate)


def max_cardinality_matching(edges: Sequence[WeightedEdge | Edge]) -> set[Edge]:
    """Maximum-cardinality matching on a general simple graph."""
    g = nx.Graph()
    for e in edges:
        u, v = e[0], e[1]
        if u == v:
            raise ValidationError("self-loop in matching input")
        g.add_edge(u, v, weight=1)
    if g.number_of_edges() == 0:
        return set()
    mate = nx.max_weight_matching(g, maxcardinality=True, weight="weight")
    return _canonical_pairs(mate)


def min_cost_bipartite_perfect_matching(costs: Sequence[Sequence[int | Fraction | None]]
                                        ) -> tuple[list[int], int | Fraction]:
    """Exact assignment: returns (col-of-row list, total cost).

    ``costs[i][j]`` is the cost of assigning row i to column j; ``None``
    forbids the cell.  The matrix must be square.  Implemented as the O(n^3)
    potential-based Hungarian algorithm over exact arithmetic.
    """
    n = len(costs)
    if any(len(row) != n for row in costs):
        raise ValidationError("cost matrix must be square")
    if n == 0:
        return [], 0

    finite = [c for row in costs for c in row if c is not None]
    if not finite:
        raise ValidationError("cost matrix has no allowed cell")
    # any assignment through a forbidden cell must beat every finite one
    big = 2 * sum(abs(c) for c in finite) + 1
    a = [[big if c is None else c for c in row] for row in costs]

    INF = None  # sentinel: larger than everything
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    way = [0] * (n + 1)
    p = [0] * (n + 1)  # p[j] = row matched to column j (1-based, 0 = none)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv: list = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = -1
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = a[i0 - 1][j - 1] - u[i0] - v[j]
                if minv[j] is None or cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if delta is None or (minv[j] is not None and minv[j] < delta):
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                elif minv[j] is not None:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    col_of_row = [0] * n
    for j in range(1, n + 1):
        col_of_row[p[j] - 1] = j - 1
    total: int | Fraction = 0
    for i in range(n):
        c = costs[i][col_of_row[i]]
        if c is None:
            raise ValidationError("no assignment avoids forbidden cells")
        total += c
    return col_of_row, total


def minimal_edge_cover(edges: Sequence[WeightedEdge | Edge],
                       vertices: Iterable[Hashable] | None = None) -> set[Edge]:
    """Inclusion-minimal edge cover of minimum size n - max_matching.

    Extends a maximum matching with one edge per exposed vertex.  Raises
    ValidationError when some vertex is isolated.
    """
    vs = set(vertices) if vertices is not None else set()
    adj: dict[Hashable, list[Hashable]] = {}
    for e in edges:
        u, v = e[0], e[1]
        vs.add(u)
        vs.add(v)
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for x in vs:
        if x not in adj:
            raise ValidationError(f"vertex {x!r} is isolated: no edge cover")

    mate = max_cardinality_matching([(e[0], e[1]) for e in edges])
    covered = set()
    for u, v in mate:
        covered.add(u)
        covered.add(v)
    cover = set(mate)
    for x in sorted(vs - covered, key=repr):
        # any neighbor of an exposed vertex is matched (else the matching
        # would not be maximum), so this never grows a component of 3 edges
        y = min(adj[x], key=repr)
        cover.add((x, y) if repr(x) <= repr(y) else (y, x))

    # defensive prune: a minimum cover is already minimal
    degree: dict[Hashable, int] = {x: 0 for x in vs}
    for u, v in cover:
        degree[u] += 1
        degree[v] += 1
    for e in sorted(cover, key=repr):
        u, v = e
        if degree[u] > 1 and degree[v] > 1:
            cover.discard(e)
            degree[u] -= 1
            degree[v] -= 1
    return cover
