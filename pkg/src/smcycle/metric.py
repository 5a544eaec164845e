"""End-to-end 3-approximation for symmetric metric instances.

Pipeline: 2-approximate survivable-network subgraph (requirements 2 inside
each group), bridge pruning, minimum T-join on the odd-degree set inside the
subgraph, Eulerian doubling, and a metric shortcut of each component down to
a cycle.  The T-join stage can be swapped for a minimum-weight perfect
matching on the complete graph over T, which is the comparison variant.

Stage invariants asserted on every run: T-join parity, w(J) <= w(G')/2 on
the pruned subgraph, and shortcut cost never above the Eulerian weight.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from .core import (CycleCover, Instance, Weight, cover_cost, make_cover,
                   validate_solution)
from .errors import SmcError, ValidationError
from .matching import min_weight_perfect_matching
from .snd import EdgeSubgraph, build_requirements, jain_round, prune_bridges


@dataclass(frozen=True)
class TJoin:
    """Edge set whose odd-degree vertices are exactly the target set."""

    edges: frozenset[tuple[int, int]]

    def weight(self, inst: Instance) -> Weight:
        return sum(inst.w(u, v) for u, v in self.edges)


@dataclass(frozen=True)
class MetricStages:
    """Intermediate artifacts of one pipeline run, for dumps and audits."""

    snd_subgraph: EdgeSubgraph
    pruned: EdgeSubgraph
    odd_vertices: tuple[int, ...]
    join: TJoin
    join_weight: Weight
    eulerian_weight: Weight
    cover: CycleCover


def odd_degree_set(g: EdgeSubgraph) -> list[int]:
    """Vertices of odd degree, multiplicity counted."""
    return [v for v, d in enumerate(g.degrees()) if d % 2 == 1]


def _shortest_paths(g: EdgeSubgraph, inst: Instance, source: int
                    ) -> tuple[dict[int, Weight], dict[int, int]]:
    adj: dict[int, set[int]] = {v: set() for v in range(g.n)}
    for u, v, _c in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    dist: dict[int, Weight] = {source: 0}
    prev: dict[int, int] = {}
    heap: list[tuple[Weight, int]] = [(0, source)]
    done: set[int] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v in sorted(adj[u]):
            nd = d + inst.w(u, v)
            if v not in dist or nd < dist[v] or (nd == dist[v] and u < prev.get(v, g.n)):
                if v not in done:
                    dist[v] = nd
                    prev[v] = u
                    heapq.heappush(heap, (nd, v))
    return dist, prev


def min_t_join(g: EdgeSubgraph, inst: Instance, targets: list[int]) -> TJoin:
    """Minimum-weight T-join inside g.

    Shortest paths among the targets, minimum perfect matching under the
    path metric, then the symmetric difference of the matched paths.  The
    even-per-component precondition is checked, and the output parity is
    re-verified.
    """
    targets = sorted(targets)
    if not targets:
        return TJoin(edges=frozenset())
    comp_of: dict[int, int] = {}
    for ci, comp in enumerate(g.components()):
        for v in comp:
            comp_of[v] = ci
    per_comp: dict[int, int] = {}
    for t in targets:
        per_comp[comp_of[t]] = per_comp.get(comp_of[t], 0) + 1
    if any(c % 2 for c in per_comp.values()):
        raise ValidationError("T has odd size in some component: no T-join")

    dist: dict[int, dict[int, Weight]] = {}
    prev: dict[int, dict[int, int]] = {}
    for t in targets:
        dist[t], prev[t] = _shortest_paths(g, inst, t)

    cand = [(a, b, dist[a][b]) for i, a in enumerate(targets)
            for b in targets[i + 1:] if comp_of[a] == comp_of[b]]
    mate = min_weight_perfect_matching(cand, vertices=targets)

    join: set[tuple[int, int]] = set()
    for a, b in mate:
        # walk the shortest path from b back to a, toggling edges
        cur = b
        while cur != a:
            p = prev[a][cur]
            e = (min(p, cur), max(p, cur))
            join.symmetric_difference_update({e})
            cur = p
    out = TJoin(edges=frozenset(join))

    odd = set()
    deg: dict[int, int] = {}
    for u, v in out.edges:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    odd = {v for v, d in deg.items() if d % 2 == 1}
    if odd != set(targets):
        raise SmcError("T-join parity check failed")
    return out


def _euler_shortcut(n: int, slots: list[tuple[int, int]], inst: Instance
                    ) -> CycleCover:
    """Shortcut every Eulerian component of an edge multiset to a cycle.

    Euler tours start at each component's lowest vertex and always follow
    the lowest-numbered unused edge; repeated vertices are then skipped.
    A 2-vertex component becomes a flagged pair 2-cycle.
    """
    adj: dict[int, list[int]] = {v: [] for v in range(n)}
    for eid, (u, v) in enumerate(slots):
        adj[u].append(eid)
        adj[v].append(eid)
    if any(len(adj[v]) % 2 for v in range(n)):
        raise SmcError("multigraph has an odd-degree vertex")
    for u in adj:
        adj[u].sort(key=lambda e: (slots[e][0] + slots[e][1] - u, e))

    used = [False] * len(slots)
    ptr = [0] * n
    seen_vertex = [False] * n
    pair_set = {frozenset(p) for p in inst.pair_groups()}
    cycles = []
    flags = []
    for start in range(n):
        if seen_vertex[start] or not adj[start]:
            continue
        stack = [start]
        path: list[int] = []
        while stack:
            u = stack[-1]
            while ptr[u] < len(adj[u]) and used[adj[u][ptr[u]]]:
                ptr[u] += 1
            if ptr[u] == len(adj[u]):
                path.append(stack.pop())
            else:
                e = adj[u][ptr[u]]
                used[e] = True
                a, b = slots[e]
                stack.append(b if a == u else a)
        path.reverse()
        cyc = []
        for v in path:
            if not seen_vertex[v]:
                seen_vertex[v] = True
                cyc.append(v)
        if len(cyc) == 2:
            if frozenset(cyc) not in pair_set:
                raise SmcError("2-vertex component is not a size-2 terminal group")
            cycles.append(cyc)
            flags.append(True)
        elif len(cyc) < 2:
            raise SmcError("component with a single vertex cannot be covered")
        else:
            cycles.append(cyc)
            flags.append(False)
    cover = make_cover(cycles, directed=False, pair_flags=flags)
    total_weight = sum(inst.w(u, v) for u, v in slots)
    if cover_cost(inst, cover) > total_weight:
        raise SmcError("shortcut increased the cost on a metric instance")
    return cover


def double_and_shortcut(g: EdgeSubgraph, join: TJoin, inst: Instance) -> CycleCover:
    """Add the join edges on top of g, then shortcut each Eulerian component."""
    slots = [(u, v) for u, v, _c in g.edges]
    slots.extend(sorted(join.edges))
    return _euler_shortcut(g.n, slots, inst)


def approx_metric(inst: Instance, join_mode: Literal["tjoin", "matching"] = "tjoin",
                  trace: list[str] | None = None) -> tuple[CycleCover, MetricStages]:
    """Survivable-network subgraph + T-join + Eulerian shortcut.

    ``join_mode='matching'`` swaps the T-join for a minimum-weight perfect
    matching over the odd set in the complete graph, the comparison variant.
    Returns the cover and the stage record.
    """
    if not inst.symmetric:
        raise ValidationError("metric pipeline needs a symmetric instance")
    req = build_requirements(inst)
    raw = jain_round(inst, req, trace=trace)
    pruned = prune_bridges(raw, req)
    odd = odd_degree_set(pruned)

    if join_mode == "tjoin":
        join = min_t_join(pruned, inst, odd)
    elif join_mode == "matching":
        cand = [(a, b, inst.w(a, b)) for i, a in enumerate(sorted(odd))
                for b in sorted(odd)[i + 1:]]
        mate = min_weight_perfect_matching(cand, vertices=odd) if odd else set()
        join = TJoin(edges=frozenset((min(u, v), max(u, v)) for u, v in mate))
    else:
        raise ValidationError(f"unknown join mode {join_mode!r}")

    join_weight = join.weight(inst)
    pruned_weight = pruned.weight(inst)
    if join_mode == "tjoin" and Fraction(join_weight) > Fraction(pruned_weight, 2):
        raise SmcError("T-join heavier than half the pruned subgraph")

    cover = double_and_shortcut(pruned, join, inst)
    report = validate_solution(inst, cover)
    if not report.feasible:
        raise SmcError(f"metric pipeline produced infeasible cover: "
                       f"{report.violations}")
    stages = MetricStages(snd_subgraph=raw, pruned=pruned,
                          odd_vertices=tuple(sorted(odd)), join=join,
                          join_weight=join_weight,
                          eulerian_weight=pruned_weight + join_weight,
                          cover=cover)
    if trace is not None:
        trace.append(f"G'={raw.weight(inst)} pruned={pruned_weight} "
                     f"T={len(odd)} J={join_weight} cover={cover_cost(inst, cover)}")
    return cover, stages


def doubled_subgraph_baseline(inst: Instance,
                              pruned: EdgeSubgraph | None = None) -> CycleCover:
    """Shortcut of the doubled survivable-network subgraph, no join stage.

    Reproduces the older doubling-based approximation for ratio tables.
    A pruned subgraph from an earlier pipeline run can be reused.
    """
    if pruned is None:
        req = build_requirements(inst)
        pruned = prune_bridges(jain_round(inst, req), req)
    slots = [(u, v) for u, v, _c in pruned.edges] * 2
    cover = _euler_shortcut(inst.n, slots, inst)
    report = validate_solution(inst, cover)
    if not report.feasible:
        raise SmcError("baseline produced an infeasible cover")
    return cover
