"""Minimum-weight 2-factor computation.

Three routes live here:

* undirected minimum-weight 2-factor via the classical degree-gadget
  reduction to minimum-weight perfect matching (two core nodes per vertex,
  two nodes per edge);
* directed minimum-weight 2-factor via an exact assignment between
  out-copies and in-copies with self-arcs forbidden;
* minimum-weight triangle-free 2-factor for {1,2} weights, reduced to a
  maximum-size triangle-free simple 2-matching of the weight-1 subgraph.
  The 2-matching subroutine sits behind a swappable interface whose default
  is an exact branch-and-bound, so the whole route stays exact at desk
  scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .core import CycleCover, Instance, Weight, WeightClass, make_cover
from .errors import BudgetExceededError, ValidationError
from .matching import min_cost_bipartite_perfect_matching, min_weight_perfect_matching

TwoMatchingSolver = Callable[[Sequence[int], set[frozenset[int]]], set[frozenset[int]]]

TRIANGLE_FREE_BRUTE_MAX_N = 12


@dataclass(frozen=True)
class TwoFactorRequest:
    instance: Instance
    directed: bool = False
    triangle_free: bool = False
    allow_pair_2cycles: bool = False

    def __post_init__(self):
        inst = self.instance
        if self.directed and inst.symmetric:
            raise ValidationError("directed 2-factor requested on a symmetric instance")
        if not self.directed and not inst.symmetric:
            raise ValidationError("undirected 2-factor requested on an asymmetric instance")
        if self.triangle_free and inst.weight_class is not WeightClass.ONE_TWO:
            raise ValidationError("triangle-free 2-factors are supported for "
                                  "{1,2} weights only")
        if self.allow_pair_2cycles and not inst.pair_groups():
            raise ValidationError("pair 2-cycles allowed but no size-2 group exists")


def _edge_multiset(inst: Instance, allow_pairs: bool) -> list[tuple[int, int, Weight]]:
    edges = [(i, j, inst.w(i, j))
             for i in range(inst.n) for j in range(i + 1, inst.n)]
    if allow_pairs:
        for u, v in inst.pair_groups():
            edges.append((u, v, inst.w(u, v)))  # duplicated pair edge
    return edges


def _cycles_from_degree2_multigraph(n: int, chosen: list[tuple[int, int]]
                                    ) -> CycleCover:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for eid, (u, v) in enumerate(chosen):
        adj[u].append((v, eid))
        adj[v].append((u, eid))
    if any(len(a) != 2 for a in adj):
        raise ValidationError("selected edges are not a 2-factor")
    used = [False] * len(chosen)
    cycles = []
    flags = []
    for start in range(n):
        if all(used[eid] for _, eid in adj[start]):
            continue
        cyc = [start]
        cur = start
        while True:
            nxt = None
            for v, eid in sorted(adj[cur]):
                if not used[eid]:
                    nxt = (v, eid)
                    break
            if nxt is None:
                break
            used[nxt[1]] = True
            if nxt[0] == start:
                break
            cyc.append(nxt[0])
            cur = nxt[0]
        if len(cyc) == 2:
            cycles.append(tuple(cyc))
            flags.append(True)
        else:
            cycles.append(tuple(cyc))
            flags.append(False)
    return make_cover(cycles, directed=False, pair_flags=flags)


def min_weight_2factor(req: TwoFactorRequest) -> CycleCover:
    """Undirected minimum-weight 2-factor by reduction to perfect matching.

    Gadget: two core nodes per vertex; per edge e=uv two nodes e_u, e_v with
    a weight-0 link between them and weight w(e) links to the cores of u and
    v.  A perfect matching selects e exactly when e_u and e_v are both
    matched to cores, paying 2 w(e), so the minimum matching selects a
    minimum 2-factor.  Duplicated pair edges enter as two parallel gadgets;
    selecting both realizes the pair 2-cycle.
    """
    if req.directed:
        raise ValidationError("use min_weight_directed_2factor for digraphs")
    inst = req.instance
    if inst.n < 3 and not req.allow_pair_2cycles:
        raise ValidationError("no 2-factor on fewer than 3 vertices without pair 2-cycles")

    edges = _edge_multiset(inst, req.allow_pair_2cycles)
    gadget = []
    for k, (u, v, w) in enumerate(edges):
        gadget.append((("e", k, 0), ("e", k, 1), 0))
        for t in (0, 1):
            gadget.append((("e", k, 0), ("c", u, t), w))
            gadget.append((("e", k, 1), ("c", v, t), w))
    mate = min_weight_perfect_matching(gadget)

    matched_to_core = set()
    for a, b in mate:
        for x, y in ((a, b), (b, a)):
            if x[0] == "e" and y[0] == "c":
                matched_to_core.add((x[1], x[2]))
    chosen = [(edges[k][0], edges[k][1]) for k in range(len(edges))
              if (k, 0) in matched_to_core and (k, 1) in matched_to_core]
    for k in range(len(edges)):
        sides = ((k, 0) in matched_to_core, (k, 1) in matched_to_core)
        if sides[0] != sides[1]:
            raise ValidationError("gadget matching selected half an edge")
    return _cycles_from_degree2_multigraph(inst.n, chosen)


def min_weight_directed_2factor(req: TwoFactorRequest) -> CycleCover:
    """Directed minimum-weight 2-factor via min-cost assignment.

    Every vertex gets in-degree = out-degree = 1; self-arcs are forbidden.
    Directed 2-cycles are allowed.
    """
    if not req.directed:
        raise ValidationError("use min_weight_2factor for undirected instances")
    inst = req.instance
    n = inst.n
    if n < 2:
        raise ValidationError("directed 2-factor needs at least 2 vertices")
    costs = [[None if i == j else inst.w(i, j) for j in range(n)]
             for i in range(n)]
    succ, _total = min_cost_bipartite_perfect_matching(costs)
    seen = [False] * n
    cycles = []
    for start in range(n):
        if seen[start]:
            continue
        cyc = [start]
        seen[start] = True
        cur = succ[start]
        while cur != start:
            cyc.append(cur)
            seen[cur] = True
            cur = succ[cur]
        cycles.append(tuple(cyc))
    return make_cover(cycles, directed=True)


# ---------------------------------------------------------------------------
# triangle-free route


def brute_force_triangle_free_2matching(vertices: Sequence[int],
                                        h_edges: set[frozenset[int]]
                                        ) -> set[frozenset[int]]:
    """Maximum-size simple 2-matching of H with no 3-cycle, by branch and bound.

    Default backend for the triangle-free pipeline; refuses more than
    TRIANGLE_FREE_BRUTE_MAX_N vertices instead of degrading.
    """
    vs = list(vertices)
    if len(vs) > TRIANGLE_FREE_BRUTE_MAX_N:
        raise BudgetExceededError(
            f"triangle-free 2-matching brute force capped at "
            f"{TRIANGLE_FREE_BRUTE_MAX_N} vertices, got {len(vs)}")
    index = {v: i for i, v in enumerate(vs)}
    m = len(vs)
    edges = sorted((min(index[a], index[b]), max(index[a], index[b]))
                   for a, b in (tuple(e) for e in h_edges))

    deg = [0] * m
    chosen_adj: list[set[int]] = [set() for _ in range(m)]
    chosen: list[tuple[int, int]] = []
    best: list[tuple[int, int]] = []

    # greedy incumbent, scanning edges in order
    for u, v in edges:
        if deg[u] < 2 and deg[v] < 2 and not (chosen_adj[u] & chosen_adj[v]):
            deg[u] += 1
            deg[v] += 1
            chosen_adj[u].add(v)
            chosen_adj[v].add(u)
            chosen.append((u, v))
    best = list(chosen)
    for u, v in chosen:
        deg[u] -= 1
        deg[v] -= 1
        chosen_adj[u].remove(v)
        chosen_adj[v].remove(u)
    chosen = []

    suffix_inc = [[0] * (len(edges) + 1) for _ in range(m)]
    for i in range(len(edges) - 1, -1, -1):
        u, v = edges[i]
        for x in range(m):
            suffix_inc[x][i] = suffix_inc[x][i + 1] + (1 if x in (u, v) else 0)

    def upper_bound(idx: int) -> int:
        cap = 0
        for x in range(m):
            cap += min(2 - deg[x], suffix_inc[x][idx])
        return len(chosen) + cap // 2

    def rec(idx: int) -> None:
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        if idx == len(edges) or upper_bound(idx) <= len(best):
            return
        u, v = edges[idx]
        if deg[u] < 2 and deg[v] < 2 and not (chosen_adj[u] & chosen_adj[v]):
            deg[u] += 1
            deg[v] += 1
            chosen_adj[u].add(v)
            chosen_adj[v].add(u)
            chosen.append((u, v))
            rec(idx + 1)
            chosen.pop()
            deg[u] -= 1
            deg[v] -= 1
            chosen_adj[u].remove(v)
            chosen_adj[v].remove(u)
        rec(idx + 1)

    rec(0)
    return {frozenset((vs[u], vs[v])) for u, v in best}


def _components_of_2matching(vertices: Sequence[int],
                             matching: set[frozenset[int]]):
    """Split a simple 2-matching into cycles and paths (isolated = 0-paths)."""
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for e in matching:
        a, b = tuple(e)
        adj[a].append(b)
        adj[b].append(a)
    seen: set[int] = set()
    cycles: list[list[int]] = []
    paths: list[list[int]] = []
    # walk from path endpoints first
    for v in sorted(vertices):
        if v in seen or len(adj[v]) == 2:
            continue
        path = [v]
        seen.add(v)
        prev, cur = None, v
        while True:
            nxt = [x for x in adj[cur] if x != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            path.append(cur)
            seen.add(cur)
        paths.append(path)
    for v in sorted(vertices):
        if v in seen:
            continue
        cyc = [v]
        seen.add(v)
        prev, cur = None, v
        while True:
            nxt = [x for x in adj[cur] if x != prev]
            if nxt[0] == cyc[0] and len(cyc) > 2:
                break
            prev, cur = cur, nxt[0]
            cyc.append(cur)
            seen.add(cur)
        cycles.append(cyc)
    return cycles, paths


def _triangle_free_core(inst: Instance, active: Sequence[int],
                        solver: TwoMatchingSolver) -> list[list[int]] | None:
    """Triangle-free 2-factor on the active vertices, no pair 2-cycles.

    Returns cycle list or None when infeasible (fewer than 4 active
    vertices).  Implements the reduction: maximum triangle-free simple
    2-matching on the weight-1 subgraph, leftover paths joined into one
    cycle by weight-2 edges, and a repair exchange when that joined cycle is
    shorter than 4.
    """
    active = sorted(active)
    if not active:
        return []
    if len(active) < 4:
        return None
    h_edges = {frozenset((u, v)) for i, u in enumerate(active)
               for v in active[i + 1:] if inst.w(u, v) == 1}
    matching = solver(active, h_edges)
    cycles, paths = _components_of_2matching(active, matching)
    for cyc in cycles:
        if len(cyc) < 4:
            raise ValidationError("2-matching subroutine returned a short cycle")
    if not paths:
        return cycles

    # chain every path into a single cycle; the junction edges all have
    # weight 2, otherwise the 2-matching was not maximum
    joined: list[int] = []
    for p in sorted(paths):
        joined.extend(p)
    if len(joined) >= 4:
        return cycles + [joined]

    # short joined cycle: splice its vertices into another cycle, reusing a
    # weight-1 escape edge when one exists
    if not cycles:
        return None
    short = joined

    def splice(host_idx: int, pos: int, insert: list[int]) -> list[list[int]]:
        host = cycles[host_idx]
        merged = host[:pos + 1] + insert + host[pos + 1:]
        rest = [c for i, c in enumerate(cycles) if i != host_idx]
        return rest + [merged]

    # orientations of the short chain (its interior edges must be kept)
    arrangements = [short, list(reversed(short))]
    # escape: 1-edge from a chain endpoint u to a cycle vertex v; insert the
    # chain between v and a neighbor of v
    for arr in arrangements:
        u = arr[0]
        for ci, host in enumerate(cycles):
            for pos, v in enumerate(host):
                if inst.w(u, v) == 1:
                    # insert so that v-u edge is the weight-1 one
                    return splice(ci, pos, arr)
    # no escape: pay one extra weight-2 edge
    return splice(0, 0, arrangements[0])


def triangle_free_from_simple_2matching(
        inst: Instance, allow_pair_2cycles: bool = False,
        solver: TwoMatchingSolver = brute_force_triangle_free_2matching
) -> CycleCover:
    """Appendix-style reduction to a triangle-free simple 2-matching.

    Pair 2-cycles, when allowed, are handled by branching over the subset of
    size-2 groups realized as duplicated-pair cycles; each branch solves the
    reduced instance independently, so the result stays exact.
    """
    if inst.weight_class is not WeightClass.ONE_TWO:
        raise ValidationError("triangle-free 2-factors are supported for "
                              "{1,2} weights only")
    pairs = inst.pair_groups() if allow_pair_2cycles else []

    best_cost: Weight | None = None
    best_cover: CycleCover | None = None
    for mask in range(1 << len(pairs)):
        committed = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        removed = {v for p in committed for v in p}
        active = [v for v in range(inst.n) if v not in removed]
        cycles = _triangle_free_core(inst, active, solver)
        if cycles is None:
            continue
        all_cycles = [list(p) for p in committed] + cycles
        flags = [True] * len(committed) + [False] * len(cycles)
        cover = make_cover(all_cycles, directed=False, pair_flags=flags)
        cost = _cover_weight(inst, cover)
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_cover = cover
    if best_cover is None:
        raise ValidationError("no triangle-free 2-factor exists")
    return best_cover


def _cover_weight(inst: Instance, cover: CycleCover) -> Weight:
    total: Weight = 0
    for cyc, flag in zip(cover.cycles, cover.pair_flags):
        if flag:
            total += 2 * inst.w(cyc[0], cyc[1])
        else:
            for i in range(len(cyc)):
                total += inst.w(cyc[i], cyc[(i + 1) % len(cyc)])
    return total


def min_weight_triangle_free_2factor(req: TwoFactorRequest,
                                     solver: TwoMatchingSolver =
                                     brute_force_triangle_free_2matching
                                     ) -> CycleCover:
    """Minimum-weight 2-factor among those with no length-3 cycle.

    A flagged pair 2-cycle is not a triangle and remains legal when the
    request allows it.
    """
    if not req.triangle_free:
        raise ValidationError("request does not ask for a triangle-free 2-factor")
    cover = triangle_free_from_simple_2matching(
        req.instance, allow_pair_2cycles=req.allow_pair_2cycles, solver=solver)
    for cyc, flag in zip(cover.cycles, cover.pair_flags):
        if not flag and len(cyc) < 4:
            raise ValidationError("triangle-free pipeline produced a short cycle")
    return cover
