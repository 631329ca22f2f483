"""Matching engine: exact bipartite matching, covers, and small exact MVC.

All routines are deterministic: vertices and edges are processed in index
order, so ties always break toward the lowest index.  The evaluator relies
on this for bit-reproducible experiments.

The bipartite matcher is a layered augmenting-path search (Hopcroft-Karp).
Minimum vertex cover on bipartite graphs comes from the matching via the
alternating-reachability construction; on general graphs a branch-and-bound
with degree-0/1 reductions handles desk-scale inputs.  There is deliberately
no blossom algorithm here: nothing in the experiments needs maximum matching
on large general graphs.
"""
from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import CapacityError, StructuralError
from .graphs import Bipartition, Graph

__all__ = [
    "Matching",
    "VertexCover",
    "max_matching_bipartite",
    "konig_vertex_cover",
    "exact_mvc_general",
    "greedy_maximal_matching",
    "augment_with_short_paths",
    "hk_on_mask",
    "konig_cover_from_pairs",
    "mvc_bipartite_on_mask",
    "mvc_general_on_mask",
]

_INF = 1 << 30


@dataclass(frozen=True)
class Matching:
    """A set of pairwise vertex-disjoint edges, stored by edge index."""

    parent: Graph
    edges: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(sorted(int(e) for e in self.edges)))
        seen: set[int] = set()
        for e in self.edges:
            if not (0 <= e < self.parent.m):
                raise StructuralError(f"matching references edge {e} out of range")
            u, v = self.parent.edges[e]
            if u in seen or v in seen:
                raise StructuralError("matching edges share a vertex")
            seen.add(u)
            seen.add(v)

    @property
    def size(self) -> int:
        return len(self.edges)

    @cached_property
    def matched_edge_of(self) -> np.ndarray:
        """Per vertex, the incident matching edge index, or -1."""
        out = np.full(self.parent.n, -1, dtype=np.int64)
        for e in self.edges:
            u, v = self.parent.edges[e]
            out[u] = e
            out[v] = e
        return out

    def covers_vertex(self, v: int) -> bool:
        return bool(self.matched_edge_of[v] >= 0)


@dataclass(frozen=True)
class VertexCover:
    """A vertex set meant to touch every edge of some target edge set."""

    parent: Graph
    members: frozenset[int]

    def __post_init__(self) -> None:
        for v in self.members:
            if not (0 <= v < self.parent.n):
                raise StructuralError(f"cover references vertex {v} out of range")
        object.__setattr__(self, "members", frozenset(int(v) for v in self.members))

    @property
    def size(self) -> int:
        return len(self.members)

    @cached_property
    def mask(self) -> np.ndarray:
        out = np.zeros(self.parent.n, dtype=bool)
        if self.members:
            out[list(self.members)] = True
        return out

    def uncovered(self, edge_mask: np.ndarray) -> int:
        """Number of edges selected by edge_mask with no endpoint in the cover."""
        g = self.parent
        if not g.m:
            return 0
        sel = np.asarray(edge_mask, dtype=bool)
        vm = self.mask
        return int(np.count_nonzero(sel & ~(vm[g.edge_u] | vm[g.edge_v])))


# --- bipartite maximum matching ----------------------------------------------


def _left_adjacency(
    graph: Graph, side: np.ndarray, edge_indices: Sequence[int]
) -> list[list[tuple[int, int]]]:
    """Adjacency (right vertex, edge index) for left vertices, edge order."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(graph.n)]
    edges = graph.edges
    for e in edge_indices:
        u, v = edges[e]
        if side[u] != 0:
            u, v = v, u
        adj[u].append((v, e))
    return adj


def hk_on_mask(
    graph: Graph,
    side: np.ndarray,
    mask: Optional[np.ndarray] = None,
    init_pair: Optional[Sequence[int]] = None,
    init_pair_edge: Optional[Sequence[int]] = None,
    edge_indices: Optional[Sequence[int]] = None,
) -> tuple[list[int], list[int], int]:
    """Maximum matching of the subgraph selected by `mask`.

    Returns (pair, pair_edge, size): pair[v] is the matched partner or -1,
    pair_edge[v] the matched edge index or -1.  `init_pair`/`init_pair_edge`
    warm-start from a matching known to live inside the mask (the caller's
    contract); they are not modified.  `edge_indices`, when given, overrides
    the mask and fixes the adjacency (tie-breaking) order.
    """
    n = graph.n
    if edge_indices is None:
        if mask is None:
            edge_indices = range(graph.m)
        else:
            edge_indices = np.nonzero(np.asarray(mask, dtype=bool))[0].tolist()
    adj = _left_adjacency(graph, side, edge_indices)
    if init_pair is not None:
        pair = list(init_pair)
        pedge = list(init_pair_edge)  # type: ignore[arg-type]
    else:
        pair = [-1] * n
        pedge = [-1] * n

    lefts = [v for v in range(n) if side[v] == 0 and adj[v]]
    dist = [_INF] * n

    need = 2 * n + 64
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)

    def bfs() -> bool:
        queue: deque[int] = deque()
        for u in lefts:
            if pair[u] < 0:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = _INF
        found = False
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for (v, _e) in adj[u]:
                w = pair[v]
                if w < 0:
                    found = True
                elif dist[w] == _INF:
                    dist[w] = du
                    queue.append(w)
        return found

    def dfs(u: int) -> bool:
        du = dist[u] + 1
        for (v, e) in adj[u]:
            w = pair[v]
            if w < 0 or (dist[w] == du and dfs(w)):
                pair[u] = v
                pair[v] = u
                pedge[u] = e
                pedge[v] = e
                return True
        dist[u] = _INF
        return False

    size = sum(1 for u in lefts if pair[u] >= 0)
    while bfs():
        for u in lefts:
            if pair[u] < 0 and dfs(u):
                size += 1
    return pair, pedge, size


def konig_cover_from_pairs(
    graph: Graph,
    side: np.ndarray,
    mask: Optional[np.ndarray],
    pair: Sequence[int],
    strict: bool = True,
) -> np.ndarray:
    """Vertex cover from a bipartite maximum matching, as a boolean mask.

    Alternating reachability from the unmatched left vertices: the cover is
    (unreached lefts) union (reached rights).  With a maximum matching the
    cover size equals the matching size; `strict` asserts that.
    """
    n = graph.n
    if mask is None:
        edge_indices: Sequence[int] = range(graph.m)
    else:
        edge_indices = np.nonzero(np.asarray(mask, dtype=bool))[0].tolist()
    adj = _left_adjacency(graph, side, edge_indices)
    left_has_edge = np.zeros(n, dtype=bool)
    right_has_edge = np.zeros(n, dtype=bool)
    for u in range(n):
        if adj[u]:
            left_has_edge[u] = True
            for (v, _e) in adj[u]:
                right_has_edge[v] = True

    seen_l = np.zeros(n, dtype=bool)
    seen_r = np.zeros(n, dtype=bool)
    queue: deque[int] = deque()
    for u in range(n):
        if left_has_edge[u] and pair[u] < 0:
            seen_l[u] = True
            queue.append(u)
    while queue:
        u = queue.popleft()
        for (v, _e) in adj[u]:
            if not seen_r[v]:
                seen_r[v] = True
                w = pair[v]
                if w >= 0 and not seen_l[w]:
                    seen_l[w] = True
                    queue.append(w)

    cover = (left_has_edge & ~seen_l) | (right_has_edge & seen_r)
    if strict:
        msize = sum(1 for u in range(n) if left_has_edge[u] and pair[u] >= 0)
        csize = int(np.count_nonzero(cover))
        if csize != msize:
            raise StructuralError(
                f"cover/matching size mismatch ({csize} vs {msize}); "
                "input matching was not maximum"
            )
    return cover


def mvc_bipartite_on_mask(
    graph: Graph,
    side: np.ndarray,
    mask: Optional[np.ndarray],
    init_pair: Optional[np.ndarray] = None,
    init_pair_edge: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, int]:
    """Exact minimum vertex cover of a masked bipartite graph."""
    pair, _pedge, size = hk_on_mask(graph, side, mask, init_pair, init_pair_edge)
    cover = konig_cover_from_pairs(graph, side, mask, pair, strict=True)
    return cover, size


def max_matching_bipartite(graph: Graph, sides: Bipartition) -> Matching:
    """Deterministic maximum matching of a bipartite graph."""
    sides.check()
    _pair, pedge, _size = hk_on_mask(graph, sides.side)
    edges = sorted({int(e) for e in pedge if e >= 0})
    return Matching(graph, tuple(edges))


def konig_vertex_cover(graph: Graph, sides: Bipartition, matching: Matching) -> VertexCover:
    """Cover from a matching via alternating reachability.

    With a maximum matching the result is a minimum vertex cover of the same
    size.  With a non-maximum matching the size equality can fail; this
    function does not police that (callers and tests do).
    """
    sides.check()
    pair = np.full(graph.n, -1, dtype=np.int64)
    for e in matching.edges:
        u, v = graph.edges[e]
        pair[u] = v
        pair[v] = u
    cover = konig_cover_from_pairs(graph, sides.side, None, pair, strict=False)
    return VertexCover(graph, frozenset(np.nonzero(cover)[0].tolist()))


# --- exact minimum vertex cover, general graphs -------------------------------


def _components(adj: dict[int, set[int]]) -> list[list[int]]:
    seen: set[int] = set()
    out: list[list[int]] = []
    for root in sorted(adj):
        if root in seen or not adj[root]:
            continue
        comp = [root]
        seen.add(root)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        out.append(sorted(comp))
    return out


def _greedy_matching_lb(adj: dict[int, set[int]]) -> int:
    """Size of a greedy maximal matching: a lower bound on the cover size."""
    used: set[int] = set()
    size = 0
    for u in sorted(adj):
        if u in used or not adj[u]:
            continue
        for w in sorted(adj[u]):
            if w not in used:
                used.add(u)
                used.add(w)
                size += 1
                break
    return size


def _reduce(adj: dict[int, set[int]], cover: set[int]) -> None:
    """Apply degree-0/1 reductions in place."""
    again = True
    while again:
        again = False
        for v in sorted(adj):
            nbrs = adj.get(v)
            if nbrs is None:
                continue
            if not nbrs:
                del adj[v]
            elif len(nbrs) == 1:
                (u,) = nbrs
                cover.add(u)
                for w in list(adj[u]):
                    adj[w].discard(u)
                del adj[u]
                again = True


def _bb_component(adj: dict[int, set[int]]) -> set[int]:
    """Branch and bound on one connected component.  Returns an optimal cover."""
    base: set[int] = set()
    _reduce(adj, base)
    if not adj:
        return base

    # greedy max-degree incumbent
    g2 = {v: set(ns) for v, ns in adj.items()}
    incumbent = set(base)
    while any(g2.values()):
        v = max(sorted(g2), key=lambda x: len(g2[x]))
        incumbent.add(v)
        for w in list(g2[v]):
            g2[w].discard(v)
        del g2[v]
    best = [incumbent]

    def recurse(cur: dict[int, set[int]], chosen: set[int]) -> None:
        local = {v: set(ns) for v, ns in cur.items()}
        picked = set(chosen)
        _reduce(local, picked)
        local = {v: ns for v, ns in local.items() if ns}
        if not local:
            if len(picked) < len(best[0]):
                best[0] = picked
            return
        if len(picked) + _greedy_matching_lb(local) >= len(best[0]):
            return
        v = max(sorted(local), key=lambda x: len(local[x]))
        nbrs = sorted(local[v])
        # branch 1: v in the cover
        b1 = {u: set(ns) for u, ns in local.items()}
        for w in b1[v]:
            b1[w].discard(v)
        del b1[v]
        recurse(b1, picked | {v})
        # branch 2: v excluded, so all its neighbors are in
        b2 = {u: set(ns) for u, ns in local.items()}
        add = set(nbrs)
        for u in nbrs:
            for w in b2[u]:
                b2[w].discard(u)
            del b2[u]
        b2.pop(v, None)
        recurse(b2, picked | add)

    recurse(adj, base)
    return best[0]


def mvc_general_on_mask(
    graph: Graph, mask: Optional[np.ndarray], budget_vertices: int = 40
) -> tuple[np.ndarray, int]:
    """Exact minimum vertex cover of a masked general graph.

    The budget counts non-isolated vertices under the mask; above it the
    branch and bound is refused rather than left to run unbounded.
    """
    if mask is None:
        edge_indices: Sequence[int] = range(graph.m)
    else:
        edge_indices = np.nonzero(np.asarray(mask, dtype=bool))[0].tolist()
    adj: dict[int, set[int]] = {}
    for e in edge_indices:
        u, v = graph.edges[e]
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    if len(adj) > budget_vertices:
        raise CapacityError(
            f"exact vertex cover refused: {len(adj)} active vertices "
            f"exceeds budget {budget_vertices}"
        )
    cover: set[int] = set()
    for comp in _components(adj):
        sub = {v: set(adj[v]) for v in comp}
        cover |= _bb_component(sub)
    out = np.zeros(graph.n, dtype=bool)
    if cover:
        out[sorted(cover)] = True
    return out, len(cover)


def exact_mvc_general(graph: Graph, budget_vertices: int = 40) -> VertexCover:
    """Exact minimum vertex cover, any graph, small inputs only."""
    if graph.n > budget_vertices:
        raise CapacityError(
            f"exact vertex cover refused: n={graph.n} exceeds budget {budget_vertices}"
        )
    mask_cover, _size = mvc_general_on_mask(graph, None, budget_vertices)
    return VertexCover(graph, frozenset(np.nonzero(mask_cover)[0].tolist()))


# --- greedy matching and short augmentations ----------------------------------


def greedy_maximal_matching(graph: Graph, order: Sequence[int]) -> Matching:
    """Maximal matching taking edges greedily in the given index order."""
    order = [int(e) for e in order]
    if sorted(order) != list(range(graph.m)):
        raise StructuralError("order must be a permutation of the edge indices")
    used = np.zeros(graph.n, dtype=bool)
    picked: list[int] = []
    for e in order:
        u, v = graph.edges[e]
        if not used[u] and not used[v]:
            used[u] = True
            used[v] = True
            picked.append(e)
    return Matching(graph, tuple(picked))


def augment_with_short_paths(
    m1: Matching, m2: Matching, realized: np.ndarray, max_len: int
) -> Matching:
    """Grow m1 along short alternating paths of the symmetric difference.

    A component path of m1 XOR m2 is applied when it has at most `max_len`
    edges, starts and ends with m2-edges, and every edge on it is realized
    according to `realized` (callers mark edges not subject to realization
    as realized).  Each applied path increases the matching size by one;
    paths are vertex-disjoint so all applications commute.
    """
    if m1.parent is not m2.parent:
        raise StructuralError("matchings belong to different graphs")
    g = m1.parent
    realized = np.asarray(realized, dtype=bool)
    if realized.shape != (g.m,):
        raise StructuralError("realized mask has wrong length")

    e1 = set(m1.edges)
    e2 = set(m2.edges)
    diff = sorted(e1 ^ e2)
    # vertices have degree <= 2 in the difference; walk its path components
    dadj: dict[int, list[tuple[int, int]]] = {}
    for e in diff:
        u, v = g.edges[e]
        dadj.setdefault(u, []).append((v, e))
        dadj.setdefault(v, []).append((u, e))
    endpoints = sorted(v for v, lst in dadj.items() if len(lst) == 1)

    result = set(m1.edges)
    visited: set[int] = set()
    for start in endpoints:
        if start in visited:
            continue
        path_edges: list[int] = []
        visited.add(start)
        cur = start
        prev_edge = -1
        while True:
            nxt = [(w, e) for (w, e) in dadj[cur] if e != prev_edge]
            if not nxt:
                break
            w, e = nxt[0]
            path_edges.append(e)
            visited.add(w)
            cur, prev_edge = w, e
        if not path_edges or len(path_edges) > max_len:
            continue
        if path_edges[0] not in e2 or path_edges[-1] not in e2:
            continue
        if not all(realized[e] for e in path_edges):
            continue
        for e in path_edges:
            if e in result:
                result.discard(e)
            else:
                result.add(e)
    out = Matching(g, tuple(sorted(result)))
    if out.size < m1.size:
        raise StructuralError("augmentation decreased the matching size")
    return out
