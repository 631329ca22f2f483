"""Proposal-based matchings with near-independent vertex match events.

Fix a bipartition into a proposing side A and an accepting side B, and any
deterministic base matching procedure.  For an A-vertex v, the probability
that a given incident edge ends up matched depends on the realization of
v's own edges and (through the procedure) on everything else; conditioning
on v's edges alone gives a proposal row p_e = Pr[e in M_A | status of v's
edges].  The rounding then has every A-vertex propose along at most one
edge according to its row, and every B-vertex accept its lowest-index
proposer.

The point of the two-step construction: whether v proposes depends only on
v's own coin and its realized edges, so for a B-vertex u not adjacent to v
the events "v proposes" and "u gets matched" decouple, while the matching
stays within a (1 - 1/e) factor of the base procedure's in expectation.

Conditional rows come in two flavors: sampled (fresh draws for all non-v
edges) and exact (weighted enumeration of the non-v edges in v's connected
component; other components cannot influence v's edges because the base
procedures all act component by component).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapacityError, ParameterError, StructuralError
from .graphs import Graph, Realization, bipartition
from .matching import Matching, greedy_maximal_matching, hk_on_mask
from . import rng

__all__ = [
    "ALG_HK",
    "ALG_LEX",
    "ALG_GREEDY",
    "EdgeStatusProfile",
    "ProposalRow",
    "ProposalTable",
    "VimOutcome",
    "run_base_matcher",
    "profile_of",
    "conditional_match_probs",
    "ExactRowCache",
    "vim_round",
    "downsample_matching",
    "VimTrialStats",
    "run_vim_trials",
    "independence_stats",
]

_TAG_COND = 21
_TAG_TRIAL = 22
_TAG_PROPOSE = 23
_TAG_DOWNSAMPLE = 24

ALG_HK = "hk_fixed"
ALG_LEX = "lex_min_max"
ALG_GREEDY = "greedy_maximal"

_ROW_TOL = 1e-9


@dataclass(frozen=True)
class EdgeStatusProfile:
    """Realization status of exactly the edges incident to one vertex."""

    vertex: int
    edge_indices: tuple[int, ...]
    realized: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.edge_indices) != len(self.realized):
            raise StructuralError("profile length mismatch")

    @property
    def key(self) -> tuple[int, tuple[bool, ...]]:
        return (self.vertex, self.realized)


def profile_of(graph: Graph, v: int, mask: np.ndarray) -> EdgeStatusProfile:
    idx = tuple(graph.incident_edges(v))
    return EdgeStatusProfile(v, idx, tuple(bool(mask[e]) for e in idx))


@dataclass(frozen=True)
class ProposalRow:
    """One A-vertex's proposal distribution over its incident edges.

    Construction clips negative noise and scales the row down when it
    sums above 1; the leftover is the no-proposal mass.
    """

    vertex: int
    edge_indices: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.edge_indices) != len(self.probs):
            raise StructuralError("row length mismatch")
        if any(q < 0.0 or q > 1.0 + _ROW_TOL for q in self.probs):
            raise StructuralError("row entries outside [0, 1]")
        total = math.fsum(self.probs)
        if total > 1.0 + _ROW_TOL:
            raise StructuralError(f"row mass {total} exceeds 1")

    @property
    def proposal_mass(self) -> float:
        return min(1.0, math.fsum(self.probs))

    @property
    def no_proposal_mass(self) -> float:
        return 1.0 - self.proposal_mass

    @staticmethod
    def from_estimates(
        vertex: int, edge_indices: tuple[int, ...], raw: np.ndarray
    ) -> "ProposalRow":
        q = np.clip(np.asarray(raw, dtype=np.float64), 0.0, 1.0)
        total = float(q.sum())
        if total > 1.0:
            q = q / total
        return ProposalRow(vertex, edge_indices, tuple(float(x) for x in q))


@dataclass(frozen=True)
class ProposalTable:
    rows: tuple[ProposalRow, ...]

    def __post_init__(self) -> None:
        seen = set()
        for row in self.rows:
            if row.vertex in seen:
                raise StructuralError(f"duplicate row for vertex {row.vertex}")
            seen.add(row.vertex)

    def row_of(self, v: int) -> Optional[ProposalRow]:
        for row in self.rows:
            if row.vertex == v:
                return row
        return None


@dataclass(frozen=True)
class VimOutcome:
    matching: Matching
    proposals: tuple[tuple[int, int], ...]  # (A-vertex, proposed edge) pairs

    def __post_init__(self) -> None:
        proposed = {e for _v, e in self.proposals}
        for e in self.matching.edges:
            if e not in proposed:
                raise StructuralError("matched edge was never proposed")


def run_base_matcher(
    alg: str, graph: Graph, mask: np.ndarray, side: Optional[np.ndarray] = None
) -> set[int]:
    """Matched edge indices of the deterministic base procedure on a mask."""
    if alg == ALG_GREEDY:
        idx = np.nonzero(mask)[0]
        used = np.zeros(graph.n, dtype=bool)
        out = set()
        for e in idx.tolist():
            u, v = graph.edges[e]
            if not used[u] and not used[v]:
                used[u] = used[v] = True
                out.add(e)
        return out
    if side is None:
        sides = bipartition(graph)
        if sides is None:
            raise StructuralError(f"{alg} needs a bipartite graph")
        side = sides.side
    if alg == ALG_HK:
        _pair, pedge, _size = hk_on_mask(graph, side, mask)
        return {e for e in pedge if e >= 0}
    if alg == ALG_LEX:
        return _lex_min_max(graph, side, mask)
    raise ParameterError(f"unknown base matcher {alg!r}")


def _lex_min_max(graph: Graph, side: np.ndarray, mask: np.ndarray) -> set[int]:
    """Lexicographically smallest maximum matching, in edge-index order.

    Greedy forcing: keep edge e iff some maximum matching extends the kept
    set plus e.  Feasibility check removes the kept endpoints and asks
    whether the remainder still reaches the required size.  Quadratic in m
    times a matching run; intended for small graphs.
    """
    _p, _pe, target = hk_on_mask(graph, side, mask)
    kept: list[int] = []
    blocked = np.zeros(graph.n, dtype=bool)
    for e in np.nonzero(mask)[0].tolist():
        u, v = graph.edges[e]
        if blocked[u] or blocked[v]:
            continue
        trial_blocked = blocked.copy()
        trial_blocked[u] = trial_blocked[v] = True
        sub = mask & ~trial_blocked[graph.edge_u] & ~trial_blocked[graph.edge_v]
        _p, _pe, rest = hk_on_mask(graph, side, sub)
        if len(kept) + 1 + rest == target:
            kept.append(e)
            blocked = trial_blocked
            if len(kept) == target:
                break
    return set(kept)


def conditional_match_probs(
    alg: str,
    graph: Graph,
    p: float,
    v: int,
    profile: EdgeStatusProfile,
    t: int,
    seed: int,
) -> ProposalRow:
    """Sampled estimate of Pr[e in M_A | profile] for each edge e at v.

    Fixes v's edges to the profile and redraws every other edge fresh each
    sample; edge independence makes that the correct conditional law.
    """
    own = profile.edge_indices
    if own != tuple(graph.incident_edges(v)):
        raise StructuralError("profile does not match the vertex's incidence")
    if t < 1:
        raise ParameterError("sample count must be positive")
    side = None
    if alg != ALG_GREEDY:
        sides = bipartition(graph)
        if sides is None:
            raise StructuralError(f"{alg} needs a bipartite graph")
        side = sides.side
    own_arr = np.array(own, dtype=np.int64)
    fixed = np.array(profile.realized, dtype=bool)
    counts = np.zeros(len(own), dtype=np.int64)
    for s in range(t):
        mask = rng.bernoulli_mask(rng.derive_seed(seed, _TAG_COND, s), graph.m, p)
        mask[own_arr] = fixed
        matched = run_base_matcher(alg, graph, mask, side)
        for k, e in enumerate(own):
            if e in matched:
                counts[k] += 1
    return ProposalRow.from_estimates(v, own, counts / float(t))


class ExactRowCache:
    """Exact conditional rows by weighted enumeration, memoized per profile.

    Enumerates only the non-v edges inside v's connected component; the base
    procedures are component-local, so edges elsewhere cannot change whether
    one of v's edges gets matched.  Enumerations above `max_bits` free edges
    raise CapacityError.
    """

    def __init__(self, alg: str, graph: Graph, p: float, max_bits: int = 20):
        self.alg = alg
        self.graph = graph
        self.p = p
        self.max_bits = max_bits
        self.side: Optional[np.ndarray] = None
        if alg != ALG_GREEDY:
            sides = bipartition(graph)
            if sides is None:
                raise StructuralError(f"{alg} needs a bipartite graph")
            self.side = sides.side
        self._component = self._label_components(graph)
        self._rows: dict[tuple[int, tuple[bool, ...]], ProposalRow] = {}

    @staticmethod
    def _label_components(graph: Graph) -> np.ndarray:
        label = np.full(graph.n, -1, dtype=np.int64)
        nxt = 0
        for root in range(graph.n):
            if label[root] >= 0:
                continue
            label[root] = nxt
            stack = [root]
            while stack:
                x = stack.pop()
                for y, _e in graph.adjacency[x]:
                    if label[y] < 0:
                        label[y] = nxt
                        stack.append(y)
            nxt += 1
        return label

    def row(self, profile: EdgeStatusProfile) -> ProposalRow:
        cached = self._rows.get(profile.key)
        if cached is not None:
            return cached
        g = self.graph
        v = profile.vertex
        own = profile.edge_indices
        if own != tuple(g.incident_edges(v)):
            raise StructuralError("profile does not match the vertex's incidence")
        comp = self._component[v]
        in_comp = self._component[g.edge_u] == comp
        free = np.nonzero(in_comp)[0]
        free = np.array([e for e in free.tolist() if e not in set(own)], dtype=np.int64)
        if len(free) > self.max_bits:
            raise CapacityError(
                f"exact row needs 2^{len(free)} enumerations (cap 2^{self.max_bits})"
            )
        base = np.zeros(g.m, dtype=bool)
        base[np.array(own, dtype=np.int64)] = np.array(profile.realized, dtype=bool)
        acc = np.zeros(len(own), dtype=np.float64)
        p = self.p
        for bits in range(1 << len(free)):
            mask = base.copy()
            k = 0
            for j, e in enumerate(free.tolist()):
                if bits >> j & 1:
                    mask[e] = True
                    k += 1
            weight = (p**k) * ((1.0 - p) ** (len(free) - k))
            if weight == 0.0:
                continue
            matched = run_base_matcher(self.alg, g, mask, self.side)
            for idx, e in enumerate(own):
                if e in matched:
                    acc[idx] += weight
        row = ProposalRow.from_estimates(v, own, acc)
        self._rows[profile.key] = row
        return row


def vim_round(realization: Realization, table: ProposalTable, seed: int) -> VimOutcome:
    """One proposal round: A-vertices draw, B-vertices keep lowest proposer."""
    g = realization.parent
    proposals: list[tuple[int, int]] = []
    best_proposer: dict[int, tuple[int, int]] = {}
    for row in table.rows:
        if not row.edge_indices:
            continue
        u = rng.uniform_at(rng.derive_seed(seed, _TAG_PROPOSE, row.vertex), 0)
        acc = 0.0
        chosen = -1
        for e, q in zip(row.edge_indices, row.probs):
            acc += q
            if u < acc:
                chosen = e
                break
        if chosen < 0:
            continue
        proposals.append((row.vertex, chosen))
        a, b = g.edges[chosen]
        other = b if a == row.vertex else a
        cur = best_proposer.get(other)
        if cur is None or row.vertex < cur[0]:
            best_proposer[other] = (row.vertex, chosen)
    edges = tuple(e for _v, e in best_proposer.values())
    return VimOutcome(Matching(g, edges), tuple(proposals))


def downsample_matching(m: Matching, epsilon: float, seed: int) -> Matching:
    """Keep each matched edge independently with probability 1 - epsilon."""
    if not (0.0 <= epsilon <= 1.0):
        raise ParameterError("epsilon must lie in [0, 1]")
    keep = rng.bernoulli_mask(
        rng.derive_seed(seed, _TAG_DOWNSAMPLE), len(m.edges), 1.0 - epsilon
    )
    return Matching(m.parent, tuple(e for e, k in zip(m.edges, keep) if k))


@dataclass(frozen=True)
class VimTrialStats:
    """Aggregates over full pipeline runs (realize, exact rows, propose)."""

    trials: int
    a_vertices: tuple[int, ...]
    b_vertices: tuple[int, ...]
    mean_base_size: float
    mean_vim_size: float
    base_match_freq: np.ndarray  # per vertex, Pr[v in M_A]
    propose_freq: np.ndarray  # per vertex (A side only), Pr[v proposes]
    vim_match_freq: np.ndarray  # per vertex, Pr[v in M_B]
    pair_joint_freq: np.ndarray  # |A| x |B|, Pr[v proposes and u in M_B]


def _a_b_split(graph: Graph, a_side: int) -> tuple[np.ndarray, np.ndarray]:
    sides = bipartition(graph)
    if sides is None:
        raise StructuralError("vim needs a bipartite graph")
    a = np.nonzero(sides.side == a_side)[0]
    b = np.nonzero(sides.side != a_side)[0]
    return a, b


def run_vim_trials(
    graph: Graph,
    alg: str,
    p: float,
    trials: int,
    seed: int,
    a_side: int = 0,
    max_bits: int = 20,
) -> VimTrialStats:
    """Full pipeline, exact conditional rows, per-trial derived seeds."""
    if trials < 1:
        raise ParameterError("trials must be positive")
    a_vs, b_vs = _a_b_split(graph, a_side)
    cache = ExactRowCache(alg, graph, p, max_bits=max_bits)
    side = cache.side
    base_hits = np.zeros(graph.n, dtype=np.int64)
    vim_hits = np.zeros(graph.n, dtype=np.int64)
    prop_hits = np.zeros(graph.n, dtype=np.int64)
    joint = np.zeros((len(a_vs), len(b_vs)), dtype=np.int64)
    base_total = 0
    vim_total = 0
    a_pos = {int(v): k for k, v in enumerate(a_vs)}
    b_pos = {int(u): k for k, u in enumerate(b_vs)}
    for s in range(trials):
        mask = rng.bernoulli_mask(rng.derive_seed(seed, _TAG_TRIAL, s), graph.m, p)
        matched = run_base_matcher(alg, graph, mask, side)
        base_total += len(matched)
        for e in matched:
            u, v = graph.edges[e]
            base_hits[u] += 1
            base_hits[v] += 1
        rows = tuple(cache.row(profile_of(graph, int(v), mask)) for v in a_vs)
        outcome = vim_round(
            Realization(graph, mask, p),
            ProposalTable(rows),
            rng.derive_seed(seed, _TAG_PROPOSE, s),
        )
        vim_total += outcome.matching.size
        prop_vec = np.zeros(len(a_vs), dtype=bool)
        for v, _e in outcome.proposals:
            prop_hits[v] += 1
            prop_vec[a_pos[v]] = True
        in_mb = np.zeros(len(b_vs), dtype=bool)
        for e in outcome.matching.edges:
            u, v = graph.edges[e]
            vim_hits[u] += 1
            vim_hits[v] += 1
            for x in (u, v):
                k = b_pos.get(int(x))
                if k is not None:
                    in_mb[k] = True
        joint += np.outer(prop_vec, in_mb)
    t = float(trials)
    return VimTrialStats(
        trials=trials,
        a_vertices=tuple(int(v) for v in a_vs),
        b_vertices=tuple(int(u) for u in b_vs),
        mean_base_size=base_total / t,
        mean_vim_size=vim_total / t,
        base_match_freq=base_hits / t,
        propose_freq=prop_hits / t,
        vim_match_freq=vim_hits / t,
        pair_joint_freq=joint / t,
    )


def independence_stats(
    graph: Graph,
    alg: str,
    p: float,
    trials: int,
    seed: int,
    a_side: int = 0,
    stats: Optional[VimTrialStats] = None,
) -> list[tuple[int, int, float]]:
    """Empirical covariance of (v proposes) and (u in M_B) per non-adjacent pair."""
    if stats is None:
        stats = run_vim_trials(graph, alg, p, trials, seed, a_side=a_side)
    adj = {
        (min(u, v), max(u, v)) for u, v in graph.edges
    }
    out: list[tuple[int, int, float]] = []
    for i, v in enumerate(stats.a_vertices):
        for j, u in enumerate(stats.b_vertices):
            if (min(u, v), max(u, v)) in adj:
                continue
            cov = stats.pair_joint_freq[i, j] - stats.propose_freq[v] * stats.vim_match_freq[u]
            out.append((v, u, float(cov)))
    return out
