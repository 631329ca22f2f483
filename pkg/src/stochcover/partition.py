"""Iterative construction of a query partition with light unqueried edges.

The goal: split the edges into a queried set Q and a remainder S so that no
S-edge is likely to appear in a maximum matching of the half-stochastic
graph H (realized Q-edges plus all of S).  Start with Q empty.  Each round
estimates by sampling, for a fixed deterministic matching policy, the
probability that each edge lands in the policy's matching of H; S-edges
whose estimate exceeds epsilon^2 * p are "heavy" and move into Q, and the
process repeats on the grown Q.  It stops when the heavy edges contribute
less than epsilon * p * mu(G) expected matching mass; the returned policy
then simply drops those edges from its output.

Because a sample of H for a larger Q is edgewise contained in the sample for
a smaller Q under shared per-edge draws, a policy recorded in an earlier
round remains valid later (its H is a subgraph).  Components therefore carry
their own queried-edge mask.  After each round the builder also considers
replacing the previous round's policy with the current one, or with the
half-half mixture of the two, whenever the estimated objective improves by
more than a margin; an adopted replacement rebuilds the chain from there.

The objective being tracked is sum_e (q_e - epsilon * q_e^2): expected
matching size minus a concentration penalty, which rewards spreading
matching probability over many edges.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ParameterError, StructuralError
from .graphs import Bipartition, EdgePartition, Graph, bipartition
from .matching import greedy_maximal_matching, hk_on_mask
from . import rng

__all__ = [
    "PolicyComponent",
    "MatchingPolicy",
    "MarginalEstimate",
    "PartitionConfig",
    "PartitionOutcome",
    "estimate_marginals",
    "policy_objective",
    "heavy_edges",
    "heavy_threshold",
    "build_partition",
    "policy_matching_sizes",
    "outcome_to_text",
    "outcome_from_text",
]

_TAG_SAMPLE = 11
_TAG_COMPONENT = 12
_TAG_ROUND = 13
_TAG_PERM = 14

ROUTINE_BIPARTITE = "bipartite_max"
ROUTINE_GREEDY = "greedy_maximal"


@dataclass(frozen=True)
class PolicyComponent:
    """One deterministic matching procedure over its own half-stochastic view.

    `in_q` is the queried-edge mask this component was built against: on a
    shared per-edge realization X, the component sees S-edges plus realized
    Q-edges of ITS OWN partition, which keeps old components valid after the
    builder grows Q.  `exclude` is removed from the output matching, not
    from the input graph.  `perm_seed` permutes edge priorities for
    tie-breaking; None means natural edge-index order.
    """

    in_q: tuple[bool, ...]
    routine: str = ROUTINE_BIPARTITE
    perm_seed: Optional[int] = None
    exclude: frozenset[int] = frozenset()
    round_index: int = 0

    def s_mask(self) -> np.ndarray:
        return ~np.asarray(self.in_q, dtype=bool)

    def priorities(self, m: int) -> Optional[np.ndarray]:
        if self.perm_seed is None:
            return None
        order = rng.permutation(self.perm_seed, m)
        prio = np.empty(m, dtype=np.int64)
        prio[order] = np.arange(m)
        return prio


@dataclass(frozen=True)
class MatchingPolicy:
    """Weighted mixture of deterministic matching components."""

    parent: Graph
    components: tuple[tuple[float, PolicyComponent], ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise StructuralError("policy needs at least one component")
        total = math.fsum(w for w, _c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise StructuralError(f"component weights sum to {total}, not 1")
        for w, comp in self.components:
            if not (0.0 < w <= 1.0):
                raise StructuralError(f"component weight {w} outside (0, 1]")
            if len(comp.in_q) != self.parent.m:
                raise StructuralError("component mask length mismatch")
            if comp.routine not in (ROUTINE_BIPARTITE, ROUTINE_GREEDY):
                raise StructuralError(f"unknown routine {comp.routine!r}")

    def with_exclusions(self, extra: frozenset[int]) -> "MatchingPolicy":
        comps = tuple(
            (w, replace(c, exclude=c.exclude | extra)) for w, c in self.components
        )
        return MatchingPolicy(self.parent, comps)


@dataclass(frozen=True)
class MarginalEstimate:
    """Empirical per-edge matching probabilities from t policy samples."""

    parent: Graph
    q: np.ndarray
    sample_count: int

    @property
    def half_width(self) -> float:
        """Uniform confidence half-width for every per-edge estimate."""
        n = max(self.parent.n, 2)
        return math.sqrt(2.0 * math.log(n) / self.sample_count)

    @property
    def objective_half_width(self) -> float:
        """Worst-case propagation of per-edge error to the objective."""
        return self.parent.m * self.half_width


@dataclass(frozen=True)
class PartitionConfig:
    epsilon: float
    p: float
    max_rounds: int = 50
    samples_per_round: Optional[int] = None
    margin: Optional[float] = None
    seed: int = 0
    max_swaps: int = 12
    full_pairwise: bool = False

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon):
            raise ParameterError("epsilon must be positive")
        if not (0.0 < self.p <= 1.0):
            raise ParameterError("p must lie in (0, 1]")
        if self.max_rounds < 1:
            raise ParameterError("max_rounds must be at least 1")
        if self.samples_per_round is not None and self.samples_per_round < 100:
            raise ParameterError("samples_per_round must be at least 100")

    def resolved_samples(self, n: int) -> int:
        if self.samples_per_round is not None:
            return self.samples_per_round
        tau = (self.epsilon**2) * self.p
        return max(10**4, int(math.ceil(8.0 * math.log(max(n, 2)) / (tau * tau))))


@dataclass(frozen=True)
class PartitionOutcome:
    partition: EdgePartition
    policy: MatchingPolicy
    objective_trace: tuple[float, ...]
    termination: str  # "case1" | "round_cap" | "degree_cap"
    rounds_used: int  # total estimation rounds, including rebuilt ones
    mu_hat: float
    chain: tuple[EdgePartition, ...] = ()
    diagnostics: dict = field(default_factory=dict)


def heavy_threshold(epsilon: float, p: float) -> float:
    return epsilon * epsilon * p


def policy_objective(q: np.ndarray, epsilon: float) -> float:
    """Expected matching size minus the concentration penalty."""
    q = np.asarray(q, dtype=np.float64)
    return float(np.sum(q - epsilon * q * q))


def heavy_edges(
    estimate: MarginalEstimate, partition: EdgePartition, epsilon: float, p: float
) -> np.ndarray:
    """S-edges whose estimated matching probability exceeds epsilon^2 * p."""
    tau = heavy_threshold(epsilon, p)
    return np.nonzero((~partition.in_q) & (estimate.q > tau))[0]


class _ComponentRunner:
    """Cached execution state for one policy component."""

    def __init__(self, graph: Graph, side: Optional[np.ndarray], comp: PolicyComponent):
        self.graph = graph
        self.side = side
        self.comp = comp
        self.s_mask = comp.s_mask()
        self.prio = comp.priorities(graph.m)
        self.exclude = comp.exclude
        self.warm_pair: Optional[list[int]] = None
        self.warm_pedge: Optional[list[int]] = None
        if comp.routine == ROUTINE_BIPARTITE:
            if side is None:
                raise StructuralError("bipartite routine on a graph with no sides")
            idx = np.nonzero(self.s_mask)[0]
            if self.prio is not None:
                idx = idx[np.argsort(self.prio[idx], kind="stable")]
            pair, pedge, _ = hk_on_mask(graph, side, edge_indices=idx.tolist())
            self.warm_pair = pair
            self.warm_pedge = pedge

    def run(self, sample_mask: np.ndarray) -> list[int]:
        """Matched edge indices on this component's view of the shared draw."""
        h_mask = self.s_mask | sample_mask
        idx = np.nonzero(h_mask)[0]
        if self.prio is not None:
            idx = idx[np.argsort(self.prio[idx], kind="stable")]
        if self.comp.routine == ROUTINE_BIPARTITE:
            _pair, pedge, _size = hk_on_mask(
                self.graph,
                self.side,  # type: ignore[arg-type]
                edge_indices=idx.tolist(),
                init_pair=self.warm_pair,
                init_pair_edge=self.warm_pedge,
            )
            lefts_edges = {e for e in pedge if e >= 0}
        else:
            used = np.zeros(self.graph.n, dtype=bool)
            lefts_edges = set()
            edges = self.graph.edges
            for e in idx.tolist():
                u, v = edges[e]
                if not used[u] and not used[v]:
                    used[u] = True
                    used[v] = True
                    lefts_edges.add(e)
        if self.exclude:
            lefts_edges -= self.exclude
        return sorted(lefts_edges)


def _policy_runners(
    graph: Graph, policy: MatchingPolicy, side: Optional[np.ndarray]
) -> list[tuple[float, _ComponentRunner]]:
    return [(w, _ComponentRunner(graph, side, c)) for w, c in policy.components]


def _side_for(graph: Graph, policy: MatchingPolicy) -> Optional[np.ndarray]:
    if any(c.routine == ROUTINE_BIPARTITE for _w, c in policy.components):
        sides = bipartition(graph)
        if sides is None:
            raise StructuralError("bipartite matching routine on an odd cycle")
        return sides.side
    return None


def estimate_marginals(
    policy: MatchingPolicy,
    partition: EdgePartition,
    graph: Graph,
    p: float,
    t: int,
    seed: int,
) -> MarginalEstimate:
    """Sample t shared-draw realizations and count per-edge matching hits.

    Each draw realizes every edge independently with probability p; each
    component interprets the draw through its own queried mask, so the same
    call serves plain policies and cross-round mixtures.  One component is
    picked per draw according to the mixture weights.
    """
    if partition.parent is not graph:
        raise StructuralError("partition does not belong to this graph")
    if t < 1:
        raise ParameterError("sample count must be positive")
    if graph.m == 0:
        return MarginalEstimate(graph, np.zeros(0, dtype=np.float64), t)
    side = _side_for(graph, policy)
    runners = _policy_runners(graph, policy, side)
    weights = np.array([w for w, _r in runners], dtype=np.float64)
    cum = np.cumsum(weights)
    counts = np.zeros(graph.m, dtype=np.int64)
    single = len(runners) == 1
    for s in range(t):
        mask = rng.bernoulli_mask(rng.derive_seed(seed, _TAG_SAMPLE, s), graph.m, p)
        if single:
            runner = runners[0][1]
        else:
            u = rng.uniform_at(rng.derive_seed(seed, _TAG_COMPONENT, s), 0)
            runner = runners[int(np.searchsorted(cum, u, side="right"))][1]
        matched = runner.run(mask)
        if matched:
            counts[matched] += 1
    return MarginalEstimate(graph, counts / float(t), t)


def _mu_hat(graph: Graph, side: Optional[np.ndarray]) -> float:
    """Maximum matching size when bipartite, greedy maximal size otherwise."""
    if graph.m == 0:
        return 0.0
    if side is not None:
        _pair, _pedge, size = hk_on_mask(graph, side)
        return float(size)
    return float(greedy_maximal_matching(graph, range(graph.m)).size)


def build_partition(graph: Graph, cfg: PartitionConfig) -> PartitionOutcome:
    """Grow Q until the heavy S-edges stop mattering (or a cap is reached)."""
    eps, p = cfg.epsilon, cfg.p
    sides = bipartition(graph)
    side = sides.side if sides is not None else None
    routine = ROUTINE_BIPARTITE if side is not None else ROUTINE_GREEDY
    mu = _mu_hat(graph, side)
    margin = cfg.margin if cfg.margin is not None else ((eps * p) ** 10) * mu
    t = cfg.resolved_samples(graph.n)
    tau = heavy_threshold(eps, p)
    per_round_cap = int(math.ceil(1.0 / tau)) if tau > 0 else graph.m
    degree_cap = cfg.max_rounds * per_round_cap

    def fresh(partition: EdgePartition, idx: int) -> MatchingPolicy:
        comp = PolicyComponent(
            in_q=tuple(bool(x) for x in partition.in_q),
            routine=routine,
            round_index=idx,
        )
        return MatchingPolicy(graph, ((1.0, comp),))

    rounds: list[dict] = []
    partitions = [EdgePartition(graph, np.zeros(graph.m, dtype=bool))]
    rounds_used = 0
    swaps = 0
    i = 0

    def estimate_round(idx: int) -> None:
        nonlocal rounds_used
        pol = fresh(partitions[idx], idx)
        est = estimate_marginals(
            pol, partitions[idx], graph, p, t, rng.derive_seed(cfg.seed, _TAG_ROUND, rounds_used)
        )
        rounds.append({"policy": pol, "est": est, "phi": policy_objective(est.q, eps)})
        rounds_used += 1

    termination = "round_cap"
    while True:
        if len(rounds) <= i:
            estimate_round(i)
        cur = rounds[i]

        # consider replacing an earlier round's policy with something better:
        # the current policy itself, or its half-half mixture with the old one
        # (the mixture's marginals are the average, so no new sampling needed)
        if i >= 1 and swaps < cfg.max_swaps:
            prev_idxs = range(i) if cfg.full_pairwise else [i - 1]
            swapped = False
            for j in prev_idxs:
                prev = rounds[j]
                q_mix = 0.5 * (prev["est"].q + cur["est"].q)
                phi_mix = policy_objective(q_mix, eps)
                candidates = [
                    (cur["phi"], cur["policy"], cur["est"]),
                    (
                        phi_mix,
                        _half_mixture(graph, prev["policy"], cur["policy"]),
                        MarginalEstimate(graph, q_mix, cur["est"].sample_count),
                    ),
                ]
                best_phi, best_policy, best_est = max(candidates, key=lambda c: c[0])
                if best_phi > prev["phi"] + margin:
                    rounds[j] = {"policy": best_policy, "est": best_est, "phi": best_phi}
                    del rounds[j + 1 :]
                    del partitions[j + 1 :]
                    swaps += 1
                    i = j
                    swapped = True
                    break
            if swapped:
                continue  # re-run the swap test from the adopted slot

        est = cur["est"]
        heavy = heavy_edges(est, partitions[i], eps, p)
        heavy_mass = float(np.sum(est.q[heavy])) if len(heavy) else 0.0
        if len(heavy) == 0 or heavy_mass < eps * p * mu:
            final_policy = cur["policy"].with_exclusions(frozenset(int(e) for e in heavy))
            termination = "case1"
            break

        new_in_q = partitions[i].in_q.copy()
        new_in_q[heavy] = True
        if int(graph.degree_of_mask(new_in_q).max()) > degree_cap:
            termination = "degree_cap"
            final_policy = cur["policy"]
            break
        if i + 1 >= cfg.max_rounds:
            termination = "round_cap"
            final_policy = cur["policy"]
            break
        partitions.append(EdgePartition(graph, new_in_q))
        i += 1

    final_partition = partitions[i]
    trace = tuple(r["phi"] for r in rounds[: i + 1])
    s_q = rounds[i]["est"].q.copy()
    for _w, comp in final_policy.components:
        if comp.exclude:
            s_q[sorted(comp.exclude)] = 0.0
    s_edges = np.nonzero(~final_partition.in_q)[0]
    diagnostics = {
        "max_s_marginal": float(np.max(s_q[s_edges])) if len(s_edges) else 0.0,
        "swaps": swaps,
        "samples_per_round": t,
        "margin": margin,
        "per_round_degree_cap": per_round_cap,
    }
    return PartitionOutcome(
        partition=final_partition,
        policy=final_policy,
        objective_trace=trace,
        termination=termination,
        rounds_used=rounds_used,
        mu_hat=mu,
        chain=tuple(partitions),
        diagnostics=diagnostics,
    )


def _half_mixture(
    graph: Graph, a: MatchingPolicy, b: MatchingPolicy
) -> MatchingPolicy:
    comps = tuple((0.5 * w, c) for w, c in a.components) + tuple(
        (0.5 * w, c) for w, c in b.components
    )
    return MatchingPolicy(graph, comps)


def policy_matching_sizes(
    policy: MatchingPolicy,
    partition: EdgePartition,
    graph: Graph,
    p: float,
    t: int,
    seed: int,
) -> tuple[float, float]:
    """Mean policy matching size vs mean exact maximum on the same draws.

    The exact side solves the half-stochastic graph of `partition` for each
    shared draw; bipartite graphs only.
    """
    sides = bipartition(graph)
    if sides is None:
        raise StructuralError("exact comparison needs a bipartite graph")
    side = sides.side
    runners = _policy_runners(graph, policy, side)
    weights = np.cumsum([w for w, _r in runners])
    s_mask = ~partition.in_q
    tot_policy = 0
    tot_opt = 0
    for s in range(t):
        mask = rng.bernoulli_mask(rng.derive_seed(seed, _TAG_SAMPLE, s), graph.m, p)
        if len(runners) == 1:
            runner = runners[0][1]
        else:
            u = rng.uniform_at(rng.derive_seed(seed, _TAG_COMPONENT, s), 0)
            runner = runners[int(np.searchsorted(weights, u, side="right"))][1]
        tot_policy += len(runner.run(mask))
        h_mask = s_mask | mask
        _pair, _pedge, size = hk_on_mask(graph, side, h_mask)  # type: ignore[arg-type]
        tot_opt += size
    return tot_policy / t, tot_opt / t


# --- serialization ------------------------------------------------------------


def _mask_to_bits(mask) -> str:
    return "".join("1" if b else "0" for b in mask)


def _bits_to_mask(bits: str) -> np.ndarray:
    return np.array([c == "1" for c in bits], dtype=bool)


def outcome_to_text(outcome: PartitionOutcome) -> str:
    buf = io.StringIO()
    g = outcome.partition.parent
    buf.write("partition-artifact v1\n")
    buf.write(f"n {g.n} m {g.m}\n")
    buf.write(f"termination {outcome.termination}\n")
    buf.write(f"rounds_used {outcome.rounds_used}\n")
    buf.write(f"mu_hat {outcome.mu_hat!r}\n")
    buf.write("objective_trace " + " ".join(repr(x) for x in outcome.objective_trace) + "\n")
    buf.write("in_q " + _mask_to_bits(outcome.partition.in_q) + "\n")
    buf.write(f"components {len(outcome.policy.components)}\n")
    for w, c in outcome.policy.components:
        excl = ",".join(str(e) for e in sorted(c.exclude)) if c.exclude else "-"
        perm = str(c.perm_seed) if c.perm_seed is not None else "-"
        buf.write(
            f"component {w!r} {c.routine} {perm} {excl} {c.round_index} "
            + _mask_to_bits(c.in_q)
            + "\n"
        )
    return buf.getvalue()


def outcome_from_text(text: str, graph: Graph) -> PartitionOutcome:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "partition-artifact v1":
        raise StructuralError("not a partition artifact")
    fields: dict[str, str] = {}
    comps: list[tuple[float, PolicyComponent]] = []
    for ln in lines[1:]:
        key, rest = ln.split(" ", 1)
        if key == "component":
            w, routine, perm, excl, ridx, bits = rest.split(" ")
            comps.append(
                (
                    float(w),
                    PolicyComponent(
                        in_q=tuple(c == "1" for c in bits),
                        routine=routine,
                        perm_seed=None if perm == "-" else int(perm),
                        exclude=frozenset()
                        if excl == "-"
                        else frozenset(int(x) for x in excl.split(",")),
                        round_index=int(ridx),
                    ),
                )
            )
        else:
            fields[key] = rest
    n_m = fields["n"].split()  # the header line reads "n <n> m <m>"
    if int(n_m[0]) != graph.n or int(n_m[2]) != graph.m:
        raise StructuralError("artifact does not match this graph")
    partition = EdgePartition(graph, _bits_to_mask(fields["in_q"]))
    trace = tuple(float(x) for x in fields["objective_trace"].split()) if fields.get(
        "objective_trace", ""
    ).strip() else ()
    return PartitionOutcome(
        partition=partition,
        policy=MatchingPolicy(graph, tuple(comps)),
        objective_trace=trace,
        termination=fields["termination"],
        rounds_used=int(fields["rounds_used"]),
        mu_hat=float(fields["mu_hat"]),
    )
