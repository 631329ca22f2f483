"""Non-adaptive query strategies behind one plan/respond interface.

A strategy first commits to a queried edge set from the base graph alone
(plan), then receives realized/unrealized answers for exactly those edges
and produces either a vertex cover or a matching (respond).  Respond never
sees the realization of unqueried edges, which is what makes the whole
pipeline non-adaptive: covers must therefore protect every unqueried edge
unconditionally.

Catalog:
  general_vc            water-filling commit set, works on any graph
  bipartite_vc          partition builder + exact cover of realized-Q union S
  mc_matching           union of maximum matchings over seeded mock realizations
  one_plus_eps_vc       pluggable inner matcher's queries + exact cover
  random_query_baseline s random incident edges per vertex + exact cover
  query_nothing         no queries, cover of the whole base graph
  query_everything      query all edges, exact cover of the realization
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from .errors import ApplicabilityError, ParameterError, StructuralError
from .filling import GeneralVcPlan, general_vc_cover, general_vc_plan
from .graphs import Graph, bipartition
from .matching import hk_on_mask, konig_cover_from_pairs, mvc_general_on_mask
from .partition import PartitionConfig, PartitionOutcome, build_partition
from . import rng

__all__ = [
    "StrategyParams",
    "QueryPlan",
    "StrategyAnswer",
    "STRATEGY_IDS",
    "strategy_kind",
    "is_bipartite_only",
    "plan_strategy",
    "respond_strategy",
    "mc_realization_count",
]

_TAG_MC = 31
_TAG_RQB = 32
_TAG_PARTITION = 33

GENERAL_OPT_BUDGET = 64  # non-isolated-vertex cap for exact general covers


@dataclass(frozen=True)
class StrategyParams:
    p: float
    epsilon: float = 0.5
    seed: int = 0
    overrides: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0.0 < self.p <= 1.0):
            raise ParameterError("p must lie in (0, 1]")

    def over(self, key: str, default):
        return self.overrides.get(key, default)


@dataclass(frozen=True)
class QueryPlan:
    strategy: str
    graph: Graph
    params: StrategyParams
    queried: np.ndarray
    payload: Any = None

    @property
    def queried_indices(self) -> np.ndarray:
        return np.nonzero(self.queried)[0]

    @property
    def total_queries(self) -> int:
        return int(np.count_nonzero(self.queried))

    @property
    def max_per_vertex_queries(self) -> int:
        if self.graph.m == 0 or not self.queried.any():
            return 0
        return int(self.graph.degree_of_mask(self.queried).max())


@dataclass(frozen=True)
class StrategyAnswer:
    kind: str  # "cover" | "matching"
    cover: Optional[np.ndarray] = None
    matched_edges: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("cover", "matching"):
            raise StructuralError(f"unknown answer kind {self.kind!r}")
        if self.kind == "cover" and self.cover is None:
            raise StructuralError("cover answer without a cover")

    @property
    def size(self) -> int:
        if self.kind == "cover":
            return int(np.count_nonzero(self.cover))
        return len(self.matched_edges)


def _require_bipartite(graph: Graph, strategy: str) -> np.ndarray:
    sides = bipartition(graph)
    if sides is None:
        raise ApplicabilityError(f"{strategy} requires a bipartite graph")
    return sides.side


def _warm_hk_on_s(graph: Graph, side: np.ndarray, s_mask: np.ndarray):
    pair, pedge, _size = hk_on_mask(graph, side, s_mask)
    return pair, pedge


@dataclass(frozen=True)
class _HalfStochasticPayload:
    """State for strategies answering with an exact cover of realized-Q union S."""

    side: Optional[np.ndarray]
    s_mask: np.ndarray
    warm_pair: Optional[list] = None
    warm_pedge: Optional[list] = None
    extra: Any = None


def _respond_half_stochastic(
    plan: QueryPlan, realized_mask: np.ndarray
) -> StrategyAnswer:
    payload: _HalfStochasticPayload = plan.payload
    g = plan.graph
    h_mask = payload.s_mask | realized_mask
    if payload.side is not None:
        pair, _pedge, _size = hk_on_mask(
            g,
            payload.side,
            h_mask,
            init_pair=payload.warm_pair,
            init_pair_edge=payload.warm_pedge,
        )
        cover = konig_cover_from_pairs(g, payload.side, h_mask, pair, strict=True)
    else:
        cover, _size = mvc_general_on_mask(g, h_mask, GENERAL_OPT_BUDGET)
    return StrategyAnswer("cover", cover=cover)


# --- general_vc ---------------------------------------------------------------


def _plan_general_vc(graph: Graph, params: StrategyParams) -> QueryPlan:
    plan = general_vc_plan(
        graph,
        params.epsilon,
        params.p,
        t_constant=float(params.over("t_constant", 1.0 / 64.0)),
        t=params.over("t", None),
    )
    return QueryPlan("general_vc", graph, params, plan.queried, plan)


def _respond_general_vc(plan: QueryPlan, answers: np.ndarray) -> StrategyAnswer:
    inner: GeneralVcPlan = plan.payload
    return StrategyAnswer("cover", cover=general_vc_cover(inner, answers))


# --- bipartite_vc -------------------------------------------------------------


def _plan_bipartite_vc(graph: Graph, params: StrategyParams) -> QueryPlan:
    side = _require_bipartite(graph, "bipartite_vc")
    cfg = PartitionConfig(
        epsilon=params.epsilon,
        p=params.p,
        max_rounds=int(params.over("partition_rounds", 50)),
        samples_per_round=params.over("partition_t", None),
        margin=params.over("partition_margin", None),
        seed=rng.derive_seed(params.seed, _TAG_PARTITION),
        max_swaps=int(params.over("partition_swaps", 12)),
    )
    outcome = build_partition(graph, cfg)
    queried = outcome.partition.in_q.copy()
    s_mask = ~queried
    pair, pedge = _warm_hk_on_s(graph, side, s_mask)
    payload = _HalfStochasticPayload(side, s_mask, pair, pedge, extra=outcome)
    return QueryPlan("bipartite_vc", graph, params, queried, payload)


# --- mc_matching --------------------------------------------------------------


def mc_realization_count(p: float, r_constant: float = 4.0) -> int:
    """Number of mock realizations whose matchings get unioned into Q."""
    if not (0.0 < p <= 1.0):
        raise ParameterError("p must lie in (0, 1]")
    return max(1, int(math.ceil(r_constant * math.log(1.0 / p) / p)))


def _plan_mc_matching(graph: Graph, params: StrategyParams) -> QueryPlan:
    side = _require_bipartite(graph, "mc_matching")
    r_override = params.over("R", None)
    if r_override is not None:
        r = int(r_override)
    else:
        r = mc_realization_count(params.p, float(params.over("R_constant", 4.0)))
    queried = np.zeros(graph.m, dtype=bool)
    for i in range(r):
        mock = rng.bernoulli_mask(
            rng.derive_seed(params.seed, _TAG_MC, i), graph.m, params.p
        )
        _pair, pedge, _size = hk_on_mask(graph, side, mock)
        for e in pedge:
            if e >= 0:
                queried[e] = True
    return QueryPlan("mc_matching", graph, params, queried, (side, r))


def _respond_mc_matching(plan: QueryPlan, realized_mask: np.ndarray) -> StrategyAnswer:
    side, _r = plan.payload
    _pair, pedge, _size = hk_on_mask(plan.graph, side, realized_mask)
    matched = tuple(sorted({e for e in pedge if e >= 0}))
    return StrategyAnswer("matching", matched_edges=matched)


# --- one_plus_eps_vc ----------------------------------------------------------


def _plan_one_plus_eps_vc(graph: Graph, params: StrategyParams) -> QueryPlan:
    side = _require_bipartite(graph, "one_plus_eps_vc")
    if params.epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    inner_id = str(params.over("inner", "mc_matching"))
    if inner_id not in STRATEGY_IDS:
        raise ParameterError(f"unknown inner matcher {inner_id!r}")
    r_scale = float(params.over("r_scale", 3.0))
    inner_params = StrategyParams(
        p=params.p,
        epsilon=params.epsilon,
        seed=rng.derive_seed(params.seed, _TAG_MC),
        overrides={"R_constant": 4.0 * r_scale},
    )
    inner_plan = plan_strategy(inner_id, graph, inner_params)
    queried = inner_plan.queried.copy()
    s_mask = ~queried
    pair, pedge = _warm_hk_on_s(graph, side, s_mask)
    # accuracy target the inner matcher is standing in for; recorded only
    delta = params.epsilon * params.p ** (2.0 / params.epsilon + 2.0) / 4.0
    payload = _HalfStochasticPayload(
        side, s_mask, pair, pedge, extra={"inner": inner_id, "delta": delta}
    )
    return QueryPlan("one_plus_eps_vc", graph, params, queried, payload)


# --- random_query_baseline ----------------------------------------------------


def _plan_random_query_baseline(graph: Graph, params: StrategyParams) -> QueryPlan:
    s = int(params.over("s", 3))
    if s < 0:
        raise ParameterError("s must be nonnegative")
    queried = np.zeros(graph.m, dtype=bool)
    for v in range(graph.n):
        incident = graph.incident_edges(v)
        if not incident:
            continue
        picked = rng.sample_without_replacement(
            rng.derive_seed(params.seed, _TAG_RQB, v), incident, min(s, len(incident))
        )
        for e in picked:
            queried[e] = True
    sides = bipartition(graph)
    side = sides.side if sides is not None else None
    s_mask = ~queried
    if side is not None:
        pair, pedge = _warm_hk_on_s(graph, side, s_mask)
    else:
        pair = pedge = None
    payload = _HalfStochasticPayload(side, s_mask, pair, pedge)
    return QueryPlan("random_query_baseline", graph, params, queried, payload)


# --- query_nothing / query_everything ------------------------------------------


def _exact_cover_mask(graph: Graph, mask: Optional[np.ndarray]) -> np.ndarray:
    sides = bipartition(graph)
    if sides is not None:
        pair, _pedge, _size = hk_on_mask(graph, sides.side, mask)
        return konig_cover_from_pairs(graph, sides.side, mask, pair, strict=True)
    cover, _size = mvc_general_on_mask(graph, mask, GENERAL_OPT_BUDGET)
    return cover


def _plan_query_nothing(graph: Graph, params: StrategyParams) -> QueryPlan:
    cover = _exact_cover_mask(graph, None)
    return QueryPlan(
        "query_nothing", graph, params, np.zeros(graph.m, dtype=bool), cover
    )


def _respond_query_nothing(plan: QueryPlan, realized_mask: np.ndarray) -> StrategyAnswer:
    return StrategyAnswer("cover", cover=plan.payload.copy())


def _plan_query_everything(graph: Graph, params: StrategyParams) -> QueryPlan:
    return QueryPlan(
        "query_everything", graph, params, np.ones(graph.m, dtype=bool), None
    )


def _respond_query_everything(
    plan: QueryPlan, realized_mask: np.ndarray
) -> StrategyAnswer:
    return StrategyAnswer("cover", cover=_exact_cover_mask(plan.graph, realized_mask))


# --- registry -----------------------------------------------------------------

_REGISTRY = {
    "general_vc": (_plan_general_vc, _respond_general_vc, "cover", False),
    "bipartite_vc": (_plan_bipartite_vc, _respond_half_stochastic, "cover", True),
    "mc_matching": (_plan_mc_matching, _respond_mc_matching, "matching", True),
    "one_plus_eps_vc": (_plan_one_plus_eps_vc, _respond_half_stochastic, "cover", True),
    "random_query_baseline": (
        _plan_random_query_baseline,
        _respond_half_stochastic,
        "cover",
        False,
    ),
    "query_nothing": (_plan_query_nothing, _respond_query_nothing, "cover", False),
    "query_everything": (
        _plan_query_everything,
        _respond_query_everything,
        "cover",
        False,
    ),
}

STRATEGY_IDS = tuple(_REGISTRY)


def strategy_kind(strategy: str) -> str:
    _check_known(strategy)
    return _REGISTRY[strategy][2]


def is_bipartite_only(strategy: str) -> bool:
    _check_known(strategy)
    return _REGISTRY[strategy][3]


def _check_known(strategy: str) -> None:
    if strategy not in _REGISTRY:
        raise ParameterError(f"unknown strategy {strategy!r}")


def plan_strategy(strategy: str, graph: Graph, params: StrategyParams) -> QueryPlan:
    _check_known(strategy)
    plan_fn = _REGISTRY[strategy][0]
    return plan_fn(graph, params)


def respond_strategy(plan: QueryPlan, answers: np.ndarray) -> StrategyAnswer:
    """Answer a realization restricted to the plan's queried edges.

    `answers` is aligned to the queried edges in increasing edge-index
    order; respond reconstructs the full-length realized mask (unqueried
    entries stay False, they are simply unknown) and dispatches.
    """
    _check_known(plan.strategy)
    answers = np.asarray(answers, dtype=bool)
    q_idx = plan.queried_indices
    if answers.shape != (len(q_idx),):
        raise StructuralError(
            f"expected {len(q_idx)} query answers, got shape {answers.shape}"
        )
    respond_fn = _REGISTRY[plan.strategy][1]
    if plan.strategy == "general_vc":
        return respond_fn(plan, answers)
    realized_mask = np.zeros(plan.graph.m, dtype=bool)
    realized_mask[q_idx[answers]] = True
    return respond_fn(plan, realized_mask)
