import math

import numpy as np
import pytest

from oracles import brute_max_matching
from stochcover.errors import ParameterError, StructuralError
from stochcover.graphs import EdgePartition, Graph
from stochcover.instances import gen_er_bipartite, gen_perfect_matching
from stochcover.partition import (
    MarginalEstimate,
    MatchingPolicy,
    PartitionConfig,
    PolicyComponent,
    build_partition,
    estimate_marginals,
    heavy_edges,
    heavy_threshold,
    outcome_from_text,
    outcome_to_text,
    policy_matching_sizes,
    policy_objective,
)


def all_s_policy(graph):
    comp = PolicyComponent(in_q=(False,) * graph.m)
    return MatchingPolicy(graph, ((1.0, comp),))


def test_objective_and_threshold():
    assert policy_objective(np.array([1.0, 1.0]), 0.5) == pytest.approx(1.0)
    assert policy_objective(np.zeros(3), 0.9) == 0.0
    assert heavy_threshold(0.5, 0.3) == pytest.approx(0.075)


def test_policy_validation():
    g = Graph(3, ((0, 1), (1, 2)))
    comp = PolicyComponent(in_q=(False, False))
    with pytest.raises(StructuralError):
        MatchingPolicy(g, ())
    with pytest.raises(StructuralError):
        MatchingPolicy(g, ((0.5, comp), (0.4, comp)))
    with pytest.raises(StructuralError):
        MatchingPolicy(g, ((1.0, PolicyComponent(in_q=(False,))),))
    with pytest.raises(StructuralError):
        MatchingPolicy(g, ((1.0, PolicyComponent(in_q=(False, False), routine="nope")),))


def test_component_priorities_permute():
    comp = PolicyComponent(in_q=(False,) * 6, perm_seed=3)
    prio = comp.priorities(6)
    assert sorted(prio.tolist()) == list(range(6))
    assert PolicyComponent(in_q=(False,) * 6).priorities(6) is None


def test_with_exclusions_merges():
    g = Graph(3, ((0, 1), (1, 2)))
    pol = all_s_policy(g).with_exclusions(frozenset({1}))
    pol = pol.with_exclusions(frozenset({0}))
    assert pol.components[0][1].exclude == frozenset({0, 1})


def test_config_validation():
    with pytest.raises(ParameterError):
        PartitionConfig(epsilon=0.0, p=0.5)
    with pytest.raises(ParameterError):
        PartitionConfig(epsilon=0.5, p=0.0)
    with pytest.raises(ParameterError):
        PartitionConfig(epsilon=0.5, p=0.5, max_rounds=0)
    with pytest.raises(ParameterError):
        PartitionConfig(epsilon=0.5, p=0.5, samples_per_round=10)


def test_estimate_marginals_validation():
    g = Graph(3, ((0, 1), (1, 2)))
    part = EdgePartition(g, np.zeros(2, dtype=bool))
    other = Graph(3, ((0, 1), (1, 2)))
    with pytest.raises(ParameterError):
        estimate_marginals(all_s_policy(g), part, g, 0.5, 0, seed=1)
    with pytest.raises(StructuralError):
        estimate_marginals(all_s_policy(other), EdgePartition(other, np.zeros(2, dtype=bool)), g, 0.5, 100, seed=1)


def test_pure_s_policy_is_deterministic():
    # with nothing queried the realization never matters, so every estimate
    # is exactly 0 or 1 and the total equals the maximum matching size
    g = gen_er_bipartite(5, 5, 0.4, seed=2).graph
    part = EdgePartition(g, np.zeros(g.m, dtype=bool))
    est = estimate_marginals(all_s_policy(g), part, g, 0.5, 300, seed=7)
    assert set(np.unique(est.q)) <= {0.0, 1.0}
    assert est.q.sum() == pytest.approx(brute_max_matching(g))


def test_marginal_sum_matches_enumerated_expectation():
    # queried edges flip per draw; the policy still returns a maximum
    # matching of its view, so the marginals must sum to E[max matching]
    g = Graph(5, ((0, 3), (1, 3), (1, 4), (2, 4)))
    in_q = np.array([True, False, True, True])
    part = EdgePartition(g, in_q)
    comp = PolicyComponent(in_q=tuple(bool(b) for b in in_q))
    pol = MatchingPolicy(g, ((1.0, comp),))
    p, t = 0.6, 4000
    est = estimate_marginals(pol, part, g, p, t, seed=11)

    expected = 0.0
    for bits in range(1 << g.m):
        mask = np.array([(bits >> e) & 1 == 1 for e in range(g.m)])
        k = int(mask.sum())
        view = ~in_q | (mask & in_q)
        expected += (p**k) * ((1 - p) ** (g.m - k)) * brute_max_matching(g, view)
    se = 3.0 * math.sqrt(2.0 * 2.0 / t)  # matching size is at most 2 here
    assert abs(est.q.sum() - expected) <= se


def test_mixture_marginals_average():
    g = gen_perfect_matching(8, seed=0).graph
    part = EdgePartition(g, np.zeros(g.m, dtype=bool))
    comp_s = PolicyComponent(in_q=(False,) * g.m)
    comp_q = PolicyComponent(in_q=(True,) * g.m)
    mix = MatchingPolicy(g, ((0.5, comp_s), (0.5, comp_q)))
    p = 0.4
    est = estimate_marginals(mix, part, g, p, 20000, seed=3)
    # component s matches every edge always, component q only when realized
    assert np.allclose(est.q, 0.5 * 1.0 + 0.5 * p, atol=3 * est.half_width)


def test_edgeless_graph_terminates_immediately():
    g = Graph(4, ())
    out = build_partition(g, PartitionConfig(epsilon=0.5, p=0.5, samples_per_round=100))
    assert out.termination == "case1"
    assert out.rounds_used == 1
    assert out.partition.q_size == 0
    assert out.mu_hat == 0.0


def test_single_edge_moves_into_q():
    g = Graph(2, ((0, 1),))
    out = build_partition(g, PartitionConfig(epsilon=0.5, p=0.5, samples_per_round=200, seed=5))
    assert out.termination == "case1"
    assert out.partition.q_size == 1
    assert out.diagnostics["max_s_marginal"] == 0.0


def test_perfect_matching_all_edges_queried():
    g = gen_perfect_matching(20, seed=0).graph
    out = build_partition(g, PartitionConfig(epsilon=0.5, p=0.5, samples_per_round=400, seed=2))
    assert out.termination == "case1"
    assert out.partition.q_size == g.m
    # every edge had marginal 1 in round one, far above the threshold
    assert len(out.chain) == 2


def test_case1_can_exclude_a_light_heavy_edge():
    # star sharing nothing with a large matching: after the first growth
    # round one S star edge keeps marginal 1, but its mass is below
    # epsilon * p * mu, so the builder stops and excludes it instead
    edges = [(0, k) for k in range(1, 6)]
    edges += [(6 + 2 * i, 7 + 2 * i) for i in range(19)]
    g = Graph(44, tuple(edges))
    cfg = PartitionConfig(epsilon=0.4, p=0.4, samples_per_round=500, seed=9)
    out = build_partition(g, cfg)
    assert out.termination == "case1"
    excluded = set()
    for _w, comp in out.policy.components:
        excluded |= comp.exclude
    assert excluded, "expected the surviving heavy star edge to be excluded"
    assert all(not out.partition.in_q[e] for e in excluded)
    assert out.diagnostics["max_s_marginal"] <= heavy_threshold(0.4, 0.4)


def test_objective_trace_reported_per_kept_round():
    g = gen_er_bipartite(6, 6, 0.3, seed=1).graph
    cfg = PartitionConfig(epsilon=0.3, p=0.5, samples_per_round=800, seed=4)
    out = build_partition(g, cfg)
    assert len(out.objective_trace) == len(out.chain)
    assert out.rounds_used >= len(out.chain)
    assert all(math.isfinite(x) for x in out.objective_trace)


def test_degree_cap_respected():
    g = gen_er_bipartite(8, 8, 0.5, seed=3).graph
    cfg = PartitionConfig(epsilon=0.3, p=0.5, samples_per_round=400, seed=1, max_rounds=6)
    out = build_partition(g, cfg)
    cap = cfg.max_rounds * out.diagnostics["per_round_degree_cap"]
    assert int(g.degree_of_mask(out.partition.in_q).max()) <= cap


def test_build_is_seed_deterministic():
    g = gen_er_bipartite(6, 6, 0.4, seed=6).graph
    cfg = PartitionConfig(epsilon=0.4, p=0.5, samples_per_round=300, seed=12)
    a = build_partition(g, cfg)
    b = build_partition(g, cfg)
    assert outcome_to_text(a) == outcome_to_text(b)


def test_heavy_edges_only_looks_at_s():
    g = gen_perfect_matching(6, seed=0).graph
    part = EdgePartition(g, np.array([True, False, False]))
    est = MarginalEstimate(g, np.array([0.9, 0.9, 0.01]), 1000)
    heavy = heavy_edges(est, part, 0.5, 0.5)
    assert heavy.tolist() == [1]


def test_policy_matching_sizes_never_beats_exact():
    g = gen_er_bipartite(7, 7, 0.35, seed=8).graph
    out = build_partition(g, PartitionConfig(epsilon=0.3, p=0.5, samples_per_round=500, seed=3))
    mean_pol, mean_opt = policy_matching_sizes(out.policy, out.partition, g, 0.5, 400, seed=21)
    assert mean_pol <= mean_opt + 1e-9
    assert mean_opt > 0


def test_policy_matching_sizes_needs_bipartite():
    g = Graph(3, ((0, 1), (1, 2), (0, 2)))
    part = EdgePartition(g, np.zeros(3, dtype=bool))
    comp = PolicyComponent(in_q=(False, False, False), routine="greedy_maximal")
    pol = MatchingPolicy(g, ((1.0, comp),))
    with pytest.raises(StructuralError):
        policy_matching_sizes(pol, part, g, 0.5, 10, seed=0)


def test_serialization_round_trip():
    g = gen_er_bipartite(6, 6, 0.25, seed=3).graph
    out = build_partition(g, PartitionConfig(epsilon=0.3, p=0.5, samples_per_round=300, seed=7))
    text = outcome_to_text(out)
    back = outcome_from_text(text, g)
    assert np.array_equal(back.partition.in_q, out.partition.in_q)
    assert back.termination == out.termination
    assert back.rounds_used == out.rounds_used
    assert back.mu_hat == out.mu_hat
    assert back.objective_trace == out.objective_trace
    assert back.policy.components == out.policy.components
    assert outcome_to_text(back) == text


def test_serialization_rejects_mismatch():
    g = gen_er_bipartite(6, 6, 0.25, seed=3).graph
    out = build_partition(g, PartitionConfig(epsilon=0.3, p=0.5, samples_per_round=300, seed=7))
    text = outcome_to_text(out)
    wrong = gen_perfect_matching(8, seed=0).graph
    with pytest.raises(StructuralError):
        outcome_from_text(text, wrong)
    with pytest.raises(StructuralError):
        outcome_from_text("something else\n", g)
