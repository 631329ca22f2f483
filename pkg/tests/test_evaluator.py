import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import expected_stats_by_enumeration
from stochcover.errors import CapacityError, ParameterError
from stochcover.evaluator import (
    CSV_COLUMNS,
    evaluate_strategies,
    evaluate_strategy,
    exact_expected_stats,
    validity_check,
    write_csv,
)
from stochcover.graphs import Graph, Realization
from stochcover.instances import gen_clique, gen_er, gen_er_bipartite, gen_perfect_matching
from stochcover.strategies import StrategyAnswer, StrategyParams


def test_validity_check_covers():
    g = Graph(3, ((0, 1), (1, 2)))
    real = Realization(g, np.array([True, True]), 0.5)
    good = StrategyAnswer("cover", cover=np.array([False, True, False]))
    assert validity_check(good, real) == 0
    bad = StrategyAnswer("cover", cover=np.array([True, False, False]))
    assert validity_check(bad, real) == 1  # edge (1,2) realized and exposed
    nothing = StrategyAnswer("cover", cover=np.zeros(3, dtype=bool))
    assert validity_check(nothing, real) == 2
    empty = Realization(g, np.zeros(2, dtype=bool), 0.5)
    assert validity_check(nothing, empty) == 0


def test_validity_check_matchings():
    g = Graph(4, ((0, 1), (1, 2), (2, 3)))
    real = Realization(g, np.array([True, False, True]), 0.5)
    assert validity_check(StrategyAnswer("matching", matched_edges=(0, 2)), real) == 0
    assert validity_check(StrategyAnswer("matching", matched_edges=(1,)), real) == 1
    overlap = Realization(g, np.ones(3, dtype=bool), 0.5)
    assert validity_check(StrategyAnswer("matching", matched_edges=(0, 1)), overlap) == 1


def test_exact_stats_triangle_frozen():
    g = gen_clique(3).graph
    stats = exact_expected_stats(g, 0.5)
    assert stats["E_mu"] == pytest.approx(0.875)  # Pr[at least one edge]
    assert stats["E_nu"] == pytest.approx(1.0)


def test_exact_stats_degenerate_inputs():
    g = gen_perfect_matching(6, seed=0).graph
    assert exact_expected_stats(g, 0.0) == {"E_nu": 0.0, "E_mu": 0.0}
    at_one = exact_expected_stats(g, 1.0)
    assert at_one["E_nu"] == 3.0 and at_one["E_mu"] == 3.0
    assert exact_expected_stats(Graph(3, ()), 0.7) == {"E_nu": 0.0, "E_mu": 0.0}
    with pytest.raises(ParameterError):
        exact_expected_stats(g, 1.5)
    big = gen_er_bipartite(10, 10, 0.5, seed=1).graph
    assert big.m > 20
    with pytest.raises(CapacityError):
        exact_expected_stats(big, 0.5)


@settings(max_examples=20, deadline=None)
@given(
    n=st.integers(2, 5),
    prob=st.floats(0.3, 0.9),
    p=st.floats(0.0, 1.0),
    seed=st.integers(0, 30),
)
def test_exact_stats_match_full_enumeration(n, prob, p, seed):
    g = gen_er(n, prob, seed=seed).graph
    stats = exact_expected_stats(g, p)
    e_nu, e_mu = expected_stats_by_enumeration(g, p)
    assert stats["E_nu"] == pytest.approx(e_nu, abs=1e-9)
    assert stats["E_mu"] == pytest.approx(e_mu, abs=1e-9)


def test_query_everything_ratio_is_exactly_one():
    g = gen_er_bipartite(6, 6, 0.4, seed=3).graph
    rep = evaluate_strategy("query_everything", g, StrategyParams(p=0.3), 200, seed=5)
    assert rep.ratio == 1.0
    assert rep.ratio_ci95 == 0.0
    assert rep.validity_failures == 0


def test_matching_strategy_ratio_at_most_one():
    g = gen_er_bipartite(6, 6, 0.4, seed=3).graph
    rep = evaluate_strategy("mc_matching", g, StrategyParams(p=0.3, seed=2), 300, seed=5)
    assert rep.ratio is not None and rep.ratio <= 1.0
    assert rep.validity_failures == 0


def test_common_random_numbers_across_calls():
    g = gen_er_bipartite(5, 5, 0.45, seed=9).graph
    params = StrategyParams(p=0.4, seed=1)
    a = evaluate_strategy("query_nothing", g, params, 150, seed=42)
    b = evaluate_strategy("query_everything", g, params, 150, seed=42)
    # same realizations and same exact solver, so the cover optima agree
    assert a.mean_opt == b.mean_opt
    again = evaluate_strategy("query_nothing", g, params, 150, seed=42)
    assert again.csv_row()[:-1] == a.csv_row()[:-1]


def test_thread_count_does_not_change_results():
    g = gen_er_bipartite(6, 6, 0.35, seed=4).graph
    params = StrategyParams(p=0.4, seed=3)
    ids = ["query_nothing", "mc_matching", "query_everything"]
    rows1 = [r.csv_row()[:-1] for r in evaluate_strategies(ids, g, params, 400, seed=11)]
    rows8 = [
        r.csv_row()[:-1]
        for r in evaluate_strategies(ids, g, params, 400, seed=11, threads=8)
    ]
    assert rows1 == rows8


def test_capacity_latch_drops_optimum_columns():
    g = gen_er(12, 0.3, seed=2).graph
    rep = evaluate_strategy(
        "query_nothing", g, StrategyParams(p=0.5), 50, seed=7, opt_budget=2
    )
    assert rep.mean_opt is None and rep.ratio is None and rep.ratio_ci95 is None
    assert rep.mean_answer > 0
    row = rep.csv_row()
    assert row[CSV_COLUMNS.index("mean_opt")] == ""
    assert row[CSV_COLUMNS.index("ratio")] == ""


def test_no_optimum_mode():
    g = gen_er_bipartite(4, 4, 0.5, seed=1).graph
    rep = evaluate_strategy(
        "query_everything", g, StrategyParams(p=0.5), 50, seed=3, compute_optimum=False
    )
    assert rep.mean_opt is None and rep.ratio is None


def test_evaluator_validation():
    g = gen_er_bipartite(4, 4, 0.5, seed=1).graph
    with pytest.raises(ParameterError):
        evaluate_strategy("query_nothing", g, StrategyParams(p=0.5), 0, seed=1)
    with pytest.raises(ParameterError):
        evaluate_strategy("query_nothing", g, StrategyParams(p=0.5), 10, seed=1, threads=0)


def test_csv_shape_and_encoding():
    g = gen_er_bipartite(4, 4, 0.5, seed=6).graph
    reps = evaluate_strategies(
        ["query_nothing", "query_everything"],
        g,
        StrategyParams(p=0.25, epsilon=0.5),
        60,
        seed=9,
        instance="demo",
    )
    buf = io.StringIO()
    write_csv(reps, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "demo"
    assert first[1] == "query_nothing"
    assert first[2] == repr(0.25)
    assert first[-1].isdigit()  # wall_ms is rounded to whole milliseconds
