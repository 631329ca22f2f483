import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from stochcover.graphs import Graph
from stochcover.instances import from_family

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("fast", settings.get_profile("default"), max_examples=15)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# The shared evaluation corpus: labels are stable strings used in CSV output
# and acceptance messages.  Spans every generator family.
CORPUS_SPECS = [
    ("sdn", {"d": 2, "s": 2, "cap_n": 4}, 1),
    ("sdn", {"d": 3, "s": 5, "cap_n": 6}, 1),
    ("layered", {"n": 60, "cap_n": 12}, 1),
    ("regular_bipartite", {"n": 20, "d": 3}, 1),
    ("regular_bipartite", {"n": 40, "d": 5}, 1),
    ("perfect_matching", {"n": 40}, 0),
    ("perfect_matching", {"n": 10}, 0),
    ("er_bipartite", {"na": 30, "nb": 30, "edge_prob": 0.2}, 7),
    ("er_bipartite", {"na": 6, "nb": 6, "edge_prob": 0.25}, 3),
    ("clique", {"n": 10}, 0),
    ("clique", {"n": 5}, 0),
    ("er", {"n": 26, "edge_prob": 0.1}, 5),
]


@pytest.fixture(scope="session")
def corpus():
    """label -> InstanceDescriptor for the shared acceptance corpus."""
    out = {}
    for family, params, seed in CORPUS_SPECS:
        desc = from_family(family, params, seed)
        out[desc.label()] = desc
    return out


@pytest.fixture(scope="session")
def bipartite_corpus(corpus):
    from stochcover.graphs import bipartition

    return {
        label: desc
        for label, desc in corpus.items()
        if bipartition(desc.graph) is not None
    }


@pytest.fixture
def triangle():
    return Graph(3, ((0, 1), (0, 2), (1, 2)))


@pytest.fixture
def path2():
    return Graph(3, ((0, 1), (1, 2)))


@pytest.fixture
def single_edge():
    return Graph(2, ((0, 1),), bipartite_hint=1)
