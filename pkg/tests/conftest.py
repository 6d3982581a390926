import random

import pytest
from hypothesis import settings

from labeloracle.graph_core import make_graph
from labeloracle.harness import assign_labels, generate_grid, generate_random_planar

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def unit_grid(k, labels=None):
    return generate_grid(k, 1, 1, 0) if labels is None else assign_labels(
        generate_grid(k, 1, 1, 0), labels, "uniform", 0)


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture(scope="session")
def grid10():
    return assign_labels(generate_grid(10, 1, 1000, 7), 4, "uniform", 7)


@pytest.fixture(scope="session")
def planar60():
    return assign_labels(generate_random_planar(60, 3), 5, "clustered", 3)


def path_graph(lengths):
    edges = [(i, i + 1, w) for i, w in enumerate(lengths)]
    return make_graph(len(lengths) + 1, edges)
