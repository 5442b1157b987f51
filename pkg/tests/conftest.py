import warnings

import numpy as np
import pytest

from semicut.graphs import Graph

warnings.filterwarnings("ignore", message="Solution may be inaccurate")


def two_cliques(a: int, b: int, cross=()) -> Graph:
    edges = [(u, v) for u in range(a) for v in range(u + 1, a)]
    edges += [(u, v) for u in range(a, a + b) for v in range(u + 1, a + b)]
    edges += [tuple(e) for e in cross]
    return Graph(a + b, edges)


def random_graph(n: int, p: float, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph(n, edges)


@pytest.fixture(scope="session")
def rng_factory():
    def make(seed: int) -> np.random.Generator:
        return np.random.default_rng(seed)

    return make
