import pytest

from metabandit.bandit_core import greedy_value_table, solve_bamdp_exact
from metabandit.meta_solver import build_pruned_meta_graph


@pytest.fixture(scope="session")
def qstar_tables():
    """Shared exact solves keyed by (n, horizon); built once per session."""
    cache = {}

    def get(n, horizon):
        key = (n, horizon)
        if key not in cache:
            cache[key] = solve_bamdp_exact(n, horizon)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def greedy_tables():
    cache = {}

    def get(n, horizon):
        key = (n, horizon)
        if key not in cache:
            cache[key] = greedy_value_table(n, horizon)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def meta_graphs(qstar_tables):
    """Default-bound meta-graphs keyed by (n, horizon)."""
    cache = {}

    def get(n, horizon, params=None):
        key = (n, horizon, params.as_tuple() if params else None)
        if key not in cache:
            qstar = qstar_tables(n, horizon)
            if params is None:
                cache[key] = build_pruned_meta_graph(n, horizon, qstar)
            else:
                cache[key] = build_pruned_meta_graph(n, horizon, qstar, params)
        return cache[key]

    return get
