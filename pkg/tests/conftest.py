import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from refp.market import Market  # noqa: E402

# Goods G (2 copies), F (3 copies); Y wants 2 of G for 10, Z any 2 of G/F for 5.
G, F = 0, 1
Y, Z = 0, 1


@pytest.fixture
def gf_market() -> Market:
    return Market.build([2, 3], [2, 2], [10, 5], [(G, Y), (G, Z), (F, Z)])


@pytest.fixture
def gf_outcome():
    return np.array([[2, 0], [0, 2]]), np.array([5.0, 1.0])


@pytest.fixture
def copies_market() -> Market:
    """One good with 2 copies; c1 wants 1 for 5, c2 wants 2 for 7."""
    return Market.build([2], [1, 2], [5, 7], [(0, 0), (0, 1)])


@st.composite
def markets(draw, max_n=4, max_m=4, max_supply=3, max_demand=4, variant="size-interchangeable"):
    """Small random markets; every bidder has at least one edge."""
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    adj = draw(st.lists(st.lists(st.booleans(), min_size=m, max_size=m), min_size=n, max_size=n))
    adj = np.array(adj, dtype=bool)
    for j in range(m):
        if not adj[:, j].any():
            adj[draw(st.integers(0, n - 1)), j] = True
    rewards = draw(st.lists(st.integers(1, 20), min_size=m, max_size=m))
    if variant == "single-minded":
        supplies = [1] * n
        demands = adj.sum(axis=0).tolist()
    else:
        supplies = draw(st.lists(st.integers(1, max_supply), min_size=n, max_size=n))
        if variant == "singleton":
            demands = [1] * m
        else:
            demands = draw(st.lists(st.integers(1, max_demand), min_size=m, max_size=m))
    edges = [(int(i), int(j)) for i, j in np.argwhere(adj)]
    return Market.build(supplies, demands, [float(r) for r in rewards], edges)


def random_market(rng: np.random.Generator, n: int, m: int, max_supply=3, max_demand=4,
                  variant="size-interchangeable", p=0.6) -> Market:
    """numpy-seeded counterpart of :func:`markets` for loops over many instances."""
    adj = rng.random((n, m)) < p
    for j in range(m):
        if not adj[:, j].any():
            adj[rng.integers(n), j] = True
    rewards = rng.integers(1, 21, size=m).astype(float)
    if variant == "single-minded":
        supplies = np.ones(n, dtype=int)
        demands = adj.sum(axis=0)
    else:
        supplies = rng.integers(1, max_supply + 1, size=n)
        demands = np.ones(m, dtype=int) if variant == "singleton" else rng.integers(1, max_demand + 1, size=m)
    edges = [(int(i), int(j)) for i, j in np.argwhere(adj)]
    return Market.build(supplies.tolist(), demands.tolist(), rewards.tolist(), edges)


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
