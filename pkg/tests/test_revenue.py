import numpy as np
import pytest
from hypothesis import given, settings

from conftest import markets, random_market
from refp.allocation import UTILITARIAN, optimal_allocate
from refp.market import TOL, Market, is_restricted_envy_free, revenue, welfare
from refp.pricing import refp_pipeline
from refp.revenue import candidate_reserves, diagnostics, refp_revenue_max


def test_copies_market_trace(copies_market):
    res = refp_revenue_max(copies_market, UTILITARIAN)
    assert candidate_reserves(copies_market, np.array([[1, 0]])) == [0.0, 5.0]
    assert res.reserve == 0 and res.revenue == pytest.approx(5)
    assert [r for r, _ in res.trace] == [0.0, 5.0]
    # at r=5 nobody survives the transform, so the outcome is empty
    assert res.trace[1][1] == 0


def test_single_pair_prefers_smaller_reserve():
    market = Market.build([1], [1], [10], [(0, 0)])
    res = refp_revenue_max(market)
    assert [r for r, _ in res.trace] == [0.0, 10.0]
    assert res.reserve == 0 and res.revenue == pytest.approx(10)


def test_identical_bidders_ample_supply():
    market = Market.build([10], [2, 2, 2], [6, 6, 6], [(0, 0), (0, 1), (0, 2)])
    res = refp_revenue_max(market)
    assert res.revenue <= welfare(market, res.outcome.allocation) + TOL
    assert res.revenue == pytest.approx(18)


def test_reserve_beats_pipeline():
    # a cheap loser-free market where the reserve lifts the unconstrained good
    market = Market.build([1, 1], [1, 1], [4, 9], [(0, 0), (1, 0), (1, 1)])
    base = revenue(market, refp_pipeline(market))
    res = refp_revenue_max(market)
    assert res.revenue >= base - TOL


@given(markets(max_n=4, max_m=5))
@settings(max_examples=120, deadline=None)
def test_search_invariants(market):
    for allocator in (UTILITARIAN, "utilitarian"):
        res = refp_revenue_max(market, allocator)
        out = res.outcome
        assert is_restricted_envy_free(market, out)
        assert (out.prices >= res.reserve - TOL).all()
        assert res.revenue >= revenue(market, refp_pipeline(market, allocator)) - TOL
        assert res.revenue <= welfare(market, optimal_allocate(market)) + TOL
        assert res.revenue == pytest.approx(max(v for _, v in res.trace if v is not None))


def test_diagnostics_report():
    rng = np.random.default_rng(31)
    for _ in range(30):
        market = random_market(rng, 3, 4)
        res = refp_revenue_max(market)
        d = diagnostics(market, res)
        assert d["restricted_envy_free"]
        assert d["revenue"] == res.revenue
        assert isinstance(d["wer"], bool)


def test_deterministic():
    rng = np.random.default_rng(32)
    market = random_market(rng, 5, 7)
    a, b = refp_revenue_max(market), refp_revenue_max(market)
    assert a.trace == b.trace and a.outcome.prices.tobytes() == b.outcome.prices.tobytes()
