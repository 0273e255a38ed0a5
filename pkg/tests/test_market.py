import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import F, G, Y, Z, markets
from oracles import brute_cheapest, brute_envy_free, brute_restricted_envy_free, bundles
from refp.market import (
    Market,
    MarketError,
    MetricsRecord,
    Outcome,
    bundle_price,
    cheapest_bundle_price,
    is_envy_free,
    is_feasible,
    is_restricted_envy_free,
    market_from_json,
    market_to_json,
    metrics,
    outcome_from_json,
    outcome_to_json,
    revenue,
    valuation,
    validate,
    welfare,
    winners,
)


class TestValidate:
    def test_example_market_is_valid(self):
        validate(Market.build([2], [1, 2], [5, 7], [(0, 0), (0, 1)]))

    def test_zero_reward_rejected(self):
        with pytest.raises(MarketError, match="reward"):
            Market.build([2], [1], [0.0], [(0, 0)])

    def test_duplicate_edge_rejected(self):
        with pytest.raises(MarketError, match="duplicate"):
            Market.build([2], [1], [1.0], [(0, 0), (0, 0)])

    @pytest.mark.parametrize("supplies,demands,edges,msg", [
        ([0], [1], [(0, 0)], "supply"),
        ([1], [0], [(0, 0)], "demand"),
        ([1], [1], [(1, 0)], "unknown good"),
        ([1], [1], [(0, 3)], "unknown bidder"),
    ])
    def test_other_invariants(self, supplies, demands, edges, msg):
        with pytest.raises(MarketError, match=msg):
            Market.build(supplies, demands, [1.0] * len(demands), edges)


class TestFeasibilityAndWinners:
    def test_outcome_b_feasible(self, gf_market, gf_outcome):
        x, _ = gf_outcome
        assert is_feasible(gf_market, x)
        assert winners(gf_market, x) == {Y, Z}

    def test_null_allocation(self, gf_market):
        x = np.zeros((2, 2), dtype=int)
        assert is_feasible(gf_market, x)
        assert winners(gf_market, x) == set()
        assert welfare(gf_market, x) == 0

    def test_oversupply_infeasible(self, gf_market):
        x = np.array([[3, 0], [0, 0]])
        assert not is_feasible(gf_market, x)

    def test_off_edge_infeasible(self, gf_market):
        # Y has no edge to F
        assert not is_feasible(gf_market, np.array([[0, 0], [1, 0]]))

    def test_outcome_c(self, gf_market):
        x = np.array([[0, 1], [0, 1]])
        assert winners(gf_market, x) == {Z}
        assert welfare(gf_market, x) == 5
        assert revenue(gf_market, Outcome(x, [1.0, 2.0])) == 3
        assert bundle_price(gf_market, Outcome(x, [1.0, 2.0]), Z) == 3


class TestValuationAndPrices:
    def test_valuation(self, gf_market):
        assert valuation(gf_market, np.array([[2, 0], [0, 0]]), Y) == 10
        assert valuation(gf_market, np.array([[1, 0], [0, 0]]), Y) == 0
        # over-demand still earns the single reward
        assert valuation(gf_market, np.array([[0, 2], [0, 1]]), Z) == 5

    def test_revenue_outcome_b(self, gf_market, gf_outcome):
        out = Outcome(*gf_outcome)
        assert bundle_price(gf_market, out, Y) == 10
        assert bundle_price(gf_market, out, Z) == 2
        assert revenue(gf_market, out) == 12
        assert welfare(gf_market, out.allocation) == 15

    def test_zero_prices_zero_revenue(self, gf_market, gf_outcome):
        assert revenue(gf_market, Outcome(gf_outcome[0], [0.0, 0.0])) == 0

    def test_null_bundle_price(self, gf_market):
        assert bundle_price(gf_market, Outcome(np.zeros((2, 2), int), [5.0, 1.0]), Y) == 0


class TestCheapestBundle:
    def test_derived_example(self):
        market = Market.build([1, 1, 2], [3], [10.0], [(0, 0), (1, 0), (2, 0)])
        prices = [1.0, 4.0, 2.0]
        expected = brute_cheapest(prices, [1, 1, 2], [True] * 3, 3)
        assert expected == 5.0
        assert cheapest_bundle_price(market, prices, 0, 3) == expected

    def test_size_zero_and_too_large(self):
        market = Market.build([1, 1, 2], [3], [10.0], [(0, 0), (1, 0), (2, 0)])
        assert cheapest_bundle_price(market, [1, 4, 2], 0, 0) == 0
        assert cheapest_bundle_price(market, [1, 4, 2], 0, 5) is None

    @given(markets(), st.data())
    @settings(max_examples=150, deadline=None)
    def test_matches_enumeration(self, market, data):
        prices = data.draw(st.lists(st.integers(0, 9), min_size=market.n, max_size=market.n))
        j = data.draw(st.integers(0, market.m - 1))
        size = data.draw(st.integers(0, int(market.supplies.sum()) + 1))
        connected = market.adjacency[:, j]
        expected = brute_cheapest(prices, market.supplies.tolist(), connected, size)
        got = cheapest_bundle_price(market, prices, j, size)
        if expected is None:
            assert got is None
        else:
            assert got == pytest.approx(expected)


class TestEnvyOracles:
    def test_example_24(self, copies_market):
        out = Outcome(np.array([[0, 2]]), [3.0])
        assert is_envy_free(copies_market, out, 1)
        assert not is_envy_free(copies_market, out, 0)
        # the same verdicts straight from bundle enumeration
        assert brute_envy_free(copies_market, out.allocation, out.prices, 1)
        assert not brute_envy_free(copies_market, out.allocation, out.prices, 0)

    def test_prohibitive_prices(self, gf_market):
        out = Outcome(np.zeros((2, 2), int), [100.0, 100.0])
        assert all(is_envy_free(gf_market, out, j) for j in range(2))

    def test_free_goods_allocated(self, gf_market, gf_outcome):
        out = Outcome(gf_outcome[0], [0.0, 0.0])
        assert is_envy_free(gf_market, out, Y) and is_envy_free(gf_market, out, Z)

    def test_restricted(self, gf_market, gf_outcome):
        x, p = gf_outcome
        assert is_restricted_envy_free(gf_market, Outcome(x, p))
        assert brute_restricted_envy_free(gf_market, x, p)
        assert not is_restricted_envy_free(gf_market, Outcome(x, [6.0, 1.0]))
        assert is_restricted_envy_free(gf_market, Outcome(np.zeros((2, 2), int), [6.0, 1.0]))

    @given(markets(), st.data())
    @settings(max_examples=200, deadline=None)
    def test_envy_free_agrees_with_enumeration(self, market, data):
        # any feasible allocation, not only all-or-none ones
        x = np.zeros((market.n, market.m), dtype=int)
        residual = market.supplies.copy()
        for i, j in sorted(market.edges):
            q = data.draw(st.integers(0, int(residual[i])))
            x[i, j] = q
            residual[i] -= q
        prices = np.array(data.draw(st.lists(st.integers(0, 12), min_size=market.n, max_size=market.n)), float)
        out = Outcome(x, prices)
        for j in range(market.m):
            assert is_envy_free(market, out, j) == brute_envy_free(market, x, prices, j)
        assert is_restricted_envy_free(market, out) == brute_restricted_envy_free(market, x, prices)


class TestMetrics:
    def test_ef_loss_single_loser(self):
        # bidder 0 wins good 0; bidder 1 (R=5) loses and its cheapest bundle costs 3
        market = Market.build([1, 1], [1, 1], [9.0, 5.0], [(0, 0), (1, 1)])
        out = Outcome(np.array([[1, 0], [0, 0]]), [9.0, 3.0])
        rec = metrics(market, out, opt_welfare=14.0, elapsed_ms=1.5)
        assert rec.ef_loss == pytest.approx((5 - 3) / 5)
        assert rec.ef_violation == pytest.approx(0.5)
        assert rec.mc_violation == pytest.approx(0.5)
        assert rec.mc_loss == pytest.approx(3 / 12)
        assert rec.time_ms == 1.5

    def test_all_goods_allocated(self, gf_market):
        out = Outcome(np.array([[2, 0], [0, 3]]), [5.0, 1.0])
        rec = metrics(gf_market, out, 15.0, 0.0)
        assert rec.mc_violation == 0 and rec.mc_loss == 0

    def test_optimum_at_zero_prices(self, gf_market, gf_outcome):
        rec = metrics(gf_market, Outcome(gf_outcome[0], [0.0, 0.0]), 15.0, 0.0)
        assert rec.welfare_ratio == 1 and rec.revenue_ratio == 0
        assert rec.mc_loss == 0  # zero denominator

    def test_envy_free_loser_contributes_nothing(self):
        market = Market.build([1], [1, 1], [9.0, 5.0], [(0, 0), (0, 1)])
        out = Outcome(np.array([[1, 0]]), [7.0])
        assert metrics(market, out, 9.0, 0.0).ef_loss == 0

    def test_mean(self):
        a = MetricsRecord(1, 1, 0, 0, 0, 0, 2)
        assert MetricsRecord.mean([a, a]) == a


class TestJson:
    def test_market_roundtrip(self, gf_market):
        text = market_to_json(gf_market)
        assert json.loads(text)["bidders"][1]["edges"] == [G, F]
        assert market_from_json(text) == gf_market

    def test_full_precision_rewards(self):
        market = Market.build([1], [1], [0.1 + 0.2], [(0, 0)])
        assert market_from_json(market_to_json(market)).bidders[0].reward == 0.1 + 0.2

    def test_outcome_roundtrip(self):
        out = Outcome(np.array([[1, 0], [0, 2]]), [1 / 3, 2.5])
        back = outcome_from_json(outcome_to_json(out))
        assert (back.allocation == out.allocation).all()
        assert back.prices.tolist() == out.prices.tolist()

    def test_schema(self, copies_market):
        data = json.loads(market_to_json(copies_market))
        assert data == {
            "goods": [{"id": 0, "supply": 2}],
            "bidders": [
                {"id": 0, "demand": 1, "reward": 5.0, "edges": [0]},
                {"id": 1, "demand": 2, "reward": 7.0, "edges": [0]},
            ],
        }

    def test_malformed(self):
        with pytest.raises(MarketError):
            market_from_json('{"goods": []}')

    @given(markets())
    @settings(max_examples=50, deadline=None)
    def test_roundtrip_property(self, market):
        assert market_from_json(market_to_json(market)) == market


@given(markets(max_n=3, max_m=3, max_supply=2), st.data())
@settings(max_examples=60, deadline=None)
def test_welfare_and_revenue_decompose(market, data):
    x = np.zeros((market.n, market.m), dtype=int)
    residual = market.supplies.copy()
    for j in range(market.m):
        goods = market.goods_of(j)
        if data.draw(st.booleans()) and residual[goods].sum() >= market.bidders[j].demand:
            need = market.bidders[j].demand
            for i in goods:
                take = min(need, residual[i])
                x[i, j], residual[i], need = take, residual[i] - take, need - take
    prices = data.draw(st.lists(st.floats(0, 10), min_size=market.n, max_size=market.n))
    out = Outcome(x, prices)
    assert welfare(market, x) == pytest.approx(sum(valuation(market, x, j) for j in range(market.m)))
    assert revenue(market, out) == pytest.approx(sum(bundle_price(market, out, j) for j in range(market.m)))


def test_single_minded_identification():
    sm = Market.build([1, 1], [2, 1], [6.0, 4.0], [(0, 0), (1, 0), (1, 1)])
    assert sm.is_single_minded()
    assert not Market.build([2], [1], [1.0], [(0, 0)]).is_single_minded()
    # only the full neighbourhood has positive value for a single-minded bidder
    for b in bundles([1, 1]):
        x = np.array([[b[0], 0], [b[1], 0]])
        assert (valuation(sm, x, 0) > 0) == (b == (1, 1))
