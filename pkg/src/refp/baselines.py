"""Literature baselines the heuristics are compared against.

* ``max_we``: VCG-style maximal Walrasian prices for unit-demand bidders.
* ``max_wer_approx``: reserve-price search over ``max_we`` with dummy bidders.
* ``single_minded_approx``: greedy Walrasian approximation for single-minded bidders.
* ``unlimited_supply_approx``: best uniform price, optionally respecting supply.
"""

from __future__ import annotations

import numpy as np

from .market import Market, Outcome, revenue
from .matchflow import ValuationMatrix, max_weight_matching

PRICE_EPS = 1e-7


class NotSingleton(ValueError):
    pass


def singleton_to_matrix(market: Market) -> ValuationMatrix:
    """Expand every good into unit copies; entry = bidder's reward if connected."""
    if not market.is_singleton():
        raise NotSingleton("every bidder must demand exactly one unit")
    adj = market.adjacency
    rewards = market.rewards
    rows, copy_of = [], []
    for g in market.goods:
        row = np.where(adj[g.id], rewards, 0.0)
        for _ in range(g.supply):
            rows.append(row)
            copy_of.append(g.id)
    values = np.array(rows) if rows else np.zeros((0, market.m))
    return ValuationMatrix(values, tuple(copy_of))


def _weight_without_row(values: np.ndarray, row: int) -> float:
    return max_weight_matching(np.delete(values, row, axis=0))[1]


def max_we(v: ValuationMatrix) -> Outcome:
    """Max-weight matching priced at each copy's marginal contribution to the optimum.

    The outcome is indexed by original goods (``v.copy_of``) and the matrix columns.
    """
    values = v.values
    pairs, total = max_weight_matching(values)
    rows, cols = values.shape
    copy_price = np.zeros(rows)
    cache: dict[bytes, float] = {}
    # deleting an unmatched row leaves the optimum unchanged, so only matched rows get a price
    for r, _c in pairs:
        key = values[r].tobytes()
        if key not in cache:
            cache[key] = _weight_without_row(values, r)
        copy_price[r] = total - cache[key]
    copy_price[np.abs(copy_price) < PRICE_EPS] = 0.0

    n = v.num_goods
    x = np.zeros((n, cols), dtype=np.int64)
    for r, c in pairs:
        x[v.copy_of[r], c] += 1
    prices = np.zeros(n)
    seen = np.zeros(n, dtype=bool)
    for r in range(rows):
        g = v.copy_of[r]
        if seen[g]:
            assert abs(prices[g] - copy_price[r]) <= 1e-6 * max(1.0, abs(prices[g])), (
                f"copies of good {g} priced differently: {prices[g]} vs {copy_price[r]}")
        else:
            prices[g], seen[g] = copy_price[r], True
    return Outcome(x, prices)


def _with_dummies(v: ValuationMatrix, reserve: float) -> ValuationMatrix:
    """Append, per good, one more dummy column than it has copies, each valuing its copies at ``reserve``."""
    values = v.values
    extra = []
    for g in range(v.num_goods):
        rows_of_g = [r for r, gg in enumerate(v.copy_of) if gg == g]
        col = np.zeros(values.shape[0])
        col[rows_of_g] = reserve
        extra.extend([col] * (len(rows_of_g) + 1))
    if not extra:
        return v
    return ValuationMatrix(np.hstack([values, np.array(extra).T]), v.copy_of)


def max_wer_approx(v: ValuationMatrix) -> Outcome:
    """Best revenue over reserves equal to matched values; dummy-held goods stay unsold."""
    values = v.values
    rows, cols = values.shape
    pairs, _ = max_weight_matching(values)
    reserves = sorted({float(values[r, c]) for r, c in pairs})
    best, best_rev = Outcome(np.zeros((v.num_goods, cols), dtype=np.int64), np.zeros(v.num_goods)), -1.0
    for r in reserves:
        full = max_we(_with_dummies(v, r))
        outcome = Outcome(full.allocation[:, :cols], full.prices)
        rev = float(outcome.allocation.sum(axis=1) @ outcome.prices)
        if rev > best_rev + 1e-9:
            best, best_rev = outcome, rev
    return best


def max_we_market(market: Market) -> Outcome:
    return max_we(singleton_to_matrix(market))


def max_wer_approx_market(market: Market) -> Outcome:
    return max_wer_approx(singleton_to_matrix(market))


def single_minded_approx(market: Market) -> Outcome:
    if not market.is_single_minded():
        raise ValueError("market is not single-minded")
    adj = market.adjacency
    remaining = set(range(market.m))
    x = np.zeros((market.n, market.m), dtype=np.int64)
    p = np.zeros(market.n)
    # removed bidders are exactly those whose bundle meets a sold good, so the rest stay available
    while remaining:
        rem = sorted(remaining)
        counts = adj[:, rem].sum(axis=1)
        i = int(np.argmax(counts))
        if counts[i] == 0:
            break
        contenders = [j for j in rem if adj[i, j]]
        j = min(contenders, key=lambda b: (-market.bidders[b].reward, b))
        bundle = adj[:, j]
        x[bundle, j] = 1
        p[i] = market.bidders[j].reward
        remaining = {k for k in remaining if not (adj[:, k] & bundle).any()}
    return Outcome(x, p)


def unlimited_supply_approx(market: Market, limited: bool = True) -> Outcome:
    """Best single uniform price among the bidders' reward-per-unit values.

    With ``limited`` bidders are served in descending reward-per-unit order only
    while their connected residual supply covers demand. Without it supply is
    never consumed, so the allocation may exceed it.
    """
    order = sorted(market.bidders, key=lambda b: (-b.reward / b.demand, b.id))
    adj = market.adjacency
    best, best_rev = Outcome(np.zeros((market.n, market.m), dtype=np.int64), np.zeros(market.n)), -1.0
    for q in sorted({b.reward / b.demand for b in market.bidders}, reverse=True):
        residual = market.supplies.copy()
        x = np.zeros((market.n, market.m), dtype=np.int64)
        for b in order:
            if b.reward - q * b.demand < -1e-12:
                continue
            goods = [i for i in np.nonzero(adj[:, b.id])[0] if residual[i] > 0]
            if limited and residual[goods].sum() < b.demand:
                continue
            if not goods:
                continue
            need = b.demand
            for i in sorted(goods, key=lambda i: (-residual[i], i)):
                take = min(need, residual[i]) if limited else need
                x[i, b.id] += take
                need -= take
                if limited:
                    residual[i] -= take
                if need == 0:
                    break
        outcome = Outcome(x, np.full(market.n, q))
        rev = revenue(market, outcome)
        if rev > best_rev + 1e-9:
            best, best_rev = outcome, rev
    return best
