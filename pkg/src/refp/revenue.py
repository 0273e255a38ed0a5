"""Reserve-price search for revenue-maximising restricted envy-free outcomes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocation import UTILITARIAN, Allocator, allocate, allocate_with_reserve
from .market import Market, Outcome, is_envy_free, is_restricted_envy_free, mc_violating_goods, revenue
from .pricing import InfeasibleAtReserve, PricingOptions, restricted_ef_lp


@dataclass(frozen=True)
class SearchResult:
    outcome: Outcome
    reserve: float
    revenue: float
    # (reserve, revenue or None when the program was infeasible), ascending reserve
    trace: tuple[tuple[float, float | None], ...] = field(default=())

    def is_wer(self, market: Market) -> bool:
        """Envy-free for every bidder and unsold goods priced exactly at the reserve."""
        p = self.outcome.prices
        sold = self.outcome.allocation.sum(axis=1)
        cleared = all(abs(p[i] - self.reserve) <= 1e-7 for i in range(market.n) if sold[i] == 0)
        return cleared and all(is_envy_free(market, self.outcome, b.id) for b in market.bidders)


def candidate_reserves(market: Market, initial: np.ndarray) -> list[float]:
    """Zero plus reward-per-unit of every positive entry of the initial allocation."""
    cands = {0.0}
    for i, j in zip(*np.nonzero(initial)):
        cands.add(market.bidders[j].reward / float(initial[i, j]))
    return sorted(cands)


def refp_revenue_max(market: Market, allocator: Allocator = UTILITARIAN) -> SearchResult:
    initial = allocate(market, allocator)
    best = None
    trace = []
    for r in candidate_reserves(market, initial):
        x = allocate_with_reserve(market, r, allocator)
        try:
            p = restricted_ef_lp(market, x, PricingOptions(reserve=r))
        except InfeasibleAtReserve:
            trace.append((r, None))
            continue
        outcome = Outcome(x, p)
        rev = revenue(market, outcome)
        trace.append((r, rev))
        if best is None or rev > best.revenue + 1e-9:
            best = SearchResult(outcome, r, rev)
    assert best is not None, "the zero reserve is always priceable"
    return SearchResult(best.outcome, best.reserve, best.revenue, tuple(trace))


def diagnostics(market: Market, result: SearchResult) -> dict:
    """Containment checks reported alongside a search result."""
    return {
        "reserve": result.reserve,
        "revenue": result.revenue,
        "restricted_envy_free": is_restricted_envy_free(market, result.outcome),
        "wer": result.is_wer(market),
        "mc_violations": len(mc_violating_goods(result.outcome)),
    }
