"""All-or-none allocations: greedy approximation, exact optimum, reserve variants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

from .market import Market, null_allocation
from .matchflow import allocate_winners, winner_set_feasible

BidderKey = Literal["utilitarian", "utilitarian_ascending", "egalitarian", "reward_over_demand"]
GoodKey = Literal["descending_supply", "ascending_supply"]
Objective = Literal["utilitarian", "egalitarian"]

#: Exact search refuses markets with more bidders than this.
EXACT_BIDDER_CAP = 22


class ExactSearchTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OrderingPolicy:
    """Visiting order for the greedy allocator. Ties always go to the lower id."""

    bidder_key: BidderKey = "utilitarian"
    good_key: GoodKey = "descending_supply"

    def bidder_order(self, market: Market) -> list[int]:
        def key(b):
            if self.bidder_key == "utilitarian":
                return (-b.reward / math.sqrt(b.demand), b.id)
            if self.bidder_key == "utilitarian_ascending":
                return (b.reward / math.sqrt(b.demand), b.id)
            if self.bidder_key == "egalitarian":
                return (b.demand, b.id)
            if self.bidder_key == "reward_over_demand":
                return (-b.reward / b.demand, b.id)
            raise ValueError(f"unknown bidder key {self.bidder_key!r}")

        return [b.id for b in sorted(market.bidders, key=key)]

    def good_order(self, goods: list[int], residual: np.ndarray) -> list[int]:
        if self.good_key == "descending_supply":
            return sorted(goods, key=lambda i: (-residual[i], i))
        if self.good_key == "ascending_supply":
            return sorted(goods, key=lambda i: (residual[i], i))
        raise ValueError(f"unknown good key {self.good_key!r}")


UTILITARIAN = OrderingPolicy("utilitarian")
EGALITARIAN = OrderingPolicy("egalitarian")


def greedy_allocate(market: Market, policy: OrderingPolicy = UTILITARIAN) -> np.ndarray:
    """Serve bidders one at a time while their connected residual supply covers demand."""
    x = null_allocation(market)
    residual = market.supplies.copy()
    adj = market.adjacency
    for j in policy.bidder_order(market):
        demand = market.bidders[j].demand
        goods = [i for i in np.nonzero(adj[:, j])[0] if residual[i] > 0]
        if residual[goods].sum() < demand:
            continue
        need = demand
        for i in policy.good_order(goods, residual):
            if need == 0:
                break
            take = min(need, residual[i])
            x[i, j] = take
            residual[i] -= take
            need -= take
    return x


def _weights(market: Market, objective: Objective) -> np.ndarray:
    if objective == "utilitarian":
        return market.rewards
    if objective == "egalitarian":
        return np.ones(market.m)
    raise ValueError(f"unknown objective {objective!r}")


def _branch_and_bound(market: Market, weights: np.ndarray, order: list[int],
                      floor: float, stop_at_floor: bool) -> tuple[float, tuple[int, ...]]:
    """DFS over include/exclude decisions in ``order``, include branch first.

    Keeps the first set found whose value strictly beats the incumbent. When
    ``stop_at_floor`` is set, the search returns as soon as a set reaching
    ``floor`` is found.
    """
    tail = np.concatenate([np.cumsum(weights[order][::-1])[::-1], [0.0]])
    # the empty winner set is always feasible
    best_value, best_set = 0.0, ()
    tol = 1e-9 * max(1.0, float(weights.sum()))
    chosen: list[int] = []

    def dfs(pos: int, value: float) -> bool:
        nonlocal best_value, best_set
        if stop_at_floor:
            if value >= floor - tol:
                best_value, best_set = value, tuple(sorted(chosen))
                return True
            if value + tail[pos] < floor - tol:
                return False
        else:
            if value > best_value + tol:
                best_value, best_set = value, tuple(sorted(chosen))
            if value + tail[pos] <= best_value + tol:
                return False
        if pos == len(order):
            return False
        j = order[pos]
        chosen.append(j)
        if winner_set_feasible(market, chosen):
            if dfs(pos + 1, value + weights[j]):
                return True
        chosen.pop()
        return dfs(pos + 1, value)

    dfs(0, 0.0)
    return best_value, best_set


def optimal_winner_set(market: Market, objective: Objective = "utilitarian",
                       cap: int = EXACT_BIDDER_CAP) -> tuple[int, ...]:
    """Exact winner set; among optimal sets the lexicographically smallest one."""
    if market.m > cap:
        raise ExactSearchTooLarge(f"exact search capped at {cap} bidders, market has {market.m}")
    if market.m == 0:
        return ()
    w = _weights(market, objective)
    if objective == "utilitarian":
        order = sorted(range(market.m), key=lambda j: (-w[j], j))
    else:
        order = list(range(market.m))
    best, _ = _branch_and_bound(market, w, order, floor=0.0, stop_at_floor=False)
    if best <= 0:
        return ()
    # second pass in id order: the include-first DFS meets optimal sets in lexicographic order
    _, winners_ = _branch_and_bound(market, w, list(range(market.m)), floor=best, stop_at_floor=True)
    return winners_


def optimal_allocate(market: Market, objective: Objective = "utilitarian",
                     cap: int = EXACT_BIDDER_CAP) -> np.ndarray:
    return allocate_winners(market, optimal_winner_set(market, objective, cap))


def reserve_transform(market: Market, r: float) -> tuple[Market, list[int]]:
    """Drop bidders who cannot pay ``r`` per unit; shift the rest's rewards by ``r * demand``.

    Goods keep their ids. Returns the reduced market and the surviving original
    bidder ids (position k in the new market is ``survivors[k]``).
    """
    if r < 0:
        raise ValueError("reserve must be nonnegative")
    survivors = [b.id for b in market.bidders if b.reward - r * b.demand > 0]
    new_id = {j: k for k, j in enumerate(survivors)}
    reduced = Market.build(
        market.supplies.tolist(),
        [market.bidders[j].demand for j in survivors],
        [market.bidders[j].reward - r * market.bidders[j].demand for j in survivors],
        [(i, new_id[j]) for i, j in sorted(market.edges) if j in new_id],
    )
    return reduced, survivors


Allocator = Union[OrderingPolicy, str]


def allocate(market: Market, allocator: Allocator) -> np.ndarray:
    """Dispatch: an :class:`OrderingPolicy` runs greedy, an objective name runs exact search."""
    if isinstance(allocator, OrderingPolicy):
        return greedy_allocate(market, allocator)
    return optimal_allocate(market, allocator)


def allocate_with_reserve(market: Market, r: float, allocator: Allocator) -> np.ndarray:
    """Allocation whose every winner can afford ``r`` per unit."""
    reduced, survivors = reserve_transform(market, r)
    sub = allocate(reduced, allocator)
    x = null_allocation(market)
    for k, j in enumerate(survivors):
        x[:, j] = sub[:, k]
    return x
