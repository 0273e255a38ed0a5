"""Prices supporting a fixed allocation.

The core program keeps every allocated bidder envy-free among same-size
bundles using two families of linear constraints:

* individual rationality: a winner pays at most its reward;
* compactness: a good a winner holds is no dearer than any good it is
  connected to and has not exhausted.

Optional reserve and clearance rows turn the same program into the
reserve-price and Walrasian-with-reserve variants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .allocation import UTILITARIAN, Allocator, allocate
from .linsolve import EQ, GE, LE, LpProblem, solve
from .market import Market, Outcome, is_all_or_none, is_feasible, winners


class InfeasibleAtReserve(ValueError):
    """The allocation does not respect the reserve price."""


class NotSingleMinded(ValueError):
    pass


@dataclass(frozen=True)
class PricingOptions:
    """``objective`` is ``"revenue"`` or an explicit length-n coefficient vector."""

    objective: Union[str, tuple[float, ...]] = "revenue"
    reserve: float = 0.0
    clear_at_reserve: bool = False

    def __post_init__(self):
        if self.reserve < 0:
            raise ValueError("reserve must be nonnegative")
        if not isinstance(self.objective, str):
            object.__setattr__(self, "objective", tuple(float(c) for c in self.objective))
        elif self.objective != "revenue":
            raise ValueError(f"unknown objective {self.objective!r}")


def compact_pairs(market: Market, alloc: np.ndarray) -> list[tuple[int, int]]:
    """Ordered pairs (i, k) with the requirement ``p_i <= p_k``, deduplicated and sorted."""
    x = np.asarray(alloc)
    supplies = market.supplies
    pairs = set()
    for j in range(market.m):
        held = np.nonzero(x[:, j] > 0)[0]
        if held.size == 0:
            continue
        open_goods = [k for k in market.goods_of(j) if x[k, j] < supplies[k]]
        for i in held:
            for k in open_goods:
                if k != i:
                    pairs.add((int(i), k))
    return sorted(pairs)


def _ir_rows(market: Market, x: np.ndarray, width: int):
    for j in range(market.m):
        if x[:, j].sum() > 0:
            row = np.zeros(width)
            row[: market.n] = x[:, j]
            yield row, LE, market.bidders[j].reward


def _compact_rows(market: Market, x: np.ndarray, width: int):
    for i, k in compact_pairs(market, x):
        row = np.zeros(width)
        row[i], row[k] = 1.0, -1.0
        yield row, LE, 0.0


def restricted_ef_lp(market: Market, alloc: np.ndarray, opts: PricingOptions = PricingOptions()) -> np.ndarray:
    """Optimal prices under IR + compactness (+ reserve/clearance); a simplex vertex."""
    x = np.asarray(alloc, dtype=np.int64)
    if not is_feasible(market, x):
        raise ValueError("allocation is not feasible")
    n = market.n
    if opts.objective == "revenue":
        c = x.sum(axis=1).astype(float)
    else:
        c = np.array(opts.objective, dtype=float)
        if c.shape != (n,):
            raise ValueError("objective must have one coefficient per good")
    problem = LpProblem(c, lower_bounds=[opts.reserve] * n)
    for row, rel, b in _ir_rows(market, x, n):
        problem.add(row, rel, b)
    for row, rel, b in _compact_rows(market, x, n):
        problem.add(row, rel, b)
    if opts.clear_at_reserve:
        sold = x.sum(axis=1)
        for i in range(n):
            if sold[i] == 0:
                row = np.zeros(n)
                row[i] = 1.0
                problem.add(row, EQ, opts.reserve)
    sol = solve(problem)
    if sol.status == "infeasible":
        raise InfeasibleAtReserve(f"the allocation does not respect the reserve price {opts.reserve}")
    if sol.status == "unbounded":
        raise ValueError("pricing objective is unbounded over the restricted envy-free region")
    return np.maximum(sol.x, opts.reserve)


def refp_pipeline(market: Market, allocator: Allocator = UTILITARIAN,
                  opts: PricingOptions = PricingOptions()) -> Outcome:
    """Allocate, then price the allocation with :func:`restricted_ef_lp`."""
    x = allocate(market, allocator)
    return Outcome(x, restricted_ef_lp(market, x, opts))


def _require_single_minded(market: Market) -> None:
    if not market.is_single_minded():
        raise NotSingleMinded("market is not single-minded (unit supplies, demand = degree)")


def check_we_existence(market: Market, alloc: np.ndarray,
                       same_price: Optional[Iterable[Sequence[int]]] = None) -> bool:
    """Whether some price vector makes ``alloc`` a Walrasian equilibrium.

    ``same_price`` lists groups of goods forced to share one price; use it when
    the goods are unit copies of a single good type split apart to make the
    market single-minded.
    """
    _require_single_minded(market)
    x = np.asarray(alloc, dtype=np.int64)
    if not (is_feasible(market, x) and is_all_or_none(market, x)):
        raise ValueError("allocation must be feasible and all-or-none")
    n = market.n
    problem = LpProblem(np.zeros(n))
    for row, rel, b in _ir_rows(market, x, n):
        problem.add(row, rel, b)
    for row, rel, b in _compact_rows(market, x, n):
        problem.add(row, rel, b)
    W = winners(market, x)
    adj = market.adjacency
    for b in market.bidders:
        if b.id not in W:
            problem.add(adj[:, b.id].astype(float), GE, b.reward)
    sold = x.sum(axis=1)
    for i in range(n):
        if sold[i] == 0:
            row = np.zeros(n)
            row[i] = 1.0
            problem.add(row, EQ, 0.0)
    for group in same_price or ():
        group = list(group)
        for other in group[1:]:
            row = np.zeros(n)
            row[group[0]], row[other] = 1.0, -1.0
            problem.add(row, EQ, 0.0)
    return solve(problem).status == "optimal"


def smlp(market: Market, allocator: Allocator = UTILITARIAN) -> Outcome:
    """Revenue LP for single-minded markets with slack-penalised loser envy."""
    _require_single_minded(market)
    x = allocate(market, allocator)
    n = market.n
    W = winners(market, x)
    losers = [b.id for b in market.bidders if b.id not in W]
    width = n + len(losers)
    c = np.concatenate([x.sum(axis=1).astype(float), -np.ones(len(losers))])
    problem = LpProblem(c)
    adj = market.adjacency
    for pos, j in enumerate(losers):
        row = np.zeros(width)
        row[:n] = adj[:, j]
        row[n + pos] = 1.0
        problem.add(row, GE, market.bidders[j].reward)
    for row, rel, b in _ir_rows(market, x, width):
        problem.add(row, rel, b)
    sol = solve(problem)
    if sol.status != "optimal":
        raise RuntimeError(f"SMLP program unexpectedly {sol.status}")
    return Outcome(x, np.maximum(sol.x[:n], 0.0))


def single_minded_revenue_max(market: Market, alloc: np.ndarray) -> Outcome:
    """Charge each winner its full reward on one good of its bundle (the lowest id)."""
    _require_single_minded(market)
    x = np.asarray(alloc, dtype=np.int64)
    if not (is_feasible(market, x) and is_all_or_none(market, x)):
        raise ValueError("allocation must be feasible and all-or-none")
    p = np.zeros(market.n)
    owner = {}
    for j in sorted(winners(market, x)):
        held = np.nonzero(x[:, j] > 0)[0]
        for i in held:
            if int(i) in owner:
                raise AssertionError(f"winners {owner[int(i)]} and {j} share good {i}")
            owner[int(i)] = j
        p[held[0]] = market.bidders[j].reward
    return Outcome(x, p)


def revenue_lp_value(market: Market, alloc: np.ndarray, reserve: float = 0.0) -> Optional[float]:
    """Revenue of the reserve-constrained pricing program, or ``None`` if infeasible."""
    try:
        p = restricted_ef_lp(market, alloc, PricingOptions(reserve=reserve))
    except InfeasibleAtReserve:
        return None
    return float(np.asarray(alloc).sum(axis=1) @ p)

