"""Market model for combinatorial matching markets with size-interchangeable bidders.

A market is a bipartite graph between good types (each with an integer supply)
and bidders (each with an integer demand and a reward). A bidder is satisfied by
any bundle of at least ``demand`` copies drawn from goods it is connected to, and
values such a bundle at ``reward``.

Allocations are dense ``n x m`` integer matrices, prices are length-``n`` float
vectors. Everything here is a pure function over immutable values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

#: Tolerance used by the envy oracles when comparing utilities.
TOL = 1e-7


class MarketError(ValueError):
    """Raised when a market (or an outcome for it) is malformed."""


@dataclass(frozen=True)
class Good:
    id: int
    supply: int


@dataclass(frozen=True)
class Bidder:
    id: int
    demand: int
    reward: float


@dataclass(frozen=True)
class Market:
    """Goods, bidders and the good -> bidder edge set.

    ``edges`` is a frozenset of ``(good_id, bidder_id)`` pairs. Construct via
    :meth:`build` when starting from plain sequences.
    """

    goods: tuple[Good, ...]
    bidders: tuple[Bidder, ...]
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    @classmethod
    def build(
        cls,
        supplies: Iterable[int],
        demands: Iterable[int],
        rewards: Iterable[float],
        edges: Iterable[tuple[int, int]],
        check: bool = True,
    ) -> "Market":
        goods = tuple(Good(i, int(s)) for i, s in enumerate(supplies))
        demands, rewards = list(demands), list(rewards)
        if len(demands) != len(rewards):
            raise MarketError("demands and rewards differ in length")
        bidders = tuple(Bidder(j, int(d), float(r)) for j, (d, r) in enumerate(zip(demands, rewards)))
        edge_list = [(int(i), int(j)) for i, j in edges]
        if check and len(set(edge_list)) != len(edge_list):
            raise MarketError("duplicate edge")
        market = cls(goods, bidders, frozenset(edge_list))
        if check:
            validate(market)
        return market

    @property
    def n(self) -> int:
        return len(self.goods)

    @property
    def m(self) -> int:
        return len(self.bidders)

    @property
    def supplies(self) -> np.ndarray:
        return np.array([g.supply for g in self.goods], dtype=np.int64)

    @property
    def demands(self) -> np.ndarray:
        return np.array([b.demand for b in self.bidders], dtype=np.int64)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([b.reward for b in self.bidders], dtype=float)

    @property
    def adjacency(self) -> np.ndarray:
        """Boolean ``n x m`` matrix, ``True`` where (good, bidder) is an edge."""
        adj = np.zeros((self.n, self.m), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = True
        return adj

    def goods_of(self, j: int) -> list[int]:
        """Goods connected to bidder ``j``, ascending."""
        return sorted(i for i, jj in self.edges if jj == j)

    def bidders_of(self, i: int) -> list[int]:
        return sorted(j for ii, j in self.edges if ii == i)

    def is_single_minded(self) -> bool:
        """Unit supplies and every bidder demanding its whole neighbourhood."""
        if any(g.supply != 1 for g in self.goods):
            return False
        deg = self.adjacency.sum(axis=0)
        return all(b.demand == deg[b.id] for b in self.bidders)

    def is_singleton(self) -> bool:
        return all(b.demand == 1 for b in self.bidders)


def validate(market: Market) -> None:
    """Raise :class:`MarketError` naming the first broken invariant."""
    for idx, g in enumerate(market.goods):
        if g.id != idx:
            raise MarketError(f"good ids must be dense 0..n-1, found {g.id} at position {idx}")
        if g.supply < 1:
            raise MarketError(f"good {g.id} has supply {g.supply} < 1")
    for idx, b in enumerate(market.bidders):
        if b.id != idx:
            raise MarketError(f"bidder ids must be dense 0..m-1, found {b.id} at position {idx}")
        if b.demand < 1:
            raise MarketError(f"bidder {b.id} has demand {b.demand} < 1")
        if not (b.reward > 0 and math.isfinite(b.reward)):
            raise MarketError(f"bidder {b.id} has non-positive reward {b.reward}")
    for i, j in sorted(market.edges):
        if not (0 <= i < market.n):
            raise MarketError(f"edge ({i}, {j}) references unknown good {i}")
        if not (0 <= j < market.m):
            raise MarketError(f"edge ({i}, {j}) references unknown bidder {j}")


@dataclass(frozen=True)
class Outcome:
    """An allocation matrix paired with a per-good price vector."""

    allocation: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        x = np.array(self.allocation, dtype=np.int64)
        p = np.array(self.prices, dtype=float)
        if x.ndim != 2 or p.ndim != 1 or x.shape[0] != p.shape[0]:
            raise MarketError(f"allocation shape {x.shape} does not match price shape {p.shape}")
        if (x < 0).any():
            raise MarketError("allocation has negative entries")
        if (p < -TOL).any():
            raise MarketError("prices must be nonnegative")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "allocation", x)
        object.__setattr__(self, "prices", p)


def null_allocation(market: Market) -> np.ndarray:
    return np.zeros((market.n, market.m), dtype=np.int64)


def _check_shape(market: Market, x: np.ndarray) -> None:
    if x.shape != (market.n, market.m):
        raise MarketError(f"allocation shape {x.shape} != ({market.n}, {market.m})")


def is_feasible(market: Market, alloc: np.ndarray) -> bool:
    x = np.asarray(alloc)
    _check_shape(market, x)
    if (x < 0).any() or (x[~market.adjacency] != 0).any():
        return False
    return bool((x.sum(axis=1) <= market.supplies).all())


def bundle_sizes(alloc: np.ndarray) -> np.ndarray:
    return np.asarray(alloc).sum(axis=0)


def winners(market: Market, alloc: np.ndarray) -> set[int]:
    sizes = bundle_sizes(alloc)
    return {b.id for b in market.bidders if sizes[b.id] >= b.demand}


def is_all_or_none(market: Market, alloc: np.ndarray) -> bool:
    sizes = bundle_sizes(alloc)
    return all(sizes[b.id] in (0, b.demand) for b in market.bidders)


def valuation(market: Market, alloc: np.ndarray, j: int) -> float:
    x = np.asarray(alloc)
    held = x[market.adjacency[:, j], j].sum()
    b = market.bidders[j]
    return b.reward if held >= b.demand else 0.0


def bundle_price(market: Market, outcome: Outcome, j: int) -> float:
    return float(outcome.allocation[:, j] @ outcome.prices)


def utility(market: Market, outcome: Outcome, j: int) -> float:
    return valuation(market, outcome.allocation, j) - bundle_price(market, outcome, j)


def welfare(market: Market, alloc: np.ndarray) -> float:
    return float(sum(market.bidders[j].reward for j in winners(market, alloc)))


def revenue(market: Market, outcome: Outcome) -> float:
    return float(outcome.allocation.sum(axis=1) @ outcome.prices)


def cheapest_bundle_price(market: Market, prices, j: int, size: int) -> Optional[float]:
    """Cost of the cheapest ``size``-unit bundle bidder ``j`` can assemble.

    Drawn from full supply. Returns ``None`` when j's connected supply is short.
    """
    if size < 0:
        raise ValueError("size must be nonnegative")
    p = np.asarray(prices, dtype=float)
    goods = sorted(market.goods_of(j), key=lambda i: (p[i], i))
    remaining, total = size, 0.0
    for i in goods:
        if remaining == 0:
            break
        take = min(remaining, market.goods[i].supply)
        total += take * p[i]
        remaining -= take
    if remaining > 0:
        return None
    return total


def is_envy_free(market: Market, outcome: Outcome, j: int, tol: float = TOL) -> bool:
    """Whether j's bundle maximises its utility over every bundle of the full supply."""
    b = market.bidders[j]
    best = 0.0
    cheapest = cheapest_bundle_price(market, outcome.prices, j, b.demand)
    if cheapest is not None:
        best = max(best, b.reward - cheapest)
    return utility(market, outcome, j) >= best - tol


def _cheapest_valued_bundle(market: Market, prices, j: int, size: int) -> Optional[float]:
    """Cheapest ``size``-unit bundle over all goods that holds at least I_j units j wants.

    Taking the I_j cheapest connected units and then the cheapest leftovers is optimal.
    """
    p = np.asarray(prices, dtype=float)
    if size > int(market.supplies.sum()):
        return None
    demand = market.bidders[j].demand
    connected = market.adjacency[:, j]
    unit_price = np.repeat(p, market.supplies)
    unit_conn = np.repeat(connected, market.supplies)
    conn_idx = np.flatnonzero(unit_conn)
    if len(conn_idx) < demand:
        return None
    chosen = conn_idx[np.argsort(unit_price[conn_idx], kind="stable")[:demand]]
    rest = np.delete(unit_price, chosen)
    return float(unit_price[chosen].sum() + np.sort(rest)[: size - demand].sum())


def is_restricted_envy_free(market: Market, outcome: Outcome, tol: float = TOL) -> bool:
    """Every allocated bidder's bundle is utility-maximal among same-size bundles and the empty one."""
    sizes = bundle_sizes(outcome.allocation)
    for b in market.bidders:
        size = int(sizes[b.id])
        if size == 0:
            continue
        best = 0.0
        if size >= b.demand:
            cheapest = _cheapest_valued_bundle(market, outcome.prices, b.id, size)
            if cheapest is not None:
                best = max(best, b.reward - cheapest)
        if utility(market, outcome, b.id) < best - tol:
            return False
    return True


def mc_violating_goods(outcome: Outcome, tol: float = TOL) -> list[int]:
    """Goods that are completely unallocated yet carry a positive price."""
    sold = outcome.allocation.sum(axis=1)
    return [i for i in range(len(outcome.prices)) if sold[i] == 0 and outcome.prices[i] > tol]


@dataclass(frozen=True)
class MetricsRecord:
    welfare_ratio: float
    revenue_ratio: float
    ef_violation: float
    ef_loss: float
    mc_violation: float
    mc_loss: float
    time_ms: float

    FIELDS = ("welfare_ratio", "revenue_ratio", "ef_violation", "ef_loss", "mc_violation", "mc_loss", "time_ms")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in self.FIELDS)

    @classmethod
    def mean(cls, records: list["MetricsRecord"]) -> "MetricsRecord":
        if not records:
            raise ValueError("cannot average an empty list of records")
        arr = np.array([r.as_tuple() for r in records], dtype=float)
        return cls(*(float(v) for v in arr.mean(axis=0)))


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def metrics(market: Market, outcome: Outcome, opt_welfare: float, elapsed_ms: float) -> MetricsRecord:
    if opt_welfare <= 0:
        raise ValueError("opt_welfare must be positive")
    x = outcome.allocation
    W = winners(market, x)
    not_ef = sum(1 for b in market.bidders if not is_envy_free(market, outcome, b.id))

    lost, loser_total = 0.0, 0.0
    for b in market.bidders:
        if b.id in W:
            continue
        loser_total += b.reward
        cheapest = cheapest_bundle_price(market, outcome.prices, b.id, b.demand)
        if cheapest is not None:
            lost += max(0.0, b.reward - cheapest)

    violating = mc_violating_goods(outcome)
    p = outcome.prices
    return MetricsRecord(
        welfare_ratio=welfare(market, x) / opt_welfare,
        revenue_ratio=revenue(market, outcome) / opt_welfare,
        ef_violation=_ratio(not_ef, market.m),
        ef_loss=_ratio(lost, loser_total),
        mc_violation=_ratio(len(violating), market.n),
        mc_loss=_ratio(float(sum(p[i] for i in violating)), float(p.sum())),
        time_ms=float(elapsed_ms),
    )


# -- JSON --------------------------------------------------------------------


def market_to_dict(market: Market) -> dict:
    return {
        "goods": [{"id": g.id, "supply": g.supply} for g in market.goods],
        "bidders": [
            {"id": b.id, "demand": b.demand, "reward": b.reward, "edges": market.goods_of(b.id)}
            for b in market.bidders
        ],
    }


def market_from_dict(data: dict) -> Market:
    try:
        goods = sorted(data["goods"], key=lambda g: g["id"])
        bidders = sorted(data["bidders"], key=lambda b: b["id"])
        if [g["id"] for g in goods] != list(range(len(goods))):
            raise MarketError("good ids must be dense 0..n-1")
        if [b["id"] for b in bidders] != list(range(len(bidders))):
            raise MarketError("bidder ids must be dense 0..m-1")
        edges = [(int(i), b["id"]) for b in bidders for i in b.get("edges", [])]
        return Market.build(
            [g["supply"] for g in goods],
            [b["demand"] for b in bidders],
            [b["reward"] for b in bidders],
            edges,
        )
    except (KeyError, TypeError) as exc:
        raise MarketError(f"malformed market JSON: {exc!r}") from exc


def market_to_json(market: Market) -> str:
    # repr-based float serialisation in json is shortest round-trip, hence lossless
    return json.dumps(market_to_dict(market), indent=2)


def market_from_json(text: str) -> Market:
    return market_from_dict(json.loads(text))


def outcome_to_dict(outcome: Outcome) -> dict:
    return {
        "allocation": outcome.allocation.tolist(),
        "prices": [float(v) for v in outcome.prices],
    }


def outcome_from_dict(data: dict) -> Outcome:
    try:
        prices = np.array(data["prices"], dtype=float)
        alloc = np.array(data["allocation"], dtype=np.int64)
        if alloc.ndim != 2:
            if alloc.size:
                raise MarketError("allocation must be a matrix")
            alloc = alloc.reshape(len(prices), 0)
    except (KeyError, TypeError, ValueError) as exc:
        raise MarketError(f"malformed outcome JSON: {exc!r}") from exc
    return Outcome(alloc, prices)


def outcome_to_json(outcome: Outcome) -> str:
    return json.dumps(outcome_to_dict(outcome), indent=2)


def outcome_from_json(text: str) -> Outcome:
    return outcome_from_dict(json.loads(text))
