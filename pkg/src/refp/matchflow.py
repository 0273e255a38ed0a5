"""Maximum-weight bipartite matching and integral max-flow.

The flow network encodes winner-set feasibility: source -> good (capacity =
supply), good -> bidder (edge present in the market), bidder -> sink (capacity
= demand). A winner set is realisable iff the max flow saturates every sink edge.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .market import Market

# -- matching ----------------------------------------------------------------


@dataclass(frozen=True)
class ValuationMatrix:
    """Unit-demand values ``values[row, bidder]``.

    ``copy_of[row]`` names the original good a row stands for; rows are
    copies of multi-unit goods after expansion. Defaults to the identity.
    """

    values: np.ndarray
    copy_of: tuple[int, ...] = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            v = v.reshape(len(v), -1) if v.size else np.zeros((0, 0))
        if (v < 0).any():
            raise ValueError("valuations must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if not self.copy_of:
            object.__setattr__(self, "copy_of", tuple(range(v.shape[0])))
        if len(self.copy_of) != v.shape[0]:
            raise ValueError("copy_of must label every row")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def num_goods(self) -> int:
        return max(self.copy_of, default=-1) + 1


def _hungarian_min(cost: np.ndarray) -> np.ndarray:
    """Assignment minimising total cost on a square matrix (row -> column).

    Shortest augmenting path variant with row/column potentials, O(k^3).
    """
    k = cost.shape[0]
    INF = float("inf")
    u = np.zeros(k + 1)
    v = np.zeros(k + 1)
    match_col = np.zeros(k + 1, dtype=np.int64)  # match_col[col] = row (1-based), 0 = free
    way = np.zeros(k + 1, dtype=np.int64)
    for row in range(1, k + 1):
        match_col[0] = row
        j0 = 0
        minv = np.full(k + 1, INF)
        used = np.zeros(k + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], INF)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[match_col[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1
    assign = np.zeros(k, dtype=np.int64)
    for j in range(1, k + 1):
        assign[match_col[j] - 1] = j - 1
    return assign


def max_weight_matching(v) -> tuple[list[tuple[int, int]], float]:
    """Max-weight matching of a nonnegative matrix.

    Returns ``(pairs, weight)`` where ``pairs`` lists ``(row, column)`` for
    positive-value matches only, in row order.
    """
    values = v.values if isinstance(v, ValuationMatrix) else np.asarray(v, dtype=float)
    if values.size == 0:
        return [], 0.0
    rows, cols = values.shape
    k = max(rows, cols)
    padded = np.zeros((k, k))
    padded[:rows, :cols] = values
    assign = _hungarian_min(padded.max() - padded)
    pairs = [(r, int(assign[r])) for r in range(rows) if assign[r] < cols and values[r, assign[r]] > 0]
    weight = float(sum(values[r, c] for r, c in pairs))
    return pairs, weight


# -- flow --------------------------------------------------------------------


@dataclass
class FlowNetwork:
    """Adjacency-list residual graph with integral capacities."""

    num_nodes: int
    source: int
    sink: int
    # each arc: [to, capacity, index of reverse arc]
    graph: list[list[list[int]]] = field(default_factory=list)
    good_nodes: tuple[int, ...] = ()
    bidder_nodes: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.graph:
            self.graph = [[] for _ in range(self.num_nodes)]

    def add_edge(self, u: int, w: int, cap: int) -> None:
        if cap < 0:
            raise ValueError("capacities must be nonnegative")
        self.graph[u].append([w, int(cap), len(self.graph[w])])
        self.graph[w].append([u, 0, len(self.graph[u]) - 1])

    def flow_on(self, u: int, w: int) -> int:
        """Flow pushed along the forward arc u -> w (reverse residual capacity)."""
        for to, _cap, rev in self.graph[u]:
            if to == w:
                back = self.graph[w][rev]
                if back[0] == u:
                    return back[1]
        return 0

    @classmethod
    def for_winners(cls, market: Market, winner_set: Iterable[int]) -> "FlowNetwork":
        """Network whose max flow equals the demand it can serve for ``winner_set``."""
        W = sorted(set(winner_set))
        n, m = market.n, market.m
        source, sink = 0, 1 + n + m
        net = cls(num_nodes=n + m + 2, source=source, sink=sink,
                  good_nodes=tuple(range(1, n + 1)), bidder_nodes=tuple(range(n + 1, n + m + 1)))
        Wset = set(W)
        for g in market.goods:
            net.add_edge(source, 1 + g.id, g.supply)
        for i, j in sorted(market.edges):
            if j in Wset:
                net.add_edge(1 + i, 1 + n + j, min(market.goods[i].supply, market.bidders[j].demand))
        for j in W:
            net.add_edge(1 + n + j, sink, market.bidders[j].demand)
        return net


def max_flow(net: FlowNetwork) -> int:
    """Edmonds-Karp: BFS augmenting paths; mutates ``net`` into its residual graph."""
    total = 0
    graph = net.graph
    while True:
        parent: list = [None] * net.num_nodes
        parent[net.source] = (-1, -1)
        queue = deque([net.source])
        while queue and parent[net.sink] is None:
            u = queue.popleft()
            for idx, (w, cap, _rev) in enumerate(graph[u]):
                if cap > 0 and parent[w] is None:
                    parent[w] = (u, idx)
                    queue.append(w)
        if parent[net.sink] is None:
            return total
        push, w = None, net.sink
        while w != net.source:
            u, idx = parent[w]
            cap = graph[u][idx][1]
            push = cap if push is None else min(push, cap)
            w = u
        w = net.sink
        while w != net.source:
            u, idx = parent[w]
            arc = graph[u][idx]
            arc[1] -= push
            graph[w][arc[2]][1] += push
            w = u
        total += push


def winner_set_feasible(market: Market, winner_set: Sequence[int]) -> bool:
    W = set(winner_set)
    need = sum(market.bidders[j].demand for j in W)
    if need == 0:
        return True
    net = FlowNetwork.for_winners(market, W)
    return max_flow(net) == need


def extract_allocation(net: FlowNetwork, market: Market, winner_set: Iterable[int]) -> np.ndarray:
    """Read the allocation off a network on which :func:`max_flow` already ran."""
    W = sorted(set(winner_set))
    n = market.n
    x = np.zeros((market.n, market.m), dtype=np.int64)
    for i, j in market.edges:
        if j in W:
            x[i, j] = net.flow_on(1 + i, 1 + n + j)
    for j in W:
        if x[:, j].sum() != market.bidders[j].demand:
            raise ValueError(f"flow does not saturate the demand of winner {j}")
    return x


def allocate_winners(market: Market, winner_set: Iterable[int]) -> np.ndarray:
    """Allocation fulfilling exactly ``winner_set``; raises if it is infeasible."""
    W = sorted(set(winner_set))
    net = FlowNetwork.for_winners(market, W)
    max_flow(net)
    return extract_allocation(net, market, W)
