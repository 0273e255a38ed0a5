"""Seeded random market distributions.

``random_k_market`` draws Random-k-Market(n, m, p, k) in three bidder variants;
``adx_market`` simulates an ad-exchange day (users visiting sites) and turns
the impression counts into supplies for targeted campaigns.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .market import Market

Variant = Literal["size-interchangeable", "single-minded", "singleton"]
VARIANTS = ("size-interchangeable", "single-minded", "singleton")

ATTRIBUTES = ("gender", "age", "income", "device")
NUM_SITES = 6
NUM_PROFILES = 2 ** len(ATTRIBUTES)
MAX_VISITS = 6


@dataclass(frozen=True)
class RandomKConfig:
    n: int
    m: int
    p: float
    k: float
    variant: Variant = "size-interchangeable"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if not (0 < self.p <= 1):
            raise ValueError("edge probability must lie in (0, 1]")
        if self.k <= 0:
            raise ValueError("supply-to-demand ratio k must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


def _round_robin_to(values: np.ndarray, target: int) -> np.ndarray:
    """Add or remove single units cyclically (never below 1) until ``values`` sums to ``target``."""
    values = values.copy()
    pos = 0
    guard = 0
    while values.sum() != target:
        idx = pos % len(values)
        if values.sum() < target:
            values[idx] += 1
        elif values[idx] > 1:
            values[idx] -= 1
        pos += 1
        guard += 1
        if guard > 10 * (abs(int(values.sum()) - target) + 1) * len(values) + 1000:
            raise RuntimeError("round-robin rescaling did not converge")
    return values


def _rescale(values: np.ndarray, target: int) -> np.ndarray:
    """Multiplicative rescale to ``target`` total, each entry at least 1."""
    target = max(target, len(values))
    scaled = np.maximum(1, np.rint(values * target / values.sum())).astype(np.int64)
    return _round_robin_to(scaled, target)


def _patch_isolated(adj: np.ndarray, rng: np.random.Generator) -> None:
    n, m = adj.shape
    for j in range(m):
        if not adj[:, j].any():
            adj[rng.integers(n), j] = True
    for i in range(n):
        if not adj[i].any():
            adj[i, rng.integers(m)] = True


def _fit_edge_count(adj: np.ndarray, target: int, rng: np.random.Generator) -> None:
    """Add or drop random edges until ``target`` remain, keeping every node covered."""
    n, m = adj.shape
    target = int(min(max(target, m), n * m))
    while adj.sum() < target:
        free = np.argwhere(~adj)
        i, j = free[rng.integers(len(free))]
        adj[i, j] = True
    while adj.sum() > target:
        deg_b = adj.sum(axis=0)
        deg_g = adj.sum(axis=1)
        removable = [(i, j) for i, j in np.argwhere(adj) if deg_b[j] > 1 and deg_g[i] > 1]
        if not removable:
            # dropping an edge now isolates a good; bidder coverage takes priority
            removable = [(i, j) for i, j in np.argwhere(adj) if deg_b[j] > 1]
        if not removable:
            break
        i, j = removable[rng.integers(len(removable))]
        adj[i, j] = False


def random_k_market(cfg: RandomKConfig) -> Market:
    rng = np.random.default_rng(cfg.seed)
    n, m = cfg.n, cfg.m
    adj = rng.random((n, m)) < cfg.p
    _patch_isolated(adj, rng)
    rewards = rng.uniform(1.0, 10.0, size=m)

    if cfg.variant == "single-minded":
        # unit supplies fix S = n, so the ratio is steered through the number of edges (D = |E|)
        _fit_edge_count(adj, int(round(n / cfg.k)), rng)
        supplies = np.ones(n, dtype=np.int64)
        demands = adj.sum(axis=0).astype(np.int64)
    else:
        supplies = rng.integers(1, 11, size=n)
        if cfg.variant == "singleton":
            demands = np.ones(m, dtype=np.int64)
        else:
            demands = rng.integers(1, 11, size=m)
        target = int(round(cfg.k * demands.sum()))
        if target >= n or cfg.variant == "singleton":
            supplies = _rescale(supplies, target)
        else:
            # supplies are already at their floor of 1; raise demand instead
            supplies = np.ones(n, dtype=np.int64)
            demands = _rescale(demands, int(round(n / cfg.k)))

    edges = [(int(i), int(j)) for i, j in np.argwhere(adj)]
    return Market.build(supplies.tolist(), demands.tolist(), rewards.tolist(), edges)


# -- AdX ----------------------------------------------------------------------


@dataclass(frozen=True)
class AdXConfig:
    m: int
    p: float
    user_count: int = 10000
    demographics: tuple[float, ...] = field(default=(1.0 / NUM_PROFILES,) * NUM_PROFILES)
    sites: tuple[float, ...] = field(default=(1.0 / NUM_SITES,) * NUM_SITES)
    seed: int = 0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if not (0 < self.p <= 1):
            raise ValueError("continue probability must lie in (0, 1]")
        if self.user_count < 1:
            raise ValueError("user_count must be positive")
        object.__setattr__(self, "demographics", tuple(float(v) for v in self.demographics))
        object.__setattr__(self, "sites", tuple(float(v) for v in self.sites))
        for name, dist, size in (("demographics", self.demographics, NUM_PROFILES),
                                 ("sites", self.sites, NUM_SITES)):
            if len(dist) != size:
                raise ValueError(f"{name} distribution needs {size} entries")
            if min(dist) < 0 or abs(sum(dist) - 1.0) > 1e-9:
                raise ValueError(f"{name} distribution must be nonnegative and sum to 1")

    @classmethod
    def from_file(cls, path, **overrides) -> "AdXConfig":
        data = json.loads(Path(path).read_text())
        data.update(overrides)
        return cls(**data)


def profile_bits(profile: int) -> tuple[int, ...]:
    """Attribute values (0/1 each, in ATTRIBUTES order) of a demographic profile index."""
    return tuple((profile >> (len(ATTRIBUTES) - 1 - a)) & 1 for a in range(len(ATTRIBUTES)))


def impression_counts(cfg: AdXConfig, rng: np.random.Generator) -> np.ndarray:
    """``counts[site, profile]`` of simulated impressions."""
    counts = np.zeros((NUM_SITES, NUM_PROFILES), dtype=np.int64)
    profiles = rng.choice(NUM_PROFILES, size=cfg.user_count, p=cfg.demographics)
    # a user keeps visiting while consecutive continue-draws succeed, capped at MAX_VISITS
    keep_going = rng.random((cfg.user_count, MAX_VISITS - 1)) < cfg.p
    visits = 1 + np.cumprod(keep_going, axis=1).sum(axis=1)
    sites = rng.choice(NUM_SITES, size=int(visits.sum()), p=cfg.sites)
    np.add.at(counts, (sites, np.repeat(profiles, visits)), 1)
    return counts


def adx_market(cfg: AdXConfig) -> Market:
    rng = np.random.default_rng(cfg.seed)
    counts = impression_counts(cfg, rng)
    # goods: nonzero (site, profile) types, enumerated site-major
    types = [(s, q) for s in range(NUM_SITES) for q in range(NUM_PROFILES) if counts[s, q] > 0]
    supplies = [int(counts[s, q]) for s, q in types]
    bits = [profile_bits(q) for _s, q in types]

    demands, rewards, edges = [], [], []
    for j in range(cfg.m):
        matching: list[int] = []
        for _attempt in range(10):
            size = int(rng.integers(1, len(ATTRIBUTES) + 1))
            fixed = rng.choice(len(ATTRIBUTES), size=size, replace=False)
            values = rng.integers(0, 2, size=size)
            matching = [g for g, b in enumerate(bits) if all(b[a] == v for a, v in zip(fixed, values))]
            if matching:
                break
        if not matching:
            matching = [int(rng.integers(len(types)))]
        total = sum(supplies[g] for g in matching)
        demand = int(rng.integers(1, total + 1))
        demands.append(demand)
        rewards.append(float(demand))
        edges.extend((g, j) for g in matching)
    return Market.build(supplies, demands, rewards, edges)


def supply_demand_ratio(market: Market) -> float:
    d = market.demands.sum()
    return float(market.supplies.sum() / d) if d else float("inf")


def config_to_dict(cfg) -> dict:
    return asdict(cfg)
