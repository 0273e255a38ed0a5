"""Greedy welfare under both readings of the R/sqrt(I) bidder order, against the exact optimum."""

import argparse

import numpy as np

from refp.allocation import OrderingPolicy, greedy_allocate, optimal_allocate
from refp.generators import RandomKConfig, random_k_market
from refp.market import welfare


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--markets", type=int, default=300)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ratios = {"utilitarian": [], "utilitarian_ascending": []}
    bound_misses = dict.fromkeys(ratios, 0)
    for t in range(args.markets):
        k = (0.5, 1.0, 2.0)[t % 3]
        market = random_k_market(RandomKConfig(args.n, args.m, 0.5, k, seed=args.seed + t))
        opt = welfare(market, optimal_allocate(market))
        bound = market.m * np.sqrt(market.demands.max())
        for key in ratios:
            g = welfare(market, greedy_allocate(market, OrderingPolicy(key)))
            ratios[key].append(g / opt if opt else 1.0)
            bound_misses[key] += (opt > bound * g + 1e-9) if g > 0 else (opt > 0)
    for key, vals in ratios.items():
        print(f"{key:24s} mean welfare ratio {np.mean(vals):.4f}  bound violations {bound_misses[key]}")


if __name__ == "__main__":
    main()
