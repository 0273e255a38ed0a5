"""Experiment runner: algorithm registry, trial suites, summary scores and CSV tables."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence, Union

from .allocation import EGALITARIAN, UTILITARIAN, optimal_allocate
from .baselines import max_wer_approx_market, single_minded_approx, unlimited_supply_approx
from .generators import AdXConfig, RandomKConfig, adx_market, random_k_market, supply_demand_ratio
from .market import Market, MetricsRecord, Outcome, metrics, welfare
from .pricing import smlp
from .revenue import refp_revenue_max

log = logging.getLogger(__name__)

THREADS_ENV = "REFP_THREADS"
CSV_HEADER = ("Algorithm", "Welfare", "Revenue", "EF", "EF Loss", "MC", "MC Loss", "Time", "Score")


class IncompatibleMarket(ValueError):
    pass


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    run: Callable[[Market], Outcome]
    accepts: Callable[[Market], bool]
    requirement: str


def _any(market: Market) -> bool:
    return True


def _lp(allocator):
    return lambda market: refp_revenue_max(market, allocator).outcome


def _smlp(allocator):
    return lambda market: smlp(market, allocator)


def _single_minded(market: Market) -> bool:
    return market.is_single_minded()


def _singleton(market: Market) -> bool:
    return market.is_singleton()


ALGORITHMS: dict[str, AlgorithmSpec] = {
    spec.name: spec
    for spec in [
        AlgorithmSpec("MaxWErApprox", max_wer_approx_market, _singleton, "singleton"),
        AlgorithmSpec("SingleMindedApprox", single_minded_approx, _single_minded, "single-minded"),
        AlgorithmSpec("UnlimitedSupply", lambda mk: unlimited_supply_approx(mk, limited=True), _any, "any"),
        AlgorithmSpec("UnlimitedSupply-SI", lambda mk: unlimited_supply_approx(mk, limited=True), _any, "any"),
        AlgorithmSpec("SMLP-Greedy-Utilitarian", _smlp(UTILITARIAN), _single_minded, "single-minded"),
        AlgorithmSpec("SMLP-Greedy-Egalitarian", _smlp(EGALITARIAN), _single_minded, "single-minded"),
        AlgorithmSpec("SMLP-Optimal-Utilitarian", _smlp("utilitarian"), _single_minded, "single-minded"),
        AlgorithmSpec("SMLP-Optimal-Egalitarian", _smlp("egalitarian"), _single_minded, "single-minded"),
        AlgorithmSpec("LP-Greedy-Utilitarian", _lp(UTILITARIAN), _any, "any"),
        AlgorithmSpec("LP-Greedy-Egalitarian", _lp(EGALITARIAN), _any, "any"),
        AlgorithmSpec("LP-Optimal-Utilitarian", _lp("utilitarian"), _any, "any"),
        AlgorithmSpec("LP-Optimal-Egalitarian", _lp("egalitarian"), _any, "any"),
    ]
}


def optimal_welfare(market: Market) -> float:
    return welfare(market, optimal_allocate(market, "utilitarian"))


def run_algorithm(name: str, market: Market, opt_welfare: Optional[float] = None,
                  timing: bool = True) -> tuple[Outcome, MetricsRecord]:
    """Run one algorithm and score it against the exact optimum.

    Only the algorithm call is timed. With ``timing=False`` the time is
    reported as 0 so repeated runs give identical records.
    """
    try:
        spec = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    if not spec.accepts(market):
        raise IncompatibleMarket(f"{name} requires a {spec.requirement} market")
    if opt_welfare is None:
        opt_welfare = optimal_welfare(market)
    start = time.perf_counter()
    outcome = spec.run(market)
    elapsed = (time.perf_counter() - start) * 1000.0 if timing else 0.0
    return outcome, metrics(market, outcome, opt_welfare, elapsed)


# -- suites --------------------------------------------------------------------

Config = Union[RandomKConfig, AdXConfig]


def group_of(cfg: Config, ratio: Optional[float] = None) -> str:
    """Over-/underdemanded label: from k for Random-k, from the realised S/D otherwise."""
    value = cfg.k if isinstance(cfg, RandomKConfig) else ratio
    if value is None:
        raise ValueError("a realised supply/demand ratio is needed to group this configuration")
    if value < 1:
        return "Overdemanded"
    if value > 1:
        return "Underdemanded"
    return "Balanced"


def make_market(cfg: Config) -> Market:
    return random_k_market(cfg) if isinstance(cfg, RandomKConfig) else adx_market(cfg)


@dataclass(frozen=True)
class SuiteRow:
    group: str
    params: dict
    algorithm: str
    record: MetricsRecord
    trials: int


@dataclass(frozen=True)
class _Trial:
    cfg: Config
    algorithms: tuple[str, ...]
    timing: bool


def _run_trial(task: _Trial) -> tuple[Optional[dict[str, MetricsRecord]], float]:
    market = make_market(task.cfg)
    opt = optimal_welfare(market)
    ratio = supply_demand_ratio(market)
    if opt <= 0:
        return None, ratio
    return {a: run_algorithm(a, market, opt, task.timing)[1] for a in task.algorithms}, ratio


def _workers(workers: Optional[int]) -> int:
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, workers)


def run_suite(configs: Sequence[Config], algorithms: Sequence[str], trials: int,
              timing: bool = True, workers: Optional[int] = None) -> list[SuiteRow]:
    """Mean metrics per (configuration, algorithm) over ``trials`` seeds ``cfg.seed + t``.

    Markets with zero optimal welfare carry no information for the ratio
    metrics and are left out of the means (logged).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    algorithms = tuple(algorithms)
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    tasks = [_Trial(replace(cfg, seed=cfg.seed + t), algorithms, timing)
             for cfg in configs for t in range(trials)]
    n_workers = _workers(workers)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_trial, tasks, chunksize=max(1, len(tasks) // (4 * n_workers))))
    else:
        results = [_run_trial(t) for t in tasks]

    rows = []
    for c, cfg in enumerate(configs):
        chunk = results[c * trials:(c + 1) * trials]
        kept = [rec for rec, _ in chunk if rec is not None]
        ratio = sum(r for _, r in chunk) / len(chunk)
        if len(kept) < len(chunk):
            log.info("%s: skipped %d trial(s) with zero optimal welfare", cfg, len(chunk) - len(kept))
        if not kept:
            continue
        params = {k: v for k, v in vars(cfg).items() if k not in ("seed", "demographics", "sites")}
        group = group_of(cfg, ratio)
        for a in algorithms:
            rows.append(SuiteRow(group, params, a, MetricsRecord.mean([rec[a] for rec in kept]), len(kept)))
    return rows


# -- scores and tables ------------------------------------------------------------

_MAXIMISE = (True, True, False, False, False, False, False)


def summary_score(records: dict[str, MetricsRecord]) -> dict[str, float]:
    """Distance to the per-dimension best, normalised so the worst algorithm scores 1."""
    if not records:
        return {}
    names = list(records)
    table = [records[a].as_tuple() for a in names]
    best = [max(col) if hi else min(col) for col, hi in zip(zip(*table), _MAXIMISE)]
    raw = {a: sum(abs(v - b) for v, b in zip(row, best)) for a, row in zip(names, table)}
    top = max(raw.values())
    return {a: (raw[a] / top if top > 0 else 0.0) for a in names}


@dataclass
class GroupTable:
    group: str
    records: dict[str, MetricsRecord] = field(default_factory=dict)
    scores: dict[str, float] = field(default_factory=dict)


GROUP_ORDER = ("Overdemanded", "Balanced", "Underdemanded")


def group_tables(rows: Iterable[SuiteRow]) -> list[GroupTable]:
    """Trial-weighted means per (group, algorithm), with summary scores per group."""
    acc: dict[str, dict[str, list[tuple[MetricsRecord, int]]]] = {}
    for row in rows:
        acc.setdefault(row.group, {}).setdefault(row.algorithm, []).append((row.record, row.trials))
    tables = []
    for group in sorted(acc, key=GROUP_ORDER.index):
        t = GroupTable(group)
        for alg, items in acc[group].items():
            total = sum(w for _, w in items)
            means = [sum(r.as_tuple()[d] * w for r, w in items) / total for d in range(len(MetricsRecord.FIELDS))]
            t.records[alg] = MetricsRecord(*means)
        t.scores = summary_score(t.records)
        tables.append(t)
    return tables


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def tables_to_csv(tables: Sequence[GroupTable], title: str = "") -> str:
    """Table layout: one header, a title row per group, one row per algorithm."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for t in tables:
        label = f"{title}, {t.group}" if title else t.group
        writer.writerow([label] + [""] * (len(CSV_HEADER) - 1))
        for alg, rec in t.records.items():
            writer.writerow([alg] + [_fmt(v) for v in rec.as_tuple()] + [_fmt(t.scores[alg])])
    return buf.getvalue()


def read_tables_csv(text: str) -> dict[str, dict[str, dict[str, float]]]:
    """Parse a table CSV back into ``{group title: {algorithm: {column: value}}}``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    out: dict[str, dict[str, dict[str, float]]] = {}
    current = None
    for row in reader:
        if not row:
            continue
        if all(cell == "" for cell in row[1:]):
            current = row[0]
            out[current] = {}
            continue
        if current is None:
            raise ValueError("algorithm row before any group title")
        out[current][row[0]] = {h: float(v) for h, v in zip(header[1:], row[1:])}
    return out


# -- built-in grids --------------------------------------------------------------

SINGLE_MINDED_ALGOS = ("SingleMindedApprox", "UnlimitedSupply", "SMLP-Greedy-Utilitarian",
                       "SMLP-Greedy-Egalitarian", "SMLP-Optimal-Utilitarian", "SMLP-Optimal-Egalitarian")
LP_ALGOS = ("LP-Greedy-Utilitarian", "LP-Greedy-Egalitarian", "LP-Optimal-Utilitarian", "LP-Optimal-Egalitarian")
SINGLETON_ALGOS = ("MaxWErApprox",) + LP_ALGOS
SI_ALGOS = ("UnlimitedSupply",) + LP_ALGOS


@dataclass(frozen=True)
class Grid:
    title: str
    distribution: str
    algorithms: tuple[str, ...]
    params: dict
    trials: int

    def configs(self, seed: int) -> list[Config]:
        # lists are grid axes; tuples (distribution tables) are passed through whole
        keys = sorted(k for k, v in self.params.items() if isinstance(v, list))
        fixed = {k: v for k, v in self.params.items() if k not in keys}
        out = []
        for values in itertools.product(*(self.params[k] for k in keys)):
            kw = dict(fixed, **dict(zip(keys, values)), seed=seed)
            out.append(RandomKConfig(**kw) if self.distribution == "random-k" else AdXConfig(**kw))
        return out


def builtin_grids(full: bool = False, trials: Optional[int] = None) -> dict[str, Grid]:
    """Desk-scale defaults; ``full`` switches to the full-scale parameter ranges."""
    if full:
        nm = list(range(1, 21))
        p, k, adx_m, adx_p, default_trials = [0.25, 0.5, 0.75, 1.0], [0.25, 0.33, 0.5, 1, 2, 3, 4], nm, [0.25, 0.5, 0.75, 1.0], 100
    else:
        nm, p, k, adx_m, adx_p, default_trials = [5, 10], [0.5], [0.5, 2], [2, 5, 10], [0.5], 30
    t = trials or default_trials
    rk = lambda variant: {"n": nm, "m": nm, "p": p, "k": k, "variant": variant}
    return {
        "table1": Grid("Single-Minded", "random-k", SINGLE_MINDED_ALGOS, rk("single-minded"), t),
        "table2": Grid("Singleton", "random-k", SINGLETON_ALGOS, rk("singleton"), t),
        "table3": Grid("Size-Interchangeable", "random-k", SI_ALGOS, rk("size-interchangeable"), t),
        "table4": Grid("TAC", "adx", SI_ALGOS, {"m": adx_m, "p": adx_p}, t if full else max(1, t // 3)),
    }


def run_grid(grid: Grid, seed: int = 0, timing: bool = True, workers: Optional[int] = None) -> str:
    rows = run_suite(grid.configs(seed), grid.algorithms, grid.trials, timing=timing, workers=workers)
    return tables_to_csv(group_tables(rows), grid.title)


def suite_from_dict(data: dict) -> tuple[Grid, int, bool]:
    """Parse an ``experiment`` config: distribution parameters, algorithms, trials, seed, timing."""
    data = dict(data)
    distribution = data.pop("distribution", "random-k")
    if distribution not in ("random-k", "adx"):
        raise ValueError(f"unknown distribution {distribution!r}")
    try:
        algorithms = tuple(data.pop("algorithms"))
    except KeyError:
        raise ValueError("suite config needs an 'algorithms' list") from None
    trials = int(data.pop("trials", 30))
    seed = int(data.pop("seed", 0))
    timing = bool(data.pop("timing", True))
    title = data.pop("title", "")
    for key in ("demographics", "sites"):
        if key in data:
            data[key] = tuple(data[key])
    return Grid(title, distribution, algorithms, data, trials), seed, timing
