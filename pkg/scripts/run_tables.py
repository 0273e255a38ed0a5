"""Regenerate the four table CSVs and print the headline trend checks.

    python scripts/run_tables.py --out-dir tables --trials 30
"""

import argparse
from pathlib import Path

from refp import harness


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="tables")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--no-timing", action="store_true")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, grid in harness.builtin_grids(full=args.full, trials=args.trials).items():
        text = harness.run_grid(grid, seed=args.seed, timing=not args.no_timing)
        (out / f"{name}.csv").write_text(text)
        print(f"== {name}: {grid.title} ({grid.trials} trials)")
        for group, rows in harness.read_tables_csv(text).items():
            best = min(rows, key=lambda a: rows[a]["Score"])
            print(f"  {group}: top scorer {best}")


if __name__ == "__main__":
    main()
