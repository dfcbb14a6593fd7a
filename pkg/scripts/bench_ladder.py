"""Time exact alignments on a doubling size ladder and fit the log-log exponent.

    python3 scripts/bench_ladder.py --sizes 2k,4k,8k,16k --backing disk
"""
import argparse
import json

import numpy as np

from tracealign import AlignConfig
from tracealign.cli import parse_count, run_bench


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="2k,4k,8k,16k")
    ap.add_argument("--mode", choices=["exact", "fastdtw"], default="exact")
    ap.add_argument("--backing", choices=["auto", "memory", "disk"], default="disk")
    ap.add_argument("--cost-only", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="dump raw rows as JSON")
    args = ap.parse_args()

    sizes = [parse_count(s) for s in args.sizes.split(",")]
    config = AlignConfig(mode=args.mode, backing=args.backing, cost_only=args.cost_only)
    rows = run_bench(sizes, config, seed=args.seed)
    if args.json:
        print(json.dumps(rows, indent=2))
        return

    print(f"{'size':>8} {'cells':>14} {'wall s':>9} {'peak cells':>11} {'spill MB':>9}")
    for r in rows:
        print(f"{r['size']:>8} {r['cells_computed']:>14} {r['wall_time']:>9.3f} "
              f"{r['peak_resident_cells']:>11} {r['spill_bytes'] / 1e6:>9.1f}")
    if len(rows) > 1:
        t = [r["wall_time"] for r in rows]
        c = [r["cells_computed"] for r in rows]
        print(f"time exponent  {np.polyfit(np.log(sizes), np.log(t), 1)[0]:.2f}")
        print(f"cells exponent {np.polyfit(np.log(sizes), np.log(c), 1)[0]:.2f}")


if __name__ == "__main__":
    main()
