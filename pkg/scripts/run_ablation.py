"""Graph-mode ablation on the synthetic missing-label benchmark.

Trains every (graph mode, LSTM on/off) variant for each seed, regenerating
the benchmark per seed, and prints per-variant median frame-classification
and detection mAP.

    python3 scripts/run_ablation.py --seeds 0,1,2,3,4 --out ablation.csv
    python3 scripts/run_ablation.py --lstm-only   # dynamic / static / mean / none
"""

import argparse
import logging
import time

from tdgraph import io
from tdgraph.cli import format_table
from tdgraph.graph import GraphMode
from tdgraph.train import ALL_VARIANTS, ablation, benchmark_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--lstm-only", action="store_true")
    ap.add_argument("--out", help="optional CSV path")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    seeds = [int(s) for s in args.seeds.split(",")]
    variants = [(m, True) for m in GraphMode] if args.lstm_only else ALL_VARIANTS
    t0 = time.perf_counter()
    table = ablation(benchmark_config(epochs=args.epochs), seeds, variants=variants)
    print(format_table(table))
    print(f"{len(table)} runs in {time.perf_counter() - t0:.0f}s")
    if args.out:
        io.write_metrics(args.out, [(args.epochs, r["variant"], r["seed"], m, "all", r[m])
                                    for r in table for m in ("cls_map", "det_map")])


if __name__ == "__main__":
    main()
