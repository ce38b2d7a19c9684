"""Write the default synthetic benchmark (train + eval splits) to a directory.

    python3 scripts/gen_benchmark.py --out data --seed 0
"""

import argparse
from pathlib import Path

from tdgraph.cli import gen_data
from tdgraph.train import BENCHMARK_EVAL_VIDEOS, BENCHMARK_SYNTH, BENCHMARK_VIDEOS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--videos", type=int, default=BENCHMARK_VIDEOS)
    ap.add_argument("--eval-videos", type=int, default=BENCHMARK_EVAL_VIDEOS)
    args = ap.parse_args()
    for p in gen_data(BENCHMARK_SYNTH, Path(args.out), args.seed, args.videos, args.eval_videos):
        print(p)


if __name__ == "__main__":
    main()
