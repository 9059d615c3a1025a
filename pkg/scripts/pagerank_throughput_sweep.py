"""Modeled PageRank runtime versus network size under both tile-count models."""

import argparse

from meshfab.perf import MODELS, CostParams, throughput_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sizes", type=int, nargs="+", default=[1000, 2000, 3000, 4000, 5000])
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--sites", type=int, default=4096)
    p.add_argument("--clock-hz", type=float, default=2e8)
    args = p.parse_args()

    c = CostParams(args.sites, args.clock_hz)
    for i, model in enumerate(MODELS):
        text = throughput_sweep(args.sizes, args.iters, c, model)
        print(text if i == 0 else text.split("\n", 1)[1], end="")


if __name__ == "__main__":
    main()
