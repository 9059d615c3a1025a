"""Rank nodes of an interaction network on the simulated fabric.

Small networks (up to --fabric-limit nodes) run cycle by cycle and are checked
against the float64 reference; larger ones use the reference for the ranking
and the analytic model for the runtime.
"""

import argparse
from pathlib import Path

import numpy as np

from meshfab.fabric import FabricConfig
from meshfab.pagerank import (PageRankParams, build_transition, fabric_pagerank, load_graph,
                              rank_report, reference_pagerank, synthetic_network)
from meshfab.perf import tiled_runtime


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("edges", nargs="?", help="whitespace-separated edge list")
    p.add_argument("--synthetic", type=int, default=64, help="node count when no file is given")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--fabric-limit", type=int, default=64)
    args = p.parse_args()

    g = (load_graph(Path(args.edges).read_text()) if args.edges
         else synthetic_network(args.synthetic, seed=args.seed))
    params = PageRankParams(args.damping, args.iters)
    ref = reference_pagerank(build_transition(g), params)
    if g.n <= args.fabric_limit:
        run = fabric_pagerank(g, params, FabricConfig(64, 64))
        ranks = run.ranks
        print(f"# simulated {run.timesteps} timesteps ({run.seconds * 1e6:.3f} us at 200 MHz)")
        print(f"# max |fabric - reference| = {np.abs(ranks - ref).max():.3e}")
    else:
        ranks = ref
    rt = tiled_runtime(g.n, args.iters)
    print(f"# model: fractional {rt.fractional * 1e3:.4g} ms, ceil {rt.ceil * 1e3:.4g} ms")
    print(rank_report(ranks, g.labels, args.top), end="")


if __name__ == "__main__":
    main()
