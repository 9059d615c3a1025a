"""Matvec latency versus matrix rows: simulated where the matrix fits on a
64x64 fabric, analytic beyond that."""

import argparse

import numpy as np

from meshfab.fabric import Fabric, FabricConfig
from meshfab.perf import matvec_latency
from meshfab.scheduler import build_matvec


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cols", type=int, nargs="+", default=[2, 4, 8])
    p.add_argument("--seed", type=int, default=42)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    cfg = FabricConfig(64, 64)
    print("N,M,timesteps,source")
    for n in (2, 4, 8, 16, 32, 64):
        for m in args.cols:
            s = build_matvec(rng.standard_normal((n, m)), rng.standard_normal(m), cfg)
            steps = Fabric(cfg, keep_trace=False).run(s).timesteps
            print(f"{n},{m},{steps},simulated")
    for n in (256, 512, 1024, 2048, 4096, 8192):
        print(f"{n},-,{matvec_latency(n)},model")


if __name__ == "__main__":
    main()
