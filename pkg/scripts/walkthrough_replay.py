"""Replay the six-message walkthrough on a 4x4 fabric and print its trace."""

import argparse

from meshfab.fabric import Fabric, FabricConfig, format_trace, trace_csv
from meshfab.isa import format_value
from meshfab.scheduler import walkthrough_schedule


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--csv", action="store_true", help="print the trace as CSV")
    args = p.parse_args()

    fab = Fabric(FabricConfig(4, 4))
    result = fab.run(walkthrough_schedule())
    if args.csv:
        print(trace_csv(result.trace), end="")
    else:
        print(format_trace(result.trace), end="")
    print(f"timesteps={result.timesteps}")
    for site in range(4):
        print(f"site={site} value={format_value(fab.value(site))}")


if __name__ == "__main__":
    main()
