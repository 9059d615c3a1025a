"""``meshfab`` command line.

Exit codes: 0 success, 1 usage error, 2 input parse error, 3 simulation error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import perf, schedule as schedmod
from .fabric import Fabric, FabricConfig, SimulationError, format_trace, trace_csv
from .isa import AsmError, IsaError, assemble, disassemble, format_hex, format_value, parse_hex
from .pagerank import (GraphError, PageRankParams, build_transition, fabric_pagerank,
                       load_graph, rank_report, reference_pagerank, run_summary,
                       synthetic_network)
from .scheduler import (build_pagerank_iteration, build_tiled_matvec, result_vector,
                        walkthrough_schedule)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_SIM = 0, 1, 2, 3

WALKTHROUGH_NOTE = ("note: site 3 accumulates the products 1.1 + 2.4 + 3.9 = 7.4; "
                    "the 7.9 sometimes quoted for this walkthrough does not follow from them")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(str(exc)) from None


def _fabric_config(args, default=(64, 64)) -> FabricConfig:
    if args.fabric:
        try:
            return FabricConfig.from_text(_read(args.fabric))
        except ValueError as exc:
            raise IsaError(f"{args.fabric}: {exc}") from None
    return FabricConfig(*default)


def _emit(args, name: str, text: str):
    """Write to --out/<name> when an output dir is given, else stdout."""
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_asm(args):
    _emit(args, "words.hex", format_hex(assemble(_read(args.input))))


def cmd_disasm(args):
    lines = []
    for lineno, line in enumerate(_read(args.input).splitlines(), 1):
        try:
            lines.append(disassemble(parse_hex(line)))
        except IsaError as exc:
            raise AsmError(lineno, str(exc)) from None
    _emit(args, "words.asm", "".join(lines))


def cmd_schedule(args):
    rng = np.random.default_rng(args.seed)
    config = _fabric_config(args)
    if args.kind == "walkthrough":
        sched = walkthrough_schedule()
    elif args.kind == "matvec":
        A = rng.uniform(-1, 1, (args.rows, args.cols)).astype(np.float32)
        B = rng.uniform(-1, 1, args.cols).astype(np.float32)
        _, sched = build_tiled_matvec(A, B, config)
    else:
        g = synthetic_network(args.rows, seed=args.seed)
        pr = np.full(g.n, 1.0 / g.n)
        sched = build_pagerank_iteration(build_transition(g), pr, args.damping, config)
    _emit(args, f"{args.kind}.sched", schedmod.dumps(sched))


def cmd_run(args):
    sched = schedmod.loads(_read(args.schedule))
    config = _fabric_config(args)
    try:
        result = Fabric(config).run(sched)
    except SimulationError:
        raise
    except ValueError as exc:
        raise SimulationError(f"schedule does not fit a {config.rows}x{config.cols} fabric: {exc}")
    if args.trace:
        _emit(args, "trace.txt", format_trace(result.trace))
        if args.out:
            _emit(args, "trace.csv", trace_csv(result.trace))
    lines = [f"timesteps={result.timesteps}"]
    if sched.expected_timesteps is not None and sched.expected_timesteps != result.timesteps:
        lines.append(f"warning: schedule expected {sched.expected_timesteps} timesteps")
    written = sorted({e.site for e in result.trace if e.value is not None})
    for a in written:
        lines.append(f"site={a} value={format_value(result.values[a])}")
    if sched.outputs:
        out = result_vector(sched, result)
        lines.append("outputs=" + ",".join(format_value(v) for v in out))
    if sched == walkthrough_schedule():
        lines.append(WALKTHROUGH_NOTE)
    _emit(args, "run.txt", "\n".join(lines) + "\n")


def cmd_pagerank(args):
    params = PageRankParams(args.damping, args.iters)
    if args.model_only:
        if not args.nodes:
            raise UsageError("--model-only needs --nodes")
        c = perf.CostParams(args.sites, args.clock_hz)
        rt = perf.tiled_runtime(args.nodes, args.iters, c)
        chosen = getattr(rt, args.model)
        other = "ceil" if args.model == "fractional" else "fractional"
        _emit(args, "model.txt",
              f"N={args.nodes} n={args.iters} S={c.sites} f_hz={c.clock_hz:.0f}\n"
              f"model={args.model} seconds={chosen:.9g} ({chosen * 1e3:.1f} ms)\n"
              f"model={other} seconds={getattr(rt, other):.9g} "
              f"({getattr(rt, other) * 1e3:.1f} ms)\n")
        return
    if args.synthetic:
        g = synthetic_network(args.synthetic, seed=args.seed)
    elif args.edges:
        g = load_graph(_read(args.edges), directed=args.directed)
    else:
        raise UsageError("give an edge list, --synthetic N, or --model-only")
    config = _fabric_config(args)
    run = fabric_pagerank(g, params, config)
    _emit(args, "ranks.csv", rank_report(run.ranks, g.labels, args.top))
    summary = run_summary(g.n, run.iterations, params.damping, run.timesteps, run.seconds)
    if args.check:
        oracle = reference_pagerank(build_transition(g), params)
        summary += f"max_abs_diff_vs_float64={np.abs(run.ranks - oracle).max():.3g}\n"
    _emit(args, "summary.csv", summary)


def _range(args) -> list[int]:
    if args.start > args.stop:
        return []
    values = []
    v = args.start
    while v <= args.stop:
        values.append(v)
        v = v * 2 if args.geometric else v + args.step
    return values


def cmd_sweep(args):
    c = perf.CostParams(args.sites, args.clock_hz)
    if args.kind == "matvec-latency":
        defaults = (256, 8192, True)
    else:
        defaults = (1000, 5000, False)
    if args.start is None:
        args.start, args.stop = defaults[0], defaults[1]
        args.geometric = args.geometric or defaults[2]
    if args.stop is None:
        args.stop = args.start
    if not args.geometric and args.step < 1:
        raise UsageError("--step must be positive")
    sizes = _range(args)
    if args.kind == "matvec-latency":
        text = perf.matvec_sweep(sizes, c, args.model)
    else:
        text = perf.throughput_sweep(sizes, args.iters, c, args.model)
    _emit(args, f"{args.kind}.csv", text)


def cmd_generate(args):
    _emit(args, "network.tsv", synthetic_network(args.nodes, seed=args.seed).to_edge_list())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meshfab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fabric=True):
        sp.add_argument("--out", help="write outputs into this directory instead of stdout")
        sp.add_argument("--seed", type=int, default=42)
        if fabric:
            sp.add_argument("--fabric", help="key=value fabric configuration file")

    sp = sub.add_parser("asm", help="assembly text -> hex words")
    sp.add_argument("input")
    common(sp, fabric=False)
    sp.set_defaults(func=cmd_asm)

    sp = sub.add_parser("disasm", help="hex words -> assembly text")
    sp.add_argument("input")
    common(sp, fabric=False)
    sp.set_defaults(func=cmd_disasm)

    sp = sub.add_parser("schedule", help="emit a kernel schedule file")
    sp.add_argument("kind", choices=["walkthrough", "matvec", "pagerank"])
    sp.add_argument("--rows", type=int, default=4, help="matrix rows / network nodes")
    sp.add_argument("--cols", type=int, default=3, help="matrix columns")
    sp.add_argument("--damping", type=float, default=0.85)
    common(sp)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("run", help="execute a schedule on the simulator")
    sp.add_argument("schedule")
    sp.add_argument("--trace", action="store_true", help="emit the full event trace")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("pagerank", help="PageRank on the simulated fabric")
    sp.add_argument("edges", nargs="?", help="whitespace-separated edge list, one edge per line")
    sp.add_argument("--synthetic", type=int, metavar="N", help="use a seeded N-node network")
    sp.add_argument("--directed", action="store_true")
    sp.add_argument("--damping", type=float, default=0.85)
    sp.add_argument("--iters", type=int, default=100)
    sp.add_argument("--top", type=int, default=None)
    sp.add_argument("--check", action="store_true", help="compare against the float64 oracle")
    sp.add_argument("--model-only", action="store_true", help="analytic runtime only")
    sp.add_argument("--nodes", type=int, help="network size for --model-only")
    sp.add_argument("--model", choices=perf.MODELS, default="fractional")
    sp.add_argument("--sites", type=int, default=4096)
    sp.add_argument("--clock-hz", type=float, default=2e8)
    common(sp)
    sp.set_defaults(func=cmd_pagerank)

    sp = sub.add_parser("sweep", help="analytic sweep CSV")
    sp.add_argument("kind", choices=["matvec-latency", "pagerank-throughput"])
    sp.add_argument("--start", type=int)
    sp.add_argument("--stop", type=int)
    sp.add_argument("--step", type=int, default=1000)
    sp.add_argument("--geometric", action="store_true", help="double instead of adding --step")
    sp.add_argument("--iters", type=int, default=100)
    sp.add_argument("--model", choices=perf.MODELS, default="fractional")
    sp.add_argument("--sites", type=int, default=4096)
    sp.add_argument("--clock-hz", type=float, default=2e8)
    common(sp, fabric=False)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("generate", help="write a seeded synthetic interaction network")
    sp.add_argument("--nodes", type=int, default=5000)
    common(sp, fabric=False)
    sp.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"meshfab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IsaError, GraphError) as exc:
        print(f"meshfab: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SimulationError as exc:
        print(f"meshfab: simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    except ValueError as exc:
        print(f"meshfab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
