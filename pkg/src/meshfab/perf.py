"""Closed-form timestep and runtime model.

Per-kernel costs are the fabric's stage counts: a matvec over N rows takes
N + 3 timesteps and a PageRank iteration over N nodes takes N + 6.

For networks larger than the fabric, the N x N transition matrix is cut into
tiles of side s = sqrt(S) and each tile pays one iteration's structure at tile
granularity, (s + 6) timesteps. Two tile counts are offered:

    fractional   (N / s) ** 2          default
    ceil         ceil(N / s) ** 2

The fractional count gives 213.6 ms for 5000 nodes, 100 iterations and 4096
sites at 200 MHz, matching the quoted throughput target. It is reverse-engineered
from that target rather than derived from a stated formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

MODELS = ("fractional", "ceil")


@dataclass(frozen=True)
class CostParams:
    sites: int = 4096
    clock_hz: float = 2.0e8

    def __post_init__(self):
        if self.sites < 1:
            raise ValueError("sites must be positive")
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be positive")

    @property
    def side(self) -> int:
        s = math.isqrt(self.sites)
        if s * s != self.sites:
            raise ValueError(f"{self.sites} sites do not form a square fabric")
        return s


def matvec_latency(n: int) -> int:
    if n < 1:
        raise ValueError("N must be at least 1")
    return n + 3


def pagerank_timesteps(n: int, iterations: int) -> int:
    if n < 1 or iterations < 0:
        raise ValueError("need N >= 1 and iterations >= 0")
    return iterations * (n + 6)


def tiled_timesteps(n: int, iterations: int, c: CostParams = CostParams(),
                    model: str = "fractional") -> float:
    s = c.side
    if model == "fractional":
        tiles = (n / s) ** 2
    elif model == "ceil":
        tiles = math.ceil(n / s) ** 2
    else:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    return iterations * tiles * (s + 6)


class TiledRuntime(NamedTuple):
    fractional: float
    ceil: float


def tiled_runtime(n: int, iterations: int, c: CostParams = CostParams()) -> TiledRuntime:
    return TiledRuntime(
        tiled_timesteps(n, iterations, c, "fractional") / c.clock_hz,
        tiled_timesteps(n, iterations, c, "ceil") / c.clock_hz,
    )


def tiled_runtime_seconds(n: int, iterations: int, c: CostParams = CostParams(),
                          model: str = "fractional") -> float:
    return tiled_timesteps(n, iterations, c, model) / c.clock_hz


SWEEP_HEADER = "N,n,S,f_hz,timesteps,seconds,model"


def _row(n, iterations, c, timesteps, seconds, model) -> str:
    return f"{n},{iterations},{c.sites},{c.clock_hz:.0f},{timesteps:.10g},{seconds:.10g},{model}"


def matvec_sweep(sizes: Iterable[int], c: CostParams = CostParams(),
                 model: str = "fractional") -> str:
    """Latency versus matrix rows; the count does not depend on the model."""
    lines = [SWEEP_HEADER]
    for n in sizes:
        steps = matvec_latency(n)
        lines.append(_row(n, 1, c, steps, steps / c.clock_hz, model))
    return "\n".join(lines) + "\n"


def throughput_sweep(sizes: Iterable[int], iterations: int = 100, c: CostParams = CostParams(),
                     model: str = "fractional") -> str:
    lines = [SWEEP_HEADER]
    for n in sizes:
        steps = tiled_timesteps(n, iterations, c, model)
        lines.append(_row(n, iterations, c, steps, steps / c.clock_hz, model))
    return "\n".join(lines) + "\n"
