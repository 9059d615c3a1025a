"""Lowering of matrix-vector multiply and PageRank iterations onto the fabric.

Untiled mapping of an N x M matrix: entry (i, j) lives at site (i, j) and the
output for row i accumulates at the sink (i, M). Stage timing:

    t = 0 .. N-1   matrix rows enter from the top edge, last row first, and
                   hop down so every row lands in the same cycle
    t = N          vector element j is broadcast down column j (A_MULS)
    t = N+1        each row reduces its products into its sink
    t = N+2        sinks are offloaded

PageRank adds a damping multiply, a teleport add and a second offload, giving
N + 6 timesteps per iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .fabric import FabricConfig, RunResult
from .isa import MessageWord, Op
from .schedule import Broadcast, Inject, InjectionSchedule, Offload, Reduce


class NeedsTiling(ValueError):
    pass


class Unschedulable(ValueError):
    pass


def fits_untiled(n: int, m: int, config: FabricConfig) -> bool:
    return n <= config.rows and m + 1 <= config.cols and n * m + n <= config.sites


def _check_fit(n: int, m: int, config: FabricConfig):
    if not fits_untiled(n, m, config):
        raise NeedsTiling(
            f"{n}x{m} matrix needs {n * m + n} sites in {n} rows and {m + 1} columns; "
            f"fabric is {config.rows}x{config.cols}; use build_tiled_matvec")


def _as_f32(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float32)


def _matvec_stages(A: np.ndarray, B: np.ndarray, config: FabricConfig,
                   sink_col: int, accumulate: bool) -> tuple[list, list[int]]:
    """Actions for load / multiply / reduce, relative to t = 0.

    With ``accumulate`` false the column-0 product resets its sink (UPDATE);
    otherwise every product is added onto the sink's current value.
    """
    n, m = A.shape
    sinks = [config.address(i, sink_col) for i in range(n)]
    actions = []
    for k in range(n):
        i = n - 1 - k
        for j in range(m):
            first = j == 0 and not accumulate
            word = MessageWord(Op.PROG, config.address(i, j), A[i, j],
                               Op.UPDATE if first else Op.A_ADD, sinks[i])
            actions.append((k, Inject("top", j, word)))
    rows = range(n)
    for j in range(m):
        actions.append((n, Broadcast(j, MessageWord(Op.A_MULS, config.address(0, j), B[j]), rows)))
    for i in range(n):
        actions.append((n + 1, Reduce(i, sinks[i])))
    return actions, sinks


def build_matvec(A, B, config: FabricConfig) -> InjectionSchedule:
    A = _as_f32(A)
    B = _as_f32(B)
    n, m = A.shape
    if B.shape != (m,):
        raise ValueError(f"vector of shape {B.shape} does not match {n}x{m} matrix")
    _check_fit(n, m, config)
    actions, sinks = _matvec_stages(A, B, config, sink_col=m, accumulate=False)
    actions.append((n + 2, Offload(tuple(sinks))))
    return InjectionSchedule(tuple(actions), n + 3, tuple((n + 2, s) for s in sinks))


def _pagerank_tail(nodes: int, sinks: list[int], sink_col: int, d, t0: int) -> list:
    rows = range(len(sinks))
    damp = MessageWord(Op.A_MUL, sinks[0], np.float32(d))
    teleport = MessageWord(Op.A_ADD, sinks[0], np.float32((1.0 - d) / nodes))
    return [
        (t0, Broadcast(sink_col, damp, rows)),
        (t0 + 1, Broadcast(sink_col, teleport, rows)),
        (t0 + 2, Offload(tuple(sinks))),
    ]


def build_pagerank_iteration(H, pr_prev, d: float, config: FabricConfig) -> InjectionSchedule:
    """One power-iteration step, PR_next = d * H @ PR_prev + (1 - d) / N."""
    H = _as_f32(H)
    pr_prev = _as_f32(pr_prev)
    n = H.shape[0]
    if H.shape != (n, n) or pr_prev.shape != (n,):
        raise ValueError("H must be square and match the rank vector")
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"damping {d} outside [0, 1]")
    _check_fit(n, n, config)
    actions, sinks = _matvec_stages(H, pr_prev, config, sink_col=n, accumulate=False)
    actions.append((n + 2, Offload(tuple(sinks))))
    actions += _pagerank_tail(n, sinks, n, d, n + 3)
    return InjectionSchedule(tuple(actions), n + 6, tuple((n + 5, s) for s in sinks))


@dataclass(frozen=True)
class Tile:
    row_block: int
    col_block: int
    rows: range
    cols: range


@dataclass(frozen=True)
class TilePlan:
    n: int
    m: int
    tile_rows: int
    tile_cols: int
    row_blocks: int
    col_blocks: int
    sink_col: int

    @classmethod
    def for_shape(cls, n: int, m: int, config: FabricConfig) -> "TilePlan":
        if config.cols < 2:
            raise Unschedulable(f"{config.rows}x{config.cols} fabric has no room for a sink column")
        tile_rows, tile_cols = config.rows, config.cols - 1
        return cls(n, m, tile_rows, tile_cols, math.ceil(n / tile_rows),
                   math.ceil(m / tile_cols), tile_cols)

    @property
    def accumulation_order(self) -> tuple[int, ...]:
        return tuple(range(self.col_blocks))

    def tiles(self) -> Iterator[Tile]:
        for rb in range(self.row_blocks):
            rows = range(rb * self.tile_rows, min((rb + 1) * self.tile_rows, self.n))
            for cb in self.accumulation_order:
                cols = range(cb * self.tile_cols, min((cb + 1) * self.tile_cols, self.m))
                yield Tile(rb, cb, rows, cols)

    def timesteps(self, pagerank: bool = False) -> int:
        total = 0
        for rb in range(self.row_blocks):
            height = min(self.tile_rows, self.n - rb * self.tile_rows)
            total += self.col_blocks * (height + 3) + (3 if pagerank else 0)
        return total


def _tiled(A: np.ndarray, B: np.ndarray, config: FabricConfig, d=None):
    n, m = A.shape
    plan = TilePlan.for_shape(n, m, config)
    actions = []
    outputs = []
    t = 0
    for tile in plan.tiles():
        height = len(tile.rows)
        block = A[tile.rows.start:tile.rows.stop, tile.cols.start:tile.cols.stop]
        stage, sinks = _matvec_stages(block, B[tile.cols.start:tile.cols.stop], config,
                                      plan.sink_col, accumulate=tile.col_block > 0)
        actions += [(t + dt, a) for dt, a in stage]
        actions.append((t + height + 2, Offload(tuple(sinks))))
        t += height + 3
        if tile.col_block == plan.col_blocks - 1:
            if d is not None:
                actions += _pagerank_tail(n, sinks, plan.sink_col, d, t)
                t += 3
            outputs += [(t - 1, s) for s in sinks]
    sched = InjectionSchedule(tuple(actions), t, tuple(outputs))
    assert t == plan.timesteps(pagerank=d is not None)
    return plan, sched


def build_tiled_matvec(A, B, config: FabricConfig) -> tuple[TilePlan, InjectionSchedule]:
    A = _as_f32(A)
    B = _as_f32(B)
    n, m = A.shape
    if B.shape != (m,):
        raise ValueError(f"vector of shape {B.shape} does not match {n}x{m} matrix")
    if fits_untiled(n, m, config):
        plan = TilePlan(n, m, n, m, 1, 1, m)
        return plan, build_matvec(A, B, config)
    return _tiled(A, B, config)


def build_tiled_pagerank_iteration(H, pr_prev, d: float, config: FabricConfig):
    H = _as_f32(H)
    pr_prev = _as_f32(pr_prev)
    n = H.shape[0]
    if fits_untiled(n, n, config):
        return TilePlan(n, n, n, n, 1, 1, n), build_pagerank_iteration(H, pr_prev, d, config)
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"damping {d} outside [0, 1]")
    return _tiled(H, pr_prev, config, d=d)


def result_vector(schedule: InjectionSchedule, result: RunResult) -> np.ndarray:
    """Gather the schedule's output elements from a run's offloads."""
    return np.array([result.offloaded[key] for key in schedule.outputs], dtype=np.float32)


def walkthrough_schedule() -> InjectionSchedule:
    """Six-message walkthrough on one row: program sites 0-2, then stream
    three products towards site 3 over the hop links."""
    progs = [(1.1, Op.A_ADD), (1.2, Op.A_ADD), (1.3, Op.UPDATE)]
    actions = []
    for col, (value, cont) in enumerate(progs):
        actions.append((0, Inject("top", col, MessageWord(Op.PROG, col, value, cont, 3))))
    for col, value in enumerate((1.0, 2.0, 3.0)):
        actions.append((1, Inject("top", col, MessageWord(Op.A_MULS, col, value))))
    # site 3 sees UPDATE at t=2 and the two adds at t=3, t=4
    return InjectionSchedule(tuple(actions), 5)
