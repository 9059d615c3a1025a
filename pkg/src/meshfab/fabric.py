"""Cycle-stepped simulator of the site grid.

Sites are addressed row-major on an R x C torus. A message that is not at its
destination moves down while it is in the wrong row, then right along the
row; both directions wrap. Each cycle runs three phases:

1. every site looks at the head of its left FIFO, then its top FIFO;
2. each head message is routed (one departure per output link per cycle),
   consumed as PROG, or executed; a message whose output link is taken stays
   buffered;
3. scheduled bus transactions (column broadcast, row reduce, offload) commit.

Messages put on a link in cycle t are at the head of the neighbour's FIFO in
cycle t + 1.
"""

from __future__ import annotations

import logging
import os
from collections import deque
from dataclasses import dataclass, fields
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .isa import MAX_ADDRESS, MessageWord, Op, apply_instruction, format_value
from .schedule import Broadcast, Inject, InjectionSchedule, Offload, Reduce

log = logging.getLogger(__name__)

CONSUME, RIGHT, DOWN = "consume", "right", "down"

EVENT_KINDS = (
    "route-right", "route-down", "consume-prog", "execute", "emit",
    "bus-broadcast", "bus-reduce", "offload",
)


class SimulationError(RuntimeError):
    def __init__(self, msg: str, trace=None):
        super().__init__(msg)
        self.trace = trace or []


class FifoOverflow(SimulationError):
    pass


class WatchdogExpired(SimulationError):
    pass


@dataclass
class FabricConfig:
    rows: int = 4
    cols: int = 4
    fifo_depth: int = 4
    clock_hz: float = 200e6
    max_cycles: int = 1_000_000

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("fabric needs at least one row and one column")
        if self.rows * self.cols > MAX_ADDRESS + 1:
            raise ValueError(
                f"{self.rows}x{self.cols} fabric exceeds the {MAX_ADDRESS + 1}-site address space")
        if self.fifo_depth < 1:
            raise ValueError("fifo_depth must be positive")
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be positive")

    @property
    def sites(self) -> int:
        return self.rows * self.cols

    def address(self, row: int, col: int) -> int:
        return row * self.cols + col

    def coords(self, address: int) -> tuple[int, int]:
        return divmod(address, self.cols)

    @classmethod
    def from_text(cls, text: str) -> "FabricConfig":
        aliases = {"clock_frequency_hz": "clock_hz"}
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = aliases.get(key.strip(), key.strip())
            if not sep or key not in types:
                raise ValueError(f"line {lineno}: expected key=value with key in {sorted(types)}")
            kwargs[key] = float(value) if key == "clock_hz" else int(value)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "FabricConfig":
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))


def route_decision(current: int, dest: int, config: FabricConfig) -> str:
    if dest == current:
        return CONSUME
    if dest // config.cols != current // config.cols:
        return DOWN
    return RIGHT


def neighbour(address: int, direction: str, config: FabricConfig) -> int:
    r, c = divmod(address, config.cols)
    if direction == DOWN:
        return ((r + 1) % config.rows) * config.cols + c
    return r * config.cols + (c + 1) % config.cols


class TraceEvent(NamedTuple):
    cycle: int
    site: int
    kind: str
    word: Optional[MessageWord]
    value: Optional[np.float32]

    def format(self) -> str:
        word = "-" if self.word is None else f"{self.word.encode():016x}"
        value = "-" if self.value is None else format_value(self.value)
        return f"cycle={self.cycle} site={self.site} event={self.kind} word={word} value={value}"

    def csv_row(self) -> str:
        word = "" if self.word is None else f"{self.word.encode():016x}"
        value = "" if self.value is None else format_value(self.value)
        return f"{self.cycle},{self.site},{self.kind},{word},{value}"


def format_trace(trace) -> str:
    return "".join(e.format() + "\n" for e in trace)


def trace_csv(trace) -> str:
    return "cycle,site,event,word,value\n" + "".join(e.csv_row() + "\n" for e in trace)


def sites_written(trace) -> set[int]:
    """Addresses whose stored value was written by some event."""
    written = set()
    for e in trace:
        if e.kind in ("consume-prog", "bus-reduce"):
            written.add(e.site)
        elif e.kind in ("execute", "bus-broadcast") and e.word is not None:
            if e.word.opcode is Op.PROG or e.word.opcode.is_terminal:
                written.add(e.site)
    return written


class Site:
    __slots__ = ("address", "stored", "next_opcode", "next_destination",
                 "in_left", "in_top", "pending", "nonfinite")

    def __init__(self, address: int):
        self.address = address
        self.stored = np.float32(0.0)
        self.next_opcode = Op.PROG
        self.next_destination = 0
        self.in_left: deque[MessageWord] = deque()
        self.in_top: deque[MessageWord] = deque()
        # horizontal-bus output latch, filled by bus-delivered streaming ops
        self.pending: Optional[MessageWord] = None
        self.nonfinite = False

    def program(self, word: MessageWord):
        self.stored = word.value
        self.next_opcode = word.next_opcode
        self.next_destination = word.next_destination

    def continuation(self, value, incoming: MessageWord) -> MessageWord:
        return MessageWord(self.next_opcode, self.next_destination, value,
                           incoming.next_opcode, incoming.next_destination)


class RunResult(NamedTuple):
    values: np.ndarray
    timesteps: int
    trace: list
    offloaded: dict


class Fabric:
    def __init__(self, config: Optional[FabricConfig] = None, keep_trace: bool = True):
        self.config = config or FabricConfig()
        self.keep_trace = keep_trace
        self.sites = [Site(a) for a in range(self.config.sites)]
        self.cycle = 0
        self.trace: list[TraceEvent] = []
        # (cycle, site) -> value read out by an offload transaction
        self.offloaded: dict[tuple[int, int], np.float32] = {}
        self.nonfinite_count = 0
        self._due: dict[int, list] = {}
        self._active: set[int] = set()
        self._latched = 0  # sites whose bus latch is full

    # -- queries --------------------------------------------------------------

    def values(self) -> np.ndarray:
        return np.array([s.stored for s in self.sites], dtype=np.float32)

    def value(self, address: int) -> np.float32:
        return self.sites[address].stored

    def quiescent(self) -> bool:
        return not (self._due or self._active or self._latched)

    # -- scheduling -----------------------------------------------------------

    def _check_address(self, address: int):
        if not 0 <= address < self.config.sites:
            raise ValueError(f"site {address} outside a {self.config.sites}-site fabric")

    def _queue(self, cycle: Optional[int], action):
        cycle = self.cycle if cycle is None else cycle
        if cycle < self.cycle:
            raise ValueError(f"cycle {cycle} is already in the past (now {self.cycle})")
        self._due.setdefault(cycle, []).append(action)

    def inject(self, cycle: int, port: str, index: int, word: MessageWord):
        limit = self.config.rows if port == "left" else self.config.cols
        if not 0 <= index < limit:
            raise ValueError(f"{port}-edge port {index} out of range [0, {limit})")
        self._check_address(word.destination)
        self._queue(cycle, Inject(port, index, word))

    def column_broadcast(self, col: int, word: MessageWord, rows=None, cycle=None):
        if not 0 <= col < self.config.cols:
            raise ValueError(f"column {col} out of range")
        if rows is not None and not (0 <= rows.start and rows.stop <= self.config.rows):
            raise ValueError(f"row span {rows} out of range")
        self._queue(cycle, Broadcast(col, word, rows))

    def row_reduce(self, row: int, sink: int, op: Op = Op.A_ADD, cycle=None):
        if not 0 <= row < self.config.rows:
            raise ValueError(f"row {row} out of range")
        self._check_address(sink)
        if sink // self.config.cols != row:
            raise ValueError(f"sink {sink} is not in row {row}")
        if op is not Op.A_ADD:
            raise ValueError("the horizontal bus only combines with A_ADD")
        self._queue(cycle, Reduce(row, sink, op))

    def offload(self, sites, cycle=None):
        for a in sites:
            self._check_address(a)
        self._queue(cycle, Offload(tuple(sites)))

    def place(self, address: int, word: MessageWord, port: str = "left"):
        """Put a word straight into a site's input FIFO, as if it arrived there."""
        self._check_address(address)
        self._push(self.sites[address], port, word)

    def load(self, schedule: InjectionSchedule, start: Optional[int] = None):
        start = self.cycle if start is None else start
        for t, action in schedule.actions:
            if isinstance(action, Inject):
                self.inject(start + t, action.port, action.index, action.word)
            elif isinstance(action, Broadcast):
                self.column_broadcast(action.col, action.word, action.rows, start + t)
            elif isinstance(action, Reduce):
                self.row_reduce(action.row, action.sink, action.op, start + t)
            elif isinstance(action, Offload):
                self.offload(action.sites, start + t)
            else:
                raise TypeError(f"unknown action {action!r}")

    # -- stepping -------------------------------------------------------------

    def _push(self, site: Site, port: str, word: MessageWord):
        fifo = site.in_left if port == "left" else site.in_top
        if len(fifo) >= self.config.fifo_depth:
            raise FifoOverflow(
                f"cycle {self.cycle}: {port} FIFO of site {site.address} overflowed "
                f"(depth {self.config.fifo_depth})", self.trace)
        fifo.append(word)
        self._active.add(site.address)

    def _flag(self, site: Site, nonfinite: bool):
        if nonfinite:
            site.nonfinite = True
            self.nonfinite_count += 1

    def _handle(self, site: Site, word: MessageWord, used: set, outgoing: list, events: list) -> bool:
        cfg = self.config
        addr = site.address
        t = self.cycle
        direction = route_decision(addr, word.destination, cfg)
        if direction != CONSUME:
            if (addr, direction) in used:
                return False
            used.add((addr, direction))
            nxt = neighbour(addr, direction, cfg)
            outgoing.append((nxt, "left" if direction == RIGHT else "top", word))
            events.append((addr, 0, TraceEvent(t, addr, "route-" + direction, word, None)))
            return True
        if word.opcode is Op.PROG:
            site.program(word)
            events.append((addr, 0, TraceEvent(t, addr, "consume-prog", word, site.stored)))
            return True
        if word.opcode.is_streaming:
            out_dir = route_decision(addr, site.next_destination, cfg)
            link = (addr, out_dir)
            if link in used:
                return False
            res = apply_instruction(word.opcode, word.value, site.stored)
            emitted = site.continuation(res.emitted, word)
            if out_dir == CONSUME:
                outgoing.append((addr, "left", emitted))
            else:
                used.add(link)
                port = "left" if out_dir == RIGHT else "top"
                outgoing.append((neighbour(addr, out_dir, cfg), port, emitted))
            self._flag(site, res.nonfinite)
            events.append((addr, 0, TraceEvent(t, addr, "execute", word, site.stored)))
            events.append((addr, 0, TraceEvent(t, addr, "emit", emitted, res.emitted)))
            return True
        res = apply_instruction(word.opcode, word.value, site.stored)
        site.stored = res.stored
        self._flag(site, res.nonfinite)
        events.append((addr, 0, TraceEvent(t, addr, "execute", word, site.stored)))
        return True

    def _bus(self, action, events: list):
        cfg = self.config
        t = self.cycle
        if isinstance(action, Broadcast):
            rows = range(cfg.rows) if action.rows is None else action.rows
            word = action.word
            for r in rows:
                site = self.sites[r * cfg.cols + action.col]
                if word.opcode is Op.PROG:
                    site.program(word)
                    value = site.stored
                elif word.opcode.is_streaming:
                    if site.pending is not None:
                        raise SimulationError(
                            f"cycle {t}: bus latch of site {site.address} still full", self.trace)
                    res = apply_instruction(word.opcode, word.value, site.stored)
                    site.pending = site.continuation(res.emitted, word)
                    self._latched += 1
                    self._flag(site, res.nonfinite)
                    value = res.emitted
                else:
                    res = apply_instruction(word.opcode, word.value, site.stored)
                    site.stored = res.stored
                    self._flag(site, res.nonfinite)
                    value = site.stored
                events.append((site.address, 1,
                               TraceEvent(t, site.address, "bus-broadcast", word, value)))
        elif isinstance(action, Reduce):
            sink = self.sites[action.sink]
            base = action.row * cfg.cols
            contributors = [self.sites[base + c] for c in range(cfg.cols)
                            if self.sites[base + c].pending is not None]
            if not contributors:
                log.warning("cycle %d: row %d reduce with no pending values", t, action.row)
                events.append((sink.address, 1,
                               TraceEvent(t, sink.address, "bus-reduce", None, sink.stored)))
                return
            for site in contributors:  # ascending column order
                word = site.pending
                if word.destination != sink.address:
                    raise SimulationError(
                        f"cycle {t}: site {site.address} latched a value for {word.destination}, "
                        f"reduce targets {sink.address}", self.trace)
                if not word.opcode.is_terminal:
                    raise SimulationError(
                        f"cycle {t}: bus reduce cannot apply {word.opcode.name}", self.trace)
                res = apply_instruction(word.opcode, word.value, sink.stored)
                sink.stored = res.stored
                self._flag(sink, res.nonfinite)
                site.pending = None
                self._latched -= 1
                events.append((sink.address, 1,
                               TraceEvent(t, sink.address, "bus-reduce", word, sink.stored)))
        elif isinstance(action, Offload):
            for a in action.sites:
                self.offloaded[(t, a)] = self.sites[a].stored
                events.append((a, 1, TraceEvent(t, a, "offload", None, self.sites[a].stored)))
        else:
            raise TypeError(action)

    def step(self) -> list[TraceEvent]:
        t = self.cycle
        due = self._due.pop(t, [])
        bus = []
        for action in due:
            if isinstance(action, Inject):
                if action.port == "left":
                    site = self.sites[action.index * self.config.cols]
                else:
                    site = self.sites[action.index]
                self._push(site, action.port, action.word)
            else:
                bus.append(action)

        events: list = []
        used: set = set()
        outgoing: list = []
        for addr in sorted(self._active):
            site = self.sites[addr]
            if site.in_left and self._handle(site, site.in_left[0], used, outgoing, events):
                site.in_left.popleft()
            if site.in_top and self._handle(site, site.in_top[0], used, outgoing, events):
                site.in_top.popleft()
            if not site.in_left and not site.in_top:
                self._active.discard(addr)

        for action in bus:
            self._bus(action, events)

        for addr, port, word in outgoing:
            self._push(self.sites[addr], port, word)

        events.sort(key=lambda e: (e[0], e[1]))  # stable within (site, phase)
        out = [e for _, _, e in events]
        if self.keep_trace:
            self.trace.extend(out)
        self.cycle += 1
        return out

    def run(self, schedule: Optional[InjectionSchedule] = None, max_cycles: Optional[int] = None) -> RunResult:
        """Load `schedule` at the current cycle and step until quiescent."""
        if max_cycles is None:
            max_cycles = int(os.environ.get("MESHFAB_MAX_CYCLES", self.config.max_cycles))
        start_cycle = self.cycle
        start_event = len(self.trace)
        self.offloaded = {}
        if schedule is not None:
            self.load(schedule)
        while not self.quiescent():
            if not self._due and not self._active:
                raise SimulationError(
                    f"cycle {self.cycle}: bus latches hold values but no reduce is scheduled",
                    self.trace[start_event:])
            if self.cycle - start_cycle >= max_cycles:
                raise WatchdogExpired(
                    f"watchdog: not quiescent after {max_cycles} cycles",
                    self.trace[start_event:])
            self.step()
        offloaded = {(t - start_cycle, a): v for (t, a), v in self.offloaded.items()}
        return RunResult(self.values(), self.cycle - start_cycle,
                         self.trace[start_event:], offloaded)
