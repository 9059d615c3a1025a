"""Timed action lists that drive a fabric run, and their text form.

Text form (one directive per line, ``#`` comments)::

    .expect timesteps=7
    .timestep 0
    .inject top=2 PROG dest=2 val=1.3 next=UPDATE ndest=3
    .vbcast col=0 rows=0:4 A_MULS dest=0 val=1 next=PROG ndest=0
    .hreduce row=0 sink=3 op=A_ADD
    .offload sites=3,7

``.outputs 3@6,7@6`` names the offloads (site@timestep) forming the result.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .isa import AsmError, MessageWord, Op, format_asm, parse_asm_line


@dataclass(frozen=True)
class Inject:
    port: str  # "left" (edge row index) or "top" (edge column index)
    index: int
    word: MessageWord

    def __post_init__(self):
        if self.port not in ("left", "top"):
            raise ValueError(f"port must be 'left' or 'top', got {self.port!r}")


@dataclass(frozen=True)
class Broadcast:
    col: int
    word: MessageWord
    rows: Optional[range] = None  # None drives the whole column


@dataclass(frozen=True)
class Reduce:
    row: int
    sink: int
    op: Op = Op.A_ADD


@dataclass(frozen=True)
class Offload:
    sites: tuple[int, ...]


Action = Union[Inject, Broadcast, Reduce, Offload]


@dataclass(frozen=True)
class InjectionSchedule:
    actions: tuple[tuple[int, Action], ...] = ()
    expected_timesteps: Optional[int] = None
    # (timestep, site) of the offload that yields each output element
    outputs: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        last = 0
        for t, _ in self.actions:
            if t < last:
                raise ValueError(f"timestep {t} after {last}: schedule must be nondecreasing")
            last = t

    @property
    def span(self) -> int:
        """Number of timesteps covered by scheduled actions."""
        return self.actions[-1][0] + 1 if self.actions else 0

    def shifted(self, offset: int) -> "InjectionSchedule":
        return InjectionSchedule(
            tuple((t + offset, a) for t, a in self.actions),
            None if self.expected_timesteps is None else self.expected_timesteps + offset,
            tuple((t + offset, s) for t, s in self.outputs),
        )

    def then(self, other: "InjectionSchedule") -> "InjectionSchedule":
        """Concatenate: `other` starts on the timestep after this one's expected end."""
        start = self.expected_timesteps if self.expected_timesteps is not None else self.span
        tail = other.shifted(start)
        return InjectionSchedule(
            self.actions + tail.actions,
            tail.expected_timesteps,
            tail.outputs or self.outputs,
        )


def _format_action(a: Action) -> str:
    if isinstance(a, Inject):
        return f".inject {a.port}={a.index} {format_asm(a.word)}"
    if isinstance(a, Broadcast):
        rows = "all" if a.rows is None else f"{a.rows.start}:{a.rows.stop}"
        return f".vbcast col={a.col} rows={rows} {format_asm(a.word)}"
    if isinstance(a, Reduce):
        return f".hreduce row={a.row} sink={a.sink} op={a.op.name}"
    if isinstance(a, Offload):
        return ".offload sites=" + ",".join(str(s) for s in a.sites)
    raise TypeError(a)


def dumps(schedule: InjectionSchedule) -> str:
    lines = ["# meshfab schedule"]
    if schedule.expected_timesteps is not None:
        lines.append(f".expect timesteps={schedule.expected_timesteps}")
    if schedule.outputs:
        lines.append(".outputs " + ",".join(f"{s}@{t}" for t, s in schedule.outputs))
    current = None
    for t, action in schedule.actions:
        if t != current:
            lines.append(f".timestep {t}")
            current = t
        lines.append(_format_action(action))
    return "\n".join(lines) + "\n"


_KV = re.compile(r"(\w+)=(\S+)")


def _sites(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s)


def loads(text: str) -> InjectionSchedule:
    actions = []
    expected = None
    outputs: tuple[tuple[int, int], ...] = ()
    t = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == ".timestep":
                t = int(rest)
            elif head == ".expect":
                expected = int(dict(_KV.findall(rest))["timesteps"])
            elif head == ".outputs":
                pairs = (item.split("@") for item in rest.split(",") if item)
                outputs = tuple((int(when), int(site)) for site, when in pairs)
            elif head == ".inject":
                port, _, asm = rest.partition(" ")
                name, _, idx = port.partition("=")
                actions.append((t, Inject(name, int(idx), parse_asm_line(asm, lineno))))
            elif head == ".vbcast":
                col, rows, asm = rest.split(" ", 2)
                col = int(col.removeprefix("col="))
                rows = rows.removeprefix("rows=")
                if rows == "all":
                    span = None
                else:
                    lo, hi = rows.split(":")
                    span = range(int(lo), int(hi))
                actions.append((t, Broadcast(col, parse_asm_line(asm, lineno), span)))
            elif head == ".hreduce":
                kv = dict(_KV.findall(rest))
                actions.append((t, Reduce(int(kv["row"]), int(kv["sink"]),
                                          Op.from_name(kv.get("op", "A_ADD")))))
            elif head == ".offload":
                actions.append((t, Offload(_sites(dict(_KV.findall(rest)).get("sites", "")))))
            else:
                raise ValueError(f"unknown directive {head!r}")
        except AsmError:
            raise
        except (KeyError, ValueError) as exc:
            raise AsmError(lineno, str(exc)) from None
    try:
        return InjectionSchedule(tuple(actions), expected, outputs)
    except ValueError as exc:
        raise AsmError(0, str(exc)) from None
