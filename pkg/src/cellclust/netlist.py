"""Technology-independent transistor netlists.

One device per line::

    mp1 d:OUT g:A s:VDD pmos

Terminal tokens may appear in any order after the device name; an optional
``b:`` bulk token is kept but never scored. ``#`` and ``*`` start comment
lines, and a single ``cell <name>`` header may precede the devices.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

__all__ = [
    "Kind",
    "Terminal",
    "Mosfet",
    "Netlist",
    "NetStat",
    "NetlistError",
    "UnknownNetsError",
    "parse_netlist",
    "serialize_netlist",
    "read_netlist",
    "device_line",
    "devices_on_nets",
    "net_statistics",
]

NAME_RE = re.compile(r"^[A-Za-z0-9_./:]+$")


class NetlistError(ValueError):
    """Raised for malformed netlist documents or lookups."""


class UnknownNetsError(NetlistError, KeyError):
    def __init__(self, nets: Iterable[str]):
        self.nets = list(nets)
        super().__init__("unknown nets: " + ", ".join(self.nets))

    def __str__(self) -> str:
        return self.args[0]


class Kind(str, enum.Enum):
    PMOS = "pmos"
    NMOS = "nmos"


class Terminal(str, enum.Enum):
    DRAIN = "d"
    GATE = "g"
    SOURCE = "s"

    @property
    def label(self) -> str:
        return {"d": "drain", "g": "gate", "s": "source"}[self.value]

    @property
    def is_diffusion(self) -> bool:
        return self is not Terminal.GATE


@dataclass(frozen=True)
class Mosfet:
    name: str
    drain: str
    gate: str
    source: str
    kind: Kind
    bulk: str | None = None

    def net(self, terminal: Terminal) -> str:
        if terminal is Terminal.DRAIN:
            return self.drain
        if terminal is Terminal.GATE:
            return self.gate
        return self.source

    def terminals(self) -> tuple[tuple[Terminal, str], ...]:
        """(terminal, net) in drain, gate, source order; bulk excluded."""
        return (
            (Terminal.DRAIN, self.drain),
            (Terminal.GATE, self.gate),
            (Terminal.SOURCE, self.source),
        )

    @property
    def nets(self) -> frozenset[str]:
        return frozenset((self.drain, self.gate, self.source))


@dataclass(frozen=True)
class Netlist:
    devices: tuple[Mosfet, ...]
    cell_name: str = ""
    net_index: Mapping[str, tuple[tuple[str, Terminal], ...]] = field(
        init=False, repr=False, compare=False
    )
    _by_name: Mapping[str, Mosfet] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        devices = tuple(self.devices)
        object.__setattr__(self, "devices", devices)
        if not devices:
            raise NetlistError("no devices")
        by_name: dict[str, Mosfet] = {}
        index: dict[str, list[tuple[str, Terminal]]] = {}
        for m in devices:
            if m.name in by_name:
                raise NetlistError(f"duplicate device name {m.name!r}")
            by_name[m.name] = m
            for term, net in m.terminals():
                index.setdefault(net, []).append((m.name, term))
        object.__setattr__(self, "_by_name", by_name)
        object.__setattr__(
            self,
            "net_index",
            {k: tuple(v) for k, v in index.items()},
        )

    def __len__(self) -> int:
        return len(self.devices)

    def __contains__(self, name: object) -> bool:
        return name in self._by_name

    def device(self, name: str) -> Mosfet:
        try:
            return self._by_name[name]
        except KeyError:
            raise NetlistError(f"unknown device {name!r}") from None

    @property
    def device_names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.devices)

    @property
    def nets(self) -> tuple[str, ...]:
        """Net names in order of first appearance."""
        return tuple(self.net_index)


def _parse_device(tokens: list[str], lineno: int) -> Mosfet:
    name, rest = tokens[0], tokens[1:]
    if not NAME_RE.match(name):
        raise NetlistError(f"line {lineno}: malformed device name {name!r}")
    nets: dict[str, str] = {}
    kind_tokens = []
    for tok in rest:
        prefix, sep, value = tok.partition(":")
        if sep and prefix.lower() in ("d", "g", "s", "b"):
            key = prefix.lower()
            if key in nets:
                raise NetlistError(f"line {lineno}: repeated terminal token {tok!r}")
            if not value or not NAME_RE.match(value):
                raise NetlistError(f"line {lineno}: malformed net in token {tok!r}")
            nets[key] = value
        else:
            kind_tokens.append(tok)
    if len(kind_tokens) != 1:
        bad = kind_tokens[1] if kind_tokens else name
        raise NetlistError(
            f"line {lineno}: expected exactly one device kind token, near {bad!r}"
        )
    try:
        kind = Kind(kind_tokens[0].lower())
    except ValueError:
        raise NetlistError(
            f"line {lineno}: unknown kind token {kind_tokens[0]!r} (expected pmos or nmos)"
        ) from None
    missing = [t for t in ("d", "g", "s") if t not in nets]
    if missing:
        raise NetlistError(
            f"line {lineno}: missing terminal(s) {', '.join(t + ':' for t in missing)}"
            f" near {tokens[-1]!r}"
        )
    return Mosfet(name, nets["d"], nets["g"], nets["s"], kind, nets.get("b"))


def parse_netlist(text: str) -> Netlist:
    cell_name = ""
    devices: list[Mosfet] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#*":
            continue
        tokens = line.split()
        if tokens[0] == "cell" and len(tokens) == 2:
            if cell_name or devices:
                raise NetlistError(f"line {lineno}: misplaced cell header")
            if not NAME_RE.match(tokens[1]):
                raise NetlistError(f"line {lineno}: malformed cell name {tokens[1]!r}")
            cell_name = tokens[1]
            continue
        m = _parse_device(tokens, lineno)
        if m.name in seen:
            raise NetlistError(
                f"line {lineno}: duplicate device name {m.name!r}"
                f" (first defined on line {seen[m.name]})"
            )
        seen[m.name] = lineno
        devices.append(m)
    if not devices:
        raise NetlistError("no devices")
    return Netlist(tuple(devices), cell_name)


def read_netlist(path) -> Netlist:
    with open(path, encoding="utf-8") as f:
        return parse_netlist(f.read())


def device_line(m: Mosfet, bulk: bool = True) -> str:
    parts = [m.name, f"d:{m.drain}", f"g:{m.gate}", f"s:{m.source}"]
    if bulk and m.bulk is not None:
        parts.append(f"b:{m.bulk}")
    parts.append(m.kind.value)
    return " ".join(parts)


def serialize_netlist(n: Netlist) -> str:
    lines = [f"cell {n.cell_name}"] if n.cell_name else []
    lines.extend(device_line(m) for m in n.devices)
    return "\n".join(lines) + "\n"


def devices_on_nets(n: Netlist, nets: Iterable[str]) -> list[str]:
    """Devices with any terminal on any of ``nets``, in netlist order."""
    nets = list(nets)
    if not nets:
        raise NetlistError("no nets given")
    unknown = [x for x in dict.fromkeys(nets) if x not in n.net_index]
    if unknown:
        raise UnknownNetsError(unknown)
    hit = {dev for x in nets for dev, _ in n.net_index[x]}
    return [name for name in n.device_names if name in hit]


@dataclass(frozen=True)
class NetStat:
    diffusion_pmos: int = 0
    diffusion_nmos: int = 0
    gate_pmos: int = 0
    gate_nmos: int = 0

    @property
    def diffusion(self) -> int:
        return self.diffusion_pmos + self.diffusion_nmos

    @property
    def gate(self) -> int:
        return self.gate_pmos + self.gate_nmos

    @property
    def degree(self) -> int:
        return self.diffusion + self.gate


def net_statistics(n: Netlist) -> dict[str, NetStat]:
    counts: dict[str, list[int]] = {net: [0, 0, 0, 0] for net in n.net_index}
    for net, refs in n.net_index.items():
        c = counts[net]
        for dev, term in refs:
            nmos = n.device(dev).kind is Kind.NMOS
            c[(0 if term.is_diffusion else 2) + nmos] += 1
    return {net: NetStat(*c) for net, c in counts.items()}
