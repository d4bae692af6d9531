"""Layout snapshots, routability reports and metrics produced by an external
layout generator.

Coordinates are integers: x counts half contacted-poly-pitches, y counts half
cell rows. Sites that are not listed are dummies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from .netlist import Netlist, Terminal

__all__ = [
    "DUMMY",
    "Site",
    "Layout",
    "UnroutedNet",
    "RoutabilityReport",
    "LayoutMetrics",
    "LayoutError",
    "parse_layout",
    "serialize_layout",
    "parse_routability",
    "serialize_routability",
    "parse_metrics",
    "diffusion_break_adjacent_nets",
]

DUMMY = "dummy"


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Site:
    net: str = DUMMY
    device: str = DUMMY
    terminal: Terminal | None = None

    def __post_init__(self) -> None:
        if (self.device == DUMMY) != (self.net == DUMMY) or (
            self.device == DUMMY
        ) != (self.terminal is None):
            raise LayoutError(f"inconsistent dummy marking in site {self}")

    @property
    def is_dummy(self) -> bool:
        return self.device == DUMMY


DUMMY_SITE = Site()


@dataclass(frozen=True)
class Layout:
    columns: int
    rows: int
    sites: Mapping[tuple[int, int], Site] = field(default_factory=dict)
    cell: str = ""

    def site(self, x: int, y: int) -> Site:
        return self.sites.get((x, y), DUMMY_SITE)

    def coordinates(self):
        """Column-major: x ascending, then y ascending."""
        for x in range(self.columns):
            for y in range(self.rows):
                yield x, y

    @property
    def placed_devices(self) -> list[str]:
        return list(dict.fromkeys(s.device for _, s in sorted(self.sites.items())))


def _load(document) -> Any:
    if isinstance(document, (str, bytes)):
        return json.loads(document)
    return document


def _is_dummy_label(value) -> bool:
    return isinstance(value, str) and value.lower() == DUMMY


def parse_layout(document, netlist: Netlist | None = None) -> Layout:
    doc = _load(document)
    try:
        columns, rows = int(doc["columns"]), int(doc["rows"])
        entries = doc.get("sites", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise LayoutError(f"malformed layout document: {exc}") from None
    if columns < 0 or rows < 0:
        raise LayoutError("columns and rows must be non-negative")
    sites: dict[tuple[int, int], Site] = {}
    seen: set[tuple[int, int]] = set()
    for e in entries:
        x, y = int(e["x"]), int(e["y"])
        if not (0 <= x < columns and 0 <= y < rows):
            raise LayoutError(f"site ({x}, {y}) out of bounds {columns}x{rows}")
        if (x, y) in seen:
            raise LayoutError(f"duplicate coordinate ({x}, {y})")
        seen.add((x, y))
        # any site whose device is marked dummy is a dummy, whatever its net
        if _is_dummy_label(e.get("device")):
            continue
        try:
            term = Terminal(e["terminal"])
        except (KeyError, ValueError):
            raise LayoutError(
                f"site ({x}, {y}): terminal must be one of s, d, g"
            ) from None
        site = Site(str(e["net"]), str(e["device"]), term)
        if netlist is not None:
            if site.device not in netlist:
                raise LayoutError(f"site ({x}, {y}): unknown device {site.device!r}")
            expected = netlist.device(site.device).net(term)
            if expected != site.net:
                raise LayoutError(
                    f"site ({x}, {y}) contradicts netlist: {site.device}.{term.value}"
                    f" is {expected}, site says {site.net}"
                )
        sites[(x, y)] = site
    return Layout(columns, rows, dict(sorted(sites.items())), str(doc.get("cell", "")))


def serialize_layout(layout: Layout) -> str:
    doc = {
        "cell": layout.cell,
        "columns": layout.columns,
        "rows": layout.rows,
        "sites": [
            {"x": x, "y": y, "net": s.net, "device": s.device, "terminal": s.terminal.value}
            for (x, y), s in sorted(layout.sites.items())
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def diffusion_break_adjacent_nets(layout: Layout) -> set[str]:
    """Nets on source/drain sites that sit directly beside a dummy site.

    The grid boundary is not a diffusion break.
    """
    nets = set()
    for (x, y), s in layout.sites.items():
        if s.terminal is Terminal.GATE:
            continue
        for nx in (x - 1, x + 1):
            if 0 <= nx < layout.columns and layout.site(nx, y).is_dummy:
                nets.add(s.net)
                break
    return nets


@dataclass(frozen=True)
class UnroutedNet:
    net: str
    terminal_x_pairs: tuple[tuple[int, int], ...] = ()
    region_devices: tuple[str, ...] = ()


@dataclass(frozen=True)
class RoutabilityReport:
    unrouted: tuple[UnroutedNet, ...] = ()

    @property
    def nets(self) -> list[str]:
        return [u.net for u in self.unrouted]


def parse_routability(document, netlist: Netlist | None = None) -> RoutabilityReport:
    doc = _load(document)
    if not isinstance(doc, dict) or "unrouted" not in doc:
        raise LayoutError("routability report needs an 'unrouted' list")
    entries = []
    for e in doc["unrouted"]:
        net = str(e["net"])
        pairs = []
        for pair in e.get("terminal_x_pairs", []):
            x1, x2 = (int(v) for v in pair)
            if x1 > x2:
                raise LayoutError(f"net {net}: x1 > x2 in pair [{x1}, {x2}]")
            pairs.append((x1, x2))
        devices = tuple(str(d) for d in e.get("region_devices", []))
        if netlist is not None:
            if net not in netlist.net_index:
                raise LayoutError(f"unknown net {net!r} in routability report")
            missing = [d for d in devices if d not in netlist]
            if missing:
                raise LayoutError(
                    f"unknown devices in routability report: {', '.join(missing)}"
                )
        entries.append(UnroutedNet(net, tuple(pairs), devices))
    return RoutabilityReport(tuple(entries))


def serialize_routability(report: RoutabilityReport) -> str:
    doc = {
        "unrouted": [
            {
                "net": u.net,
                "terminal_x_pairs": [list(p) for p in u.terminal_x_pairs],
                "region_devices": list(u.region_devices),
            }
            for u in report.unrouted
        ]
    }
    return json.dumps(doc, indent=2) + "\n"


@dataclass(frozen=True)
class LayoutMetrics:
    cell_width_cpp: int
    total_wirelength: int

    def to_dict(self) -> dict[str, int]:
        return {"cell_width_cpp": self.cell_width_cpp, "total_wirelength": self.total_wirelength}


def parse_metrics(document) -> LayoutMetrics:
    doc = _load(document)
    m = LayoutMetrics(int(doc["cell_width_cpp"]), int(doc["total_wirelength"]))
    if m.cell_width_cpp < 0 or m.total_wirelength < 0:
        raise LayoutError("layout metrics must be non-negative")
    return m
