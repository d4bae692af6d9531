"""Deterministic text renderers for everything the agent reads.

All builders are pure: identical inputs give byte-identical text. Wording is
pinned by the golden files under ``tests/goldens``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .cluster import ClusterConstraints, ScoreBreakdown, dumps_constraints, format_score
from .layout import Layout, RoutabilityReport
from .netlist import Netlist, device_line
from .tools import list_tools

__all__ = [
    "DEFAULT_GUIDANCE",
    "GuidanceConfig",
    "netlist_topology_prompt",
    "physical_layout_prompt",
    "routability_prompt",
    "tools_section",
    "react_scaffold",
    "system_guidance",
]

DEFAULT_GUIDANCE = """\
You are an expert standard cell layout designer. Your job is to improve the \
device cluster constraints that a layout generator uses to place transistors.

Design guidance:
- Devices in one cluster are placed next to each other. Clustering PMOS or \
NMOS devices whose source/drain terminals share a net enables diffusion \
sharing, which removes diffusion breaks and reduces cell width.
- A PMOS and an NMOS driven by the same gate net can share a gate column. \
Cluster such pairs to create common gates.
- Start from nets with many connections, and from nets next to a dummy \
(diffusion break) in the physical layout. Grouping the devices on those nets \
is usually the best way to remove breaks.
- When a routability report lists unrouted nets, lower the pin density in the \
unrouted region: cluster devices that can share terminals across PMOS and \
NMOS, and share diffusion, so fewer pins need separate access.
- Keep clusters small enough to stay meaningful. A higher cluster score means \
more potential diffusion sharing and common gates, but the score is only an \
estimate.
- Every MOSFET is written as NAME d:DRAIN g:GATE s:SOURCE TYPE."""


@dataclass(frozen=True)
class GuidanceConfig:
    guidance_text: str = DEFAULT_GUIDANCE

    def __post_init__(self) -> None:
        if not self.guidance_text.strip():
            raise ValueError("guidance text must be nonempty")


def netlist_topology_prompt(
    n: Netlist, cc: ClusterConstraints, sb: ScoreBreakdown
) -> str:
    lines = ["MOSFET connection and description:"]
    lines.extend(device_line(m, bulk=False) for m in n.devices)
    lines += [
        "",
        "Previous cluster constraints:",
        dumps_constraints(cc),
        "",
        f"Cluster score: {format_score(sb.total)}",
        f"Number of clusters: {len(cc)}",
    ]
    return "\n".join(lines) + "\n"


def physical_layout_prompt(layout: Layout) -> str:
    lines = [
        "Physical layout (x unit: half CPP, y unit: half cell row; "
        f"{layout.columns} columns, {layout.rows} rows):"
    ]
    for x, y in layout.coordinates():
        s = layout.site(x, y)
        term = s.terminal.label if s.terminal is not None else "-"
        lines.append(f"(x={x}, y={y}): net={s.net} device={s.device} terminal={term}")
    return "\n".join(lines) + "\n"


def routability_prompt(report: RoutabilityReport) -> str:
    lines = ["Routability report:"]
    if not report.unrouted:
        lines.append("All nets routed.")
    for u in report.unrouted:
        pairs = ", ".join(f"({a}, {b})" for a, b in u.terminal_x_pairs) or "none"
        lines.append(f"Unrouted net {u.net}: terminal x-coordinate pairs: {pairs}")
        lines.append(
            "Devices in unrouted region: " + (", ".join(u.region_devices) or "none")
        )
    return "\n".join(lines) + "\n"


def tools_section() -> str:
    lines = ["You have access to the following netlist tools:"]
    for t in list_tools():
        lines.append(f"- {t['name']}: {t['description']}")
        lines.append(f"  action_input: {json.dumps(t['usage'])}")
    return "\n".join(lines) + "\n"


def react_scaffold() -> str:
    names = ", ".join(t["name"] for t in list_tools())
    return f"""\
Use a JSON blob to call a tool, with an "action" key (the tool name) and an \
"action_input" key (the tool arguments).
Valid "action" values: "Final Answer" or one of {names}.
Provide only ONE action per JSON blob, for example:
```
{{"action": "get_group_devices_from_nets", "action_input": {{"nets": ["NET1"]}}}}
```

Follow this format:

Thought: reason about the netlist, the layout and the previous steps
Action:
```
$JSON_BLOB
```
Observation: the tool result
... (Thought/Action/Observation can repeat)
Thought: I know the final cluster constraints
Action:
```
{{"action": "Final Answer", "action_input": {{"cluster_1": ["DEVICE", "..."]}}}}
```

The Final Answer action_input maps each cluster name to its device list. \
Never write an Observation yourself; it is returned by the tool.
"""


def system_guidance(g: GuidanceConfig | None = None) -> str:
    g = g or GuidanceConfig()
    return "\n".join([g.guidance_text.rstrip("\n"), "", tools_section(), react_scaffold()])
