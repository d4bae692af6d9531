"""The four netlist tools an optimizer or agent calls, and the session they
share.

Every tool goes through :func:`invoke`, which never raises for tool-level
problems: bad nets, unknown devices or invalid constraints come back as an
``ok=False`` observation and leave the session untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import jsonschema

from .cluster import (
    ClusterConstraints,
    ConstraintError,
    MergeError,
    ScoreBreakdown,
    cluster_score,
    dumps_constraints,
    format_score,
    merge_cluster,
)
from .layout import Layout, RoutabilityReport
from .netlist import Netlist, NetlistError, devices_on_nets

__all__ = [
    "EVALUATE_CLUSTERS",
    "GET_GROUP_DEVICES_FROM_NETS",
    "SAVE_POTENTIAL_CLUSTER",
    "GET_BEST_CLUSTER_RESULT",
    "TOOL_NAMES",
    "Snapshot",
    "Session",
    "ToolCall",
    "Observation",
    "ToolArgumentError",
    "list_tools",
    "check_arguments",
    "invoke",
    "log_record",
]

EVALUATE_CLUSTERS = "evaluate_clusters"
GET_GROUP_DEVICES_FROM_NETS = "get_group_devices_from_nets"
SAVE_POTENTIAL_CLUSTER = "save_potential_cluster"
GET_BEST_CLUSTER_RESULT = "get_best_cluster_result"

_STRINGS = {"type": "array", "items": {"type": "string"}}

_TOOLS = (
    {
        "name": EVALUATE_CLUSTERS,
        "description": (
            "Score a set of cluster constraints with the simple cluster score "
            "(potential diffusion sharing plus common gates per device, summed "
            "over clusters). Pass 'clusters' to score a hypothetical set without "
            "saving it; omit it to score the current clusters."
        ),
        "usage": {"clusters": {"cluster_1": ["DEVICE", "..."]}},
        "arguments": {
            "type": "object",
            "properties": {
                "clusters": {"type": "object", "additionalProperties": _STRINGS}
            },
            "additionalProperties": False,
        },
    },
    {
        "name": GET_GROUP_DEVICES_FROM_NETS,
        "description": (
            "Return every transistor with a drain, gate or source terminal on "
            "any of the given nets."
        ),
        "usage": {"nets": ["NET", "..."]},
        "arguments": {
            "type": "object",
            "properties": {"nets": {**_STRINGS, "minItems": 1}},
            "required": ["nets"],
            "additionalProperties": False,
        },
    },
    {
        "name": SAVE_POTENTIAL_CLUSTER,
        "description": (
            "Add a new cluster made of the given devices to the current "
            "clusters. Devices already in another cluster are kept in whichever "
            "cluster they share more nets with. Returns the current clusters "
            "and their score."
        ),
        "usage": {"devices": ["DEVICE", "..."]},
        "arguments": {
            "type": "object",
            "properties": {"devices": {**_STRINGS, "minItems": 1}},
            "required": ["devices"],
            "additionalProperties": False,
        },
    },
    {
        "name": GET_BEST_CLUSTER_RESULT,
        "description": (
            "Restore the best-scoring cluster result saved so far and make it "
            "current. Use it to revert or restart when the search is stuck."
        ),
        "usage": {},
        "arguments": {"type": "object", "properties": {}, "additionalProperties": False},
    },
)

TOOL_NAMES = tuple(t["name"] for t in _TOOLS)


def list_tools() -> list[dict[str, Any]]:
    return json.loads(json.dumps(_TOOLS))


class ToolArgumentError(ValueError):
    pass


def check_arguments(tool: str, arguments: Any) -> None:
    desc = next((t for t in _TOOLS if t["name"] == tool), None)
    if desc is None:
        raise ToolArgumentError(
            f"unknown tool {tool!r}; available tools: {', '.join(TOOL_NAMES)}"
        )
    try:
        jsonschema.validate(arguments, desc["arguments"])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "arguments"
        raise ToolArgumentError(f"invalid arguments for {tool} ({where}): {exc.message}") from None


@dataclass(frozen=True)
class ToolCall:
    tool: str
    arguments: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"tool": self.tool, "arguments": json.loads(json.dumps(self.arguments))}


@dataclass(frozen=True)
class Observation:
    text: str
    ok: bool = True


@dataclass(frozen=True)
class Snapshot:
    constraints: ClusterConstraints
    score: ScoreBreakdown


@dataclass(frozen=True)
class Session:
    netlist: Netlist
    history: tuple[Snapshot, ...]
    layout: Layout | None = None
    routability: RoutabilityReport | None = None

    @classmethod
    def start(
        cls,
        netlist: Netlist,
        initial: Any = None,
        layout: Layout | None = None,
        routability: RoutabilityReport | None = None,
    ) -> "Session":
        cc = ClusterConstraints.of(initial)
        return cls(netlist, (Snapshot(cc, cluster_score(netlist, cc)),), layout, routability)

    @property
    def current(self) -> ClusterConstraints:
        return self.history[-1].constraints

    @property
    def score(self) -> ScoreBreakdown:
        return self.history[-1].score

    def best_index(self) -> int:
        """Index of the highest-scoring snapshot; the earliest wins ties."""
        best = 0
        for i, snap in enumerate(self.history):
            if snap.score.total > self.history[best].score.total:
                best = i
        return best

    def best(self) -> Snapshot:
        return self.history[self.best_index()]

    def push(self, cc: ClusterConstraints, score: ScoreBreakdown | None = None) -> "Session":
        if score is None:
            score = cluster_score(self.netlist, cc)
        return replace(self, history=self.history + (Snapshot(cc, score),))


def _render_state(cc: ClusterConstraints, sb: ScoreBreakdown) -> str:
    return (
        f"{dumps_constraints(cc)}\n"
        f"Cluster score: {format_score(sb.total)}\n"
        f"Number of clusters: {len(cc)}"
    )


def _evaluate(s: Session, args) -> tuple[Session, str]:
    cc = s.current if "clusters" not in args else ClusterConstraints.of(args["clusters"])
    sb = cluster_score(s.netlist, cc)
    lines = [f"Cluster score: {format_score(sb.total)}", f"Number of clusters: {len(cc)}"]
    for name, c in sb.per_cluster.items():
        lines.append(
            f"{name}: devices={c.t_c} diffusion_pairs={c.diffusion_pairs}"
            f" common_gates={c.common_gates} contribution={format_score(c.contribution)}"
        )
    return s, "\n".join(lines)


def _group(s: Session, args) -> tuple[Session, str]:
    return s, ", ".join(devices_on_nets(s.netlist, args["nets"]))


def _save(s: Session, args) -> tuple[Session, str]:
    cc = merge_cluster(s.netlist, s.current, args["devices"])
    s = s.push(cc)
    return s, "Current clusters:\n" + _render_state(s.current, s.score)


def _best(s: Session, args) -> tuple[Session, str]:
    i = s.best_index()
    snap = s.history[i]
    s = s.push(snap.constraints, snap.score)
    return s, f"Best cluster result (snapshot {i}):\n" + _render_state(snap.constraints, snap.score)


_DISPATCH = {
    EVALUATE_CLUSTERS: _evaluate,
    GET_GROUP_DEVICES_FROM_NETS: _group,
    SAVE_POTENTIAL_CLUSTER: _save,
    GET_BEST_CLUSTER_RESULT: _best,
}


def invoke(s: Session, call: ToolCall) -> tuple[Session, Observation]:
    try:
        check_arguments(call.tool, call.arguments)
        new, text = _DISPATCH[call.tool](s, call.arguments)
    except (ToolArgumentError, NetlistError, ConstraintError, MergeError) as exc:
        return s, Observation(f"Error: {exc}", ok=False)
    return new, Observation(text or "(no devices)", ok=True)


def log_record(call: ToolCall, obs: Observation, after: Session) -> dict[str, Any]:
    """One line of the session log."""
    return {
        **call.to_dict(),
        "ok": obs.ok,
        "observation": obs.text,
        "score_after": float(after.score.total),
    }
