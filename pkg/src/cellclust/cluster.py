"""Cluster constraints and the simple cluster score.

For every cluster, diffusion sharing is estimated by pairing same-net
source/drain terminals per device type, and common gates by matching PMOS
and NMOS gate terminals on the same net. Both counts are normalised by the
cluster's device count and summed over clusters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .netlist import Kind, Netlist, NetlistError

__all__ = [
    "ClusterConstraints",
    "ClusterScore",
    "ScoreBreakdown",
    "Issue",
    "ValidationReport",
    "ConstraintError",
    "MergeError",
    "cluster_score",
    "validate_constraints",
    "shared_net_count",
    "merge_cluster",
    "format_score",
    "constraints_blob",
    "dumps_constraints",
    "loads_constraints",
    "read_constraints",
]

RawConstraints = Union[
    "ClusterConstraints",
    Mapping[str, Sequence[str]],
    Sequence[tuple[str, Sequence[str]]],
]


@dataclass(frozen=True)
class ClusterConstraints:
    """Ordered named device clusters.

    Stored as ``(name, devices)`` pairs so that equality is order sensitive
    and duplicate names read from a file survive until validation.
    """

    items: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "items", tuple((str(k), tuple(v)) for k, v in self.items)
        )

    @classmethod
    def of(cls, raw: RawConstraints | None = None) -> "ClusterConstraints":
        if raw is None:
            return cls()
        if isinstance(raw, ClusterConstraints):
            return raw
        if isinstance(raw, Mapping):
            return cls(tuple(raw.items()))
        return cls(tuple(raw))

    @property
    def clusters(self) -> dict[str, tuple[str, ...]]:
        return dict(self.items)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def cluster_of(self, device: str) -> str | None:
        for name, devs in self.items:
            if device in devs:
                return name
        return None

    def to_dict(self) -> dict[str, list[str]]:
        return {k: list(v) for k, v in self.items}


@dataclass(frozen=True)
class ClusterScore:
    diffusion_pairs: int
    common_gates: int
    t_c: int
    contribution: Fraction


@dataclass(frozen=True)
class ScoreBreakdown:
    total: Fraction = Fraction(0)
    per_cluster: Mapping[str, ClusterScore] = field(default_factory=dict)

    def __float__(self) -> float:
        return float(self.total)


@dataclass(frozen=True)
class Issue:
    kind: str  # unknown_device | duplicate_device | empty_cluster | duplicate_cluster_name
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.issues

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        return "invalid cluster constraints:\n" + "\n".join(
            f"- {i.kind}: {i.detail}" for i in self.issues
        )


class ConstraintError(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(str(report))


class MergeError(ValueError):
    pass


def format_score(value) -> str:
    """Three decimals, round-half-even on the exact value."""
    if isinstance(value, ScoreBreakdown):
        value = value.total
    if isinstance(value, Fraction):
        d = Decimal(value.numerator) / Decimal(value.denominator)
    else:
        d = Decimal(value)
    return str(d.quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN))


def validate_constraints(n: Netlist, raw: RawConstraints) -> ValidationReport:
    cc = ClusterConstraints.of(raw)
    issues: list[Issue] = []
    seen_names: set[str] = set()
    owners: dict[str, list[str]] = {}
    for name, devs in cc.items:
        if name in seen_names:
            issues.append(Issue("duplicate_cluster_name", name))
        seen_names.add(name)
        if not devs:
            issues.append(Issue("empty_cluster", name))
        for d in devs:
            if d not in n:
                issues.append(Issue("unknown_device", f"{d} in {name}"))
            owners.setdefault(d, []).append(name)
    for d, where in owners.items():
        if len(where) > 1:
            issues.append(Issue("duplicate_device", f"{d} in {','.join(where)}"))
    return ValidationReport(tuple(issues))


def cluster_score(
    n: Netlist, cc: RawConstraints, exclude_nets: Iterable[str] = ()
) -> ScoreBreakdown:
    cc = ClusterConstraints.of(cc)
    report = validate_constraints(n, cc)
    if not report.valid:
        raise ConstraintError(report)
    excluded = frozenset(exclude_nets)
    per_cluster: dict[str, ClusterScore] = {}
    total = Fraction(0)
    for name, devs in cc.items:
        # net -> [pmos, nmos] occurrence counts
        diff: dict[str, list[int]] = {}
        gate: dict[str, list[int]] = {}
        for dev in devs:
            m = n.device(dev)
            col = 1 if m.kind is Kind.NMOS else 0
            for term, net in m.terminals():
                if net in excluded:
                    continue
                table = diff if term.is_diffusion else gate
                table.setdefault(net, [0, 0])[col] += 1
        pairs = sum(p // 2 + q // 2 for p, q in diff.values())
        gates = sum(min(p, q) for p, q in gate.values())
        contribution = Fraction(pairs + gates, len(devs))
        per_cluster[name] = ClusterScore(pairs, gates, len(devs), contribution)
        total += contribution
    return ScoreBreakdown(total, per_cluster)


def shared_net_count(n: Netlist, device: str, members: Iterable[str]) -> int:
    """Distinct nets of ``device`` that also touch some other member."""
    own = n.device(device).nets
    others: set[str] = set()
    for name in members:
        m = n.device(name)
        if name != device:
            others |= m.nets
    return len(own & others)


def _next_name(cc: ClusterConstraints) -> str:
    taken = set(cc.names)
    k = len(cc) + 1
    while f"cluster_{k}" in taken:
        k += 1
    return f"cluster_{k}"


def merge_cluster(
    n: Netlist, current: RawConstraints, new_members: Iterable[str]
) -> ClusterConstraints:
    """Add ``new_members`` as a fresh cluster, resolving duplicated devices.

    A device that already belongs to a cluster moves only when it shares
    strictly more nets with the other new members than with its current
    cluster mates. Ties leave it where it is.
    """
    current = ClusterConstraints.of(current)
    members = list(dict.fromkeys(new_members))
    if not members:
        raise MergeError("no devices given")
    unknown = [d for d in members if d not in n]
    if unknown:
        raise NetlistError("unknown devices: " + ", ".join(unknown))
    report = validate_constraints(n, current)
    if not report.valid:
        raise ConstraintError(report)

    existing = current.clusters
    moved: set[str] = set()
    kept: set[str] = set()
    for d in members:
        home = current.cluster_of(d)
        if home is None:
            continue
        stay = shared_net_count(n, d, existing[home])
        go = shared_net_count(n, d, members)
        (moved if go > stay else kept).add(d)

    new = [d for d in members if d not in kept]
    if not new:
        raise MergeError("merge produced empty cluster")
    items = []
    for name, devs in current.items:
        rest = tuple(d for d in devs if d not in moved)
        if rest:
            items.append((name, rest))
    out = ClusterConstraints(tuple(items))
    return ClusterConstraints(out.items + ((_next_name(current), tuple(new)),))


def constraints_blob(cc: RawConstraints) -> dict:
    return {"action": "Final Answer", "action_input": ClusterConstraints.of(cc).to_dict()}


def dumps_constraints(cc: RawConstraints) -> str:
    return json.dumps(constraints_blob(cc), indent=2)


class _Pairs(list):
    pass


def loads_constraints(text: str) -> ClusterConstraints:
    """Read a Final Answer blob or a bare ``{cluster: [devices]}`` object.

    Duplicate cluster names are preserved so validation can report them.
    """
    data = json.loads(text, object_pairs_hook=_Pairs)
    if not isinstance(data, _Pairs):
        raise ValueError("constraints must be a JSON object")
    keys = dict(data)
    if "action" in keys and "action_input" in keys:
        if keys["action"] != "Final Answer":
            raise ValueError(f"expected a Final Answer blob, got action {keys['action']!r}")
        data = keys["action_input"]
        if not isinstance(data, _Pairs):
            raise ValueError("action_input must be an object of clusters")
    items = []
    for name, devs in data:
        if not isinstance(devs, list) or not all(isinstance(d, str) for d in devs):
            raise ValueError(f"cluster {name!r} must map to a list of device names")
        items.append((name, tuple(devs)))
    return ClusterConstraints(tuple(items))


def read_constraints(path) -> ClusterConstraints:
    with open(path, encoding="utf-8") as f:
        return loads_constraints(f.read())
