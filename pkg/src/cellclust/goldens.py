"""Golden prompt corpus: a ``manifest.json`` naming each pinned file and the
inputs it is rendered from (paths relative to the manifest)."""

from __future__ import annotations

import difflib
import json
from pathlib import Path

from .agent import build_initial_prompt
from .prompts import (
    netlist_topology_prompt,
    physical_layout_prompt,
    routability_prompt,
    system_guidance,
)
from .runner import load_session
from .layout import parse_layout, parse_routability
from .netlist import read_netlist

KINDS = ("topology", "layout", "routability", "system", "initial")


def render(entry: dict, base: Path) -> str:
    def path(key):
        return str(base / entry[key]) if entry.get(key) else None

    kind = entry["kind"]
    if kind == "system":
        return system_guidance()
    if kind == "layout":
        n = read_netlist(path("netlist")) if entry.get("netlist") else None
        return physical_layout_prompt(parse_layout(Path(path("layout")).read_text(), n))
    if kind == "routability":
        n = read_netlist(path("netlist")) if entry.get("netlist") else None
        return routability_prompt(parse_routability(Path(path("routability")).read_text(), n))
    s = load_session(path("netlist"), path("constraints"), path("layout"), path("routability"))
    if kind == "topology":
        return netlist_topology_prompt(s.netlist, s.current, s.score)
    if kind == "initial":
        return build_initial_prompt(s)
    raise ValueError(f"unknown golden kind {kind!r}; expected one of {KINDS}")


def check(directory, bless: bool = False) -> list[str]:
    """Compare (or with ``bless`` rewrite) every golden; return problems found."""
    base = Path(directory)
    manifest = json.loads((base / "manifest.json").read_text(encoding="utf-8"))
    problems = []
    for entry in manifest:
        target = base / entry["file"]
        text = render(entry, base)
        if bless:
            target.write_text(text, encoding="utf-8")
            continue
        if not target.exists():
            problems.append(f"{entry['file']}: missing (run with --bless)")
            continue
        old = target.read_text(encoding="utf-8")
        if old != text:
            diff = "".join(
                difflib.unified_diff(
                    old.splitlines(True), text.splitlines(True), entry["file"], "regenerated"
                )
            )
            problems.append(f"{entry['file']}: differs\n{diff}")
    return problems
