import pytest

from cellclust.cluster import ClusterConstraints, cluster_score
from cellclust.goldens import check
from cellclust.layout import RoutabilityReport, UnroutedNet, parse_layout, parse_routability
from cellclust.prompts import (
    GuidanceConfig,
    netlist_topology_prompt,
    physical_layout_prompt,
    routability_prompt,
    system_guidance,
    tools_section,
)
from cellclust.tools import TOOL_NAMES
from conftest import GOLDENS


def test_goldens_match():
    assert check(GOLDENS) == []


def test_topology_is_pure(nand2):
    cc = ClusterConstraints.of({"c1": ["mp1", "mn1"]})
    sb = cluster_score(nand2, cc)
    a = netlist_topology_prompt(nand2, cc, sb)
    assert a == netlist_topology_prompt(nand2, cc, sb)
    assert "Cluster score: 0.500\nNumber of clusters: 1\n" in a
    assert a.startswith("MOSFET connection and description:\nmp1 d:OUT g:A s:VDD pmos\n")


def test_topology_empty_constraints(nand2):
    cc = ClusterConstraints.of({})
    text = netlist_topology_prompt(nand2, cc, cluster_score(nand2, cc))
    assert '"action_input": {}' in text
    assert text.endswith("Cluster score: 0.000\nNumber of clusters: 0\n")


def test_layout_lines_column_major():
    lay = parse_layout({"columns": 2, "rows": 2, "sites": [
        {"x": 1, "y": 1, "net": "A", "device": "m1", "terminal": "g"}]})
    lines = physical_layout_prompt(lay).splitlines()
    assert len(lines) == 5
    assert [l.split(":")[0] for l in lines[1:]] == [
        "(x=0, y=0)", "(x=0, y=1)", "(x=1, y=0)", "(x=1, y=1)"]
    assert lines[1] == "(x=0, y=0): net=dummy device=dummy terminal=-"
    assert lines[4] == "(x=1, y=1): net=A device=m1 terminal=gate"


def test_routability_prompt_empty_and_full(fixtures):
    assert routability_prompt(RoutabilityReport()) == "Routability report:\nAll nets routed.\n"
    text = routability_prompt(parse_routability((fixtures / "seq_routability.json").read_text()))
    assert "Unrouted net NET017: terminal x-coordinate pairs: (2, 5), (11, 14)" in text
    assert "Devices in unrouted region: mm3, mm4, mm12" in text
    bare = routability_prompt(RoutabilityReport((UnroutedNet("X"),)))
    assert "pairs: none" in bare


def test_guidance_override():
    text = system_guidance(GuidanceConfig("Be terse."))
    assert text.startswith("Be terse.\n")
    assert tools_section() in text
    with pytest.raises(ValueError):
        GuidanceConfig("  ")


def test_tools_section_lists_every_tool():
    text = tools_section()
    for name in TOOL_NAMES:
        assert f"- {name}: " in text
